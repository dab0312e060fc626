#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmflow/bargaining.hpp"
#include "mmflow/equilibrium.hpp"
#include "mmflow/incentive.hpp"
#include "mmflow/scenario.hpp"

namespace mmflow {

// Report columns (all numbers with 6 significant digits):
//   equilibrium.csv  link,flow,cost,profit
//   incentive.csv    link,J,flow,cost,profit        (cost and profit include J)
//   sharing.csv      provider,before,after,compensation,final,increase
//   trace.csv        iteration,residual              (equilibrium runs)
//                    iteration,delta_f,delta_J,profit (incentive runs)
std::string format_number(double value);

void write_equilibrium_csv(std::ostream& out, const Scenario& scenario, const FlowVector& f, const IncentiveVector& J);
void write_incentive_csv(std::ostream& out, const Scenario& scenario, const FlowVector& f, const IncentiveVector& J);
void write_sharing_csv(std::ostream& out, const std::vector<std::string>& providers, const SharingResult& sharing);
void write_equilibrium_trace_csv(std::ostream& out, const std::vector<double>& residuals);
void write_incentive_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
    std::vector<double> numbers(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace mmflow
