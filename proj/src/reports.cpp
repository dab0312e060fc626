#include "mmflow/reports.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mmflow/errors.hpp"

namespace mmflow {

std::string format_number(double value) {
    if (value == 0.0) value = 0.0;  // no "-0"
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.6g", value);
    return buffer;
}

void write_equilibrium_csv(std::ostream& out, const Scenario& scenario, const FlowVector& f, const IncentiveVector& J) {
    const CostVector c = link_cost(f, J, scenario.cost);
    const Eigen::VectorXd profit = scenario.profit(f) + J;
    out << "link,flow,cost,profit\n";
    for (int l = 0; l < scenario.link_count(); ++l) {
        out << l + 1 << ',' << format_number(f[l]) << ',' << format_number(c[l]) << ',' << format_number(profit[l])
            << '\n';
    }
}

void write_incentive_csv(std::ostream& out, const Scenario& scenario, const FlowVector& f, const IncentiveVector& J) {
    const CostVector c = link_cost(f, J, scenario.cost);
    const Eigen::VectorXd profit = scenario.profit(f) + J;
    out << "link,J,flow,cost,profit\n";
    for (int l = 0; l < scenario.link_count(); ++l) {
        out << l + 1 << ',' << format_number(J[l]) << ',' << format_number(f[l]) << ',' << format_number(c[l]) << ','
            << format_number(profit[l]) << '\n';
    }
}

void write_sharing_csv(std::ostream& out, const std::vector<std::string>& providers, const SharingResult& s) {
    out << "provider,before,after,compensation,final,increase\n";
    for (std::size_t i = 0; i < providers.size(); ++i) {
        out << providers[i] << ',' << format_number(s.t[i]) << ',' << format_number(s.post[i]) << ','
            << format_number(s.compensation[i]) << ',' << format_number(s.R_star[i]) << ','
            << format_number(s.increase[i]) << '\n';
    }
}

void write_equilibrium_trace_csv(std::ostream& out, const std::vector<double>& residuals) {
    out << "iteration,residual\n";
    for (std::size_t k = 0; k < residuals.size(); ++k) out << k + 1 << ',' << format_number(residuals[k]) << '\n';
}

void write_incentive_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
    out << "iteration,delta_f,delta_J,profit\n";
    for (const auto& p : trace) {
        out << p.iteration << ',' << format_number(p.delta_f) << ',' << format_number(p.delta_J) << ','
            << format_number(p.profit) << '\n';
    }
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
    const int col = column(name);
    if (col < 0) throw SchemaError("csv: missing column '" + name + "'");
    std::vector<double> out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) <= col) throw SchemaError("csv: short row " + std::to_string(r + 2));
        try {
            std::size_t used = 0;
            out.push_back(std::stod(rows[r][col], &used));
            if (used != rows[r][col].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw SchemaError("csv: row " + std::to_string(r + 2) + ", column '" + name + "': not a number");
        }
    }
    return out;
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    auto split = [](const std::string& text) {
        std::vector<std::string> cells;
        std::stringstream ss(text);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            table.header = split(line);
            first = false;
        } else {
            table.rows.push_back(split(line));
        }
    }
    if (first) throw SchemaError("csv: empty input");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path.string());
    try {
        return read_csv(in);
    } catch (const SchemaError& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

}  // namespace mmflow
