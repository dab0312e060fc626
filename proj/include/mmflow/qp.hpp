#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mmflow {

struct QpSettings {
    int max_iters = 2000;          // projected-gradient steps
    double tol = 1e-9;             // on the projected-gradient norm
    int max_projection_sweeps = 2000;
    double projection_tol = 1e-10;
};

// Sparse row a with the constraint a^T x <= 0.
struct Halfspace {
    std::vector<int> index;
    std::vector<double> value;
    double norm2 = 0.0;

    double dot(const Eigen::VectorXd& x) const;
};

// Dykstra increments kept between projections of nearby points.
struct ProjectionState {
    std::vector<double> halfspace;
    std::vector<double> box;
};

// {x : lower <= x <= upper, a_i^T x <= 0 for all i}
class Polytope {
public:
    Polytope(Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<Halfspace> halfspaces);

    // Builds one halfspace per distinct column of the given matrices.
    static Polytope from_route_columns(Eigen::VectorXd lower, Eigen::VectorXd upper,
                                       const std::vector<const Eigen::SparseMatrix<double>*>& columns);

    int dimension() const { return static_cast<int>(lower_.size()); }
    const Eigen::VectorXd& lower() const { return lower_; }
    const Eigen::VectorXd& upper() const { return upper_; }
    const std::vector<Halfspace>& halfspaces() const { return halfspaces_; }

    // Euclidean projection by Dykstra's alternating projections (box last, so
    // the result always satisfies the bounds exactly). A state carried over
    // from a previous call resumes from its increments.
    Eigen::VectorXd project(const Eigen::VectorXd& x, const QpSettings& settings,
                            ProjectionState* state = nullptr) const;

    // max_i (a_i^T x)^+ and the largest bound violation.
    double max_halfspace_violation(const Eigen::VectorXd& x) const;
    double max_box_violation(const Eigen::VectorXd& x) const;

private:
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    std::vector<Halfspace> halfspaces_;
    // Coordinates touched by some halfspace, and the halfspaces re-indexed onto them.
    std::vector<int> coupled_;
    std::vector<Halfspace> local_;
};

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// x^T H x + b^T x with H available as x -> Hx and x -> H^T x.
struct QuadraticObjective {
    LinearMap apply;
    LinearMap apply_transpose;
    Eigen::VectorXd b;

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

    static QuadraticObjective dense(const Eigen::MatrixXd& H, Eigen::VectorXd b);
};

// Spectral norm of H + H^T (power iteration), the Lipschitz constant of the gradient.
double curvature_bound(const QuadraticObjective& objective, int n);

struct QpResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    double start_objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Projected gradient ascent from the projection of `start`. Monotone in the
// objective (backtracks whenever a step would decrease it). When the dimension
// is at most `vertex_probe_limit`, every projected box corner is probed as an
// extra start and the best local maximizer is returned.
QpResult maximize_qp(const QuadraticObjective& objective, const Polytope& feasible, const Eigen::VectorXd& start,
                     const QpSettings& settings, int vertex_probe_limit = 10);

}  // namespace mmflow
