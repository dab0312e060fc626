#include "mmflow/qp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mmflow/errors.hpp"

namespace mmflow {

double Halfspace::dot(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < index.size(); ++i) s += value[i] * x[index[i]];
    return s;
}

Polytope::Polytope(Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<Halfspace> halfspaces)
    : lower_(std::move(lower)), upper_(std::move(upper)), halfspaces_(std::move(halfspaces)) {
    if (lower_.size() != upper_.size()) throw DomainError("polytope: bound vectors differ in length");
    if ((lower_.array() > upper_.array()).any()) throw DomainError("polytope: lower bound exceeds upper bound");
    for (auto& h : halfspaces_) {
        if (h.index.size() != h.value.size()) throw DomainError("polytope: halfspace index/value length mismatch");
        h.norm2 = 0.0;
        for (std::size_t j = 0; j < h.index.size(); ++j) {
            if (h.index[j] < 0 || h.index[j] >= lower_.size()) throw DomainError("polytope: halfspace index out of range");
            h.norm2 += h.value[j] * h.value[j];
        }
    }
    std::erase_if(halfspaces_, [](const Halfspace& h) { return h.norm2 == 0.0; });

    std::vector<int> position(lower_.size(), -1);
    for (const auto& h : halfspaces_) {
        for (int i : h.index) position[i] = 0;
    }
    for (int i = 0; i < static_cast<int>(position.size()); ++i) {
        if (position[i] == 0) {
            position[i] = static_cast<int>(coupled_.size());
            coupled_.push_back(i);
        }
    }
    local_ = halfspaces_;
    for (auto& h : local_) {
        for (int& i : h.index) i = position[i];
    }
}

Polytope Polytope::from_route_columns(Eigen::VectorXd lower, Eigen::VectorXd upper,
                                      const std::vector<const Eigen::SparseMatrix<double>*>& columns) {
    std::map<std::pair<std::vector<int>, std::vector<double>>, bool> seen;
    std::vector<Halfspace> halfspaces;
    for (const auto* B : columns) {
        for (int m = 0; m < B->outerSize(); ++m) {
            Halfspace h;
            for (Eigen::SparseMatrix<double>::InnerIterator it(*B, m); it; ++it) {
                h.index.push_back(static_cast<int>(it.row()));
                h.value.push_back(it.value());
            }
            if (seen.emplace(std::make_pair(h.index, h.value), true).second) halfspaces.push_back(std::move(h));
        }
    }
    return Polytope(std::move(lower), std::move(upper), std::move(halfspaces));
}

Eigen::VectorXd Polytope::project(const Eigen::VectorXd& x, const QpSettings& settings, ProjectionState* state) const {
    if (x.size() != lower_.size()) throw DomainError("polytope: point has wrong dimension");
    Eigen::VectorXd y = x.cwiseMax(lower_).cwiseMin(upper_);
    if (halfspaces_.empty() || max_halfspace_violation(y) == 0.0) return y;

    // Dykstra on the coupled coordinates only; the others are already final.
    // The halfspace increments are multiples of a_i, so a scalar per halfspace suffices.
    const std::size_t n = coupled_.size();
    ProjectionState fresh;
    ProjectionState& s = state ? *state : fresh;
    if (s.halfspace.size() != local_.size() || s.box.size() != n) {
        s.halfspace.assign(local_.size(), 0.0);
        s.box.assign(n, 0.0);
    }
    std::vector<double>& mu = s.halfspace;
    std::vector<double>& box_increment = s.box;
    // Invariant: w = x - sum of all increments.
    std::vector<double> w(n), lo(n), hi(n), previous(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = x[coupled_[i]] - box_increment[i];
        lo[i] = lower_[coupled_[i]];
        hi[i] = upper_[coupled_[i]];
    }
    for (std::size_t i = 0; i < local_.size(); ++i) {
        for (std::size_t j = 0; j < local_[i].index.size(); ++j) w[local_[i].index[j]] -= mu[i] * local_[i].value[j];
    }
    for (int sweep = 0; sweep < settings.max_projection_sweeps; ++sweep) {
        previous = w;
        for (std::size_t i = 0; i < local_.size(); ++i) {
            const Halfspace& h = local_[i];
            double az = 0.0;
            for (std::size_t j = 0; j < h.index.size(); ++j) {
                w[h.index[j]] += mu[i] * h.value[j];
                az += h.value[j] * w[h.index[j]];
            }
            const double shift = az > 0.0 ? az / h.norm2 : 0.0;
            if (shift != 0.0) {
                for (std::size_t j = 0; j < h.index.size(); ++j) w[h.index[j]] -= shift * h.value[j];
            }
            mu[i] = shift;
        }
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = w[i] + box_increment[i];
            w[i] = std::clamp(z, lo[i], hi[i]);
            box_increment[i] = z - w[i];
            change = std::max(change, std::abs(w[i] - previous[i]));
        }
        if (change <= settings.projection_tol) {
            double violation = 0.0;
            for (const auto& h : local_) {
                double s = 0.0;
                for (std::size_t j = 0; j < h.index.size(); ++j) s += h.value[j] * w[h.index[j]];
                violation = std::max(violation, s / std::sqrt(h.norm2));
            }
            if (violation <= settings.projection_tol) break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) y[coupled_[i]] = w[i];
    return y;
}

double Polytope::max_halfspace_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (const auto& h : halfspaces_) worst = std::max(worst, h.dot(x) / std::sqrt(h.norm2));
    return worst;
}

double Polytope::max_box_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        worst = std::max({worst, lower_[i] - x[i], x[i] - upper_[i]});
    }
    return worst;
}

double QuadraticObjective::value(const Eigen::VectorXd& x) const {
    return x.dot(apply(x)) + b.dot(x);
}

Eigen::VectorXd QuadraticObjective::gradient(const Eigen::VectorXd& x) const {
    return apply(x) + apply_transpose(x) + b;
}

QuadraticObjective QuadraticObjective::dense(const Eigen::MatrixXd& H, Eigen::VectorXd b) {
    return QuadraticObjective{[H](const Eigen::VectorXd& x) -> Eigen::VectorXd { return H * x; },
                              [H](const Eigen::VectorXd& x) -> Eigen::VectorXd { return H.transpose() * x; },
                              std::move(b)};
}

double curvature_bound(const QuadraticObjective& objective, int n) {
    if (n == 0) return 0.0;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * (i % 7);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXd w = objective.apply(v) + objective.apply_transpose(v);
        const double norm = w.norm();
        if (norm == 0.0) return estimate;
        estimate = norm;
        v = w / norm;
    }
    return estimate;
}

namespace {

QpResult ascend(const QuadraticObjective& objective, const Polytope& feasible, const Eigen::VectorXd& start,
                const QpSettings& settings, double lipschitz) {
    QpResult r;
    ProjectionState state;
    r.x = feasible.project(start, settings, &state);
    r.objective = objective.value(r.x);
    r.start_objective = r.objective;
    double step = lipschitz > 1e-12 ? 1.0 / (1.05 * lipschitz) : 1.0;

    // Accelerated projected gradient; momentum is dropped whenever the
    // extrapolated step fails to improve, which keeps the iterates monotone.
    Eigen::VectorXd previous = r.x;
    double t = 1.0;
    for (int it = 0; it < settings.max_iters; ++it) {
        r.iterations = it + 1;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const Eigen::VectorXd y = r.x + ((t - 1.0) / t_next) * (r.x - previous);
        Eigen::VectorXd next = feasible.project(y + step * objective.gradient(y), settings, &state);
        double next_value = objective.value(next);
        t = t_next;
        if (next_value < r.objective) {
            t = 1.0;
            const Eigen::VectorXd grad = objective.gradient(r.x);
            next = feasible.project(r.x + step * grad, settings, &state);
            next_value = objective.value(next);
            int backtracks = 0;
            while (next_value < r.objective && backtracks < 30) {
                step *= 0.5;
                next = feasible.project(r.x + step * grad, settings, &state);
                next_value = objective.value(next);
                ++backtracks;
            }
            if (next_value < r.objective) {
                r.converged = true;
                break;
            }
        }
        const double moved = (next - r.x).norm() / step;
        previous = std::move(r.x);
        r.x = std::move(next);
        r.objective = next_value;
        if (moved <= settings.tol * std::max(1.0, r.x.norm())) {
            r.converged = true;
            break;
        }
    }
    return r;
}

}  // namespace

QpResult maximize_qp(const QuadraticObjective& objective, const Polytope& feasible, const Eigen::VectorXd& start,
                     const QpSettings& settings, int vertex_probe_limit) {
    const int n = feasible.dimension();
    if (objective.b.size() != n || start.size() != n) throw DomainError("maximize_qp: dimension mismatch");
    const double lipschitz = curvature_bound(objective, n);

    QpResult best = ascend(objective, feasible, start, settings, lipschitz);
    if (n > vertex_probe_limit) return best;

    const double start_objective = best.start_objective;
    for (long mask = 0; mask < (1L << n); ++mask) {
        Eigen::VectorXd corner(n);
        for (int i = 0; i < n; ++i) corner[i] = (mask >> i) & 1 ? feasible.upper()[i] : feasible.lower()[i];
        QpResult candidate = ascend(objective, feasible, corner, settings, lipschitz);
        if (candidate.objective > best.objective) best = std::move(candidate);
    }
    best.start_objective = start_objective;
    return best;
}

}  // namespace mmflow
