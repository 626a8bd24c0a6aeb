#include "coreshell/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "coreshell/analysis.hpp"

namespace coreshell {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr double kBacktrackFactor = 0.5;
constexpr double kMinStep = 1e-12;

// Phi(w) = E(w) + sigma/2 ||w - anchor||_M^2
struct Objective {
    const AssembledSystem& sys;
    const ModelParams& params;
    double sigma{0.0};
    const Vector* anchor{nullptr};

    double value(const Vector& w) const {
        double v = detail::energy(sys, w, params);
        if (sigma != 0.0) {
            const Vector d = w - *anchor;
            v += 0.5 * sigma * d.dot(sys.mass * d);
        }
        return v;
    }

    Vector gradient(const Vector& w) const {
        Vector g = detail::gradient(sys, w, params);
        if (sigma != 0.0) {
            const Vector md = sys.mass * (w - *anchor);
            for (std::size_t i = 0; i < sys.mask.size(); ++i) {
                if (!sys.mask[i]) {
                    g[static_cast<Eigen::Index>(i)] += sigma * md[static_cast<Eigen::Index>(i)];
                }
            }
        }
        return g;
    }

    SparseMatrix hessian(const Vector& w) const {
        SparseMatrix j = sys.stiffness_free;
        if (sigma != 0.0) {
            j += sigma * sys.mass_free;
        }
        const Vector d = sys.restrict_to_free(detail::reaction_jacobian_diagonal(sys, w, params));
        for (Eigen::Index k = 0; k < d.size(); ++k) {
            j.coeffRef(k, k) += d[k];
        }
        return j;
    }

    /// Sum of the magnitudes of the terms in value(w); round-off in value()
    /// is a small multiple of eps times this.
    double magnitude(const Vector& w) const {
        double m = 0.5 * std::abs(w.dot(sys.stiffness * w));
        if (params.consumption) {
            for (Eigen::Index i = 0; i < w.size(); ++i) {
                m += sys.core_weights[i] * std::abs(phi_antiderivative(w[i], params));
            }
        }
        if (sigma != 0.0) {
            const Vector d = w - *anchor;
            m += 0.5 * sigma * d.dot(sys.mass * d);
        }
        return m;
    }

    /// Residual level below which the gradient is dominated by round-off in
    /// w + step and in the products K w, sigma M (w - anchor).
    double roundoff_floor(const Vector& w) const {
        constexpr double eps = std::numeric_limits<double>::epsilon();
        const auto row_max = [](const SparseMatrix& a) {
            return a.rows() == 0 ? 0.0 : (a.cwiseAbs() * Vector::Ones(a.cols())).maxCoeff();
        };
        if (operator_scale < 0.0) {
            operator_scale = row_max(sys.stiffness_free) + sigma * row_max(sys.mass_free);
        }
        double size = w.size() > 0 ? w.lpNorm<Eigen::Infinity>() : 0.0;
        if (anchor != nullptr && anchor->size() > 0) {
            size = std::max(size, anchor->lpNorm<Eigen::Infinity>());
        }
        return 8.0 * eps * std::sqrt(static_cast<double>(sys.free_size())) * operator_scale * size;
    }

    mutable double operator_scale{-1.0};
};

NonlinearSolveResult minimise(const Objective& obj, const SolverConfig& cfg, const DiscreteField& start) {
    const AssembledSystem& sys = obj.sys;
    NewtonReport report;
    report.residual_scale = residual_scale(sys);
    const double tol = cfg.newton_tol * report.residual_scale;
    constexpr double eps = std::numeric_limits<double>::epsilon();

    Vector w = start.values;
    double phi_w = obj.value(w);
    Vector g = obj.gradient(w);
    double g_norm = g.norm();
    bool polishing = false;

    while (true) {
        report.residual_history.push_back(g_norm);
        if (polishing || g_norm == 0.0) {
            report.status = NewtonStatus::converged;
            break;
        }
        // Once the tolerance is met, one more Newton step removes the
        // remaining error down to round-off; it is kept only if it helps.
        polishing = g_norm <= std::max(tol, obj.roundoff_floor(w));
        if (!polishing && report.iterations >= cfg.newton_max_iter) {
            report.status = NewtonStatus::max_iterations;
            report.message = fmt::format("no convergence after {} iterations (residual {:.3e}, tolerance {:.3e})",
                                         report.iterations, g_norm, tol);
            break;
        }

        Vector step;
        try {
            const Vector rhs = -sys.restrict_to_free(g);
            const SparseMatrix hess = obj.hessian(w);
            Vector free_step;
            try {
                free_step = solve_spd(hess, rhs, cfg.linear_tol).x;
            } catch (const LinearSolveError&) {
                // On fine radial meshes CG stagnates above linear_tol; an
                // inexact Newton step at sqrt(linear_tol) still converges.
                const double relaxed = std::sqrt(cfg.linear_tol);
                if (relaxed <= cfg.linear_tol) {
                    throw;
                }
                free_step = solve_spd(hess, rhs, relaxed).x;
            }
            step = sys.extend_from_free(free_step);
        } catch (const LinearSolveError& err) {
            if (polishing) {
                report.status = NewtonStatus::converged;
                break;
            }
            report.status = NewtonStatus::linear_solver_failure;
            report.message = err.what();
            break;
        }
        ++report.iterations;

        const double slope = g.dot(step);
        double alpha = 1.0;
        bool accepted = false;
        Vector trial;
        Vector g_trial;
        double phi_trial = 0.0;
        while (alpha >= kMinStep) {
            trial = w + alpha * step;
            phi_trial = obj.value(trial);
            if (phi_trial <= phi_w + kArmijoSlope * alpha * slope) {
                g_trial = obj.gradient(trial);
                accepted = true;
                break;
            }
            // Energy differences below round-off cannot certify descent;
            // fall back on the residual.
            if (std::abs(phi_trial - phi_w) <= 64.0 * eps * std::max(obj.magnitude(w), obj.magnitude(trial))) {
                g_trial = obj.gradient(trial);
                if (g_trial.norm() < g_norm) {
                    accepted = true;
                    break;
                }
            }
            if (polishing) {
                break;
            }
            alpha *= kBacktrackFactor;
        }

        if (!accepted) {
            if (polishing) {
                report.status = NewtonStatus::converged;
                break;
            }
            report.status = NewtonStatus::line_search_failure;
            report.message = fmt::format("line search failed at iteration {} (residual {:.3e})", report.iterations,
                                         g_norm);
            break;
        }
        if (polishing && g_trial.norm() > g_norm) {
            report.status = NewtonStatus::converged;
            break;
        }
        w = std::move(trial);
        phi_w = phi_trial;
        g = std::move(g_trial);
        g_norm = g.norm();
    }

    return NonlinearSolveResult{sys.make_field(std::move(w)), std::move(report)};
}

void check_field(const AssembledSystem& sys, const DiscreteField& u, const char* op) {
    if (u.size() != sys.size()) {
        throw std::invalid_argument(fmt::format("{}: field has {} entries, system has {}", op, u.size(), sys.size()));
    }
    if (!u.satisfies_mask()) {
        throw std::invalid_argument(fmt::format("{}: field is non-zero on Dirichlet nodes", op));
    }
}

double m_norm(const AssembledSystem& sys, const Vector& v) { return std::sqrt(std::max(0.0, v.dot(sys.mass * v))); }

std::size_t step_count(const SolverConfig& cfg) {
    return static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
}

}  // namespace

void SolverConfig::validate() const {
    if (!(newton_tol > 0.0)) {
        throw std::invalid_argument("solver: newton_tol must be positive");
    }
    if (newton_max_iter < 1) {
        throw std::invalid_argument("solver: newton_max_iter must be >= 1");
    }
    if (!(linear_tol > 0.0)) {
        throw std::invalid_argument("solver: linear_tol must be positive");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("solver: dt must be positive");
    }
    if (!(t_end > 0.0)) {
        throw std::invalid_argument("solver: t_end must be positive");
    }
}

std::string to_string(NewtonStatus status) {
    switch (status) {
        case NewtonStatus::converged: return "converged";
        case NewtonStatus::max_iterations: return "max_iterations";
        case NewtonStatus::line_search_failure: return "line_search_failure";
        case NewtonStatus::linear_solver_failure: return "linear_solver_failure";
    }
    return "unknown";
}

std::vector<double> NewtonReport::quadratic_ratios() const {
    std::vector<double> ratios;
    for (std::size_t k = 0; k + 1 < residual_history.size(); ++k) {
        const double r = residual_history[k];
        if (r > 0.0) {
            ratios.push_back(residual_history[k + 1] / (r * r));
        }
    }
    return ratios;
}

LinearSolveResult solve_spd(const SparseMatrix& a, const Vector& rhs, double tol, int max_iter) {
    const Eigen::Index n = rhs.size();
    if (a.rows() != n || a.cols() != n) {
        throw std::invalid_argument("solve_spd: matrix and right-hand side sizes differ");
    }
    if (max_iter <= 0) {
        max_iter = static_cast<int>(10 * n + 100);
    }
    LinearSolveResult result;
    result.x = Vector::Zero(n);
    const double b_norm = rhs.norm();
    if (b_norm == 0.0) {
        return result;
    }

    Vector inv_diag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = a.coeff(i, i);
        if (!(d > 0.0)) {
            throw LinearSolveError(fmt::format("solve_spd: non-positive diagonal entry at row {}", i), 0);
        }
        inv_diag[i] = 1.0 / d;
    }

    Vector r = rhs;
    Vector z = inv_diag.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    for (int k = 1; k <= max_iter; ++k) {
        const Vector ap = a * p;
        const double curvature = p.dot(ap);
        if (!(curvature > 0.0)) {
            throw LinearSolveError(fmt::format("solve_spd: breakdown (non-positive curvature) at iteration {}", k),
                                   k);
        }
        const double alpha = rz / curvature;
        result.x += alpha * p;
        r -= alpha * ap;
        result.iterations = k;
        if (r.norm() <= tol * b_norm) {
            // confirm with the true residual, restart if recursion drifted
            r = rhs - a * result.x;
            result.relative_residual = r.norm() / b_norm;
            if (result.relative_residual <= tol) {
                return result;
            }
            z = inv_diag.cwiseProduct(r);
            p = z;
            rz = r.dot(z);
            continue;
        }
        z = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    result.relative_residual = (rhs - a * result.x).norm() / b_norm;
    throw LinearSolveError(fmt::format("solve_spd: relative residual {:.3e} above {:.3e} after {} iterations",
                                       result.relative_residual, tol, max_iter),
                           max_iter);
}

double residual_scale(const AssembledSystem& sys) {
    const double s = sys.core_weights.norm();
    return s > 0.0 ? s : 1.0;
}

NonlinearSolveResult stationary_solve(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                                      const DiscreteField& u_init) {
    check_field(sys, u_init, "stationary_solve");
    return minimise(Objective{sys, params, 0.0, nullptr, -1.0}, cfg, u_init);
}

NonlinearSolveResult step_implicit_euler(const AssembledSystem& sys, const ModelParams& params,
                                         const SolverConfig& cfg, const DiscreteField& u_n) {
    check_field(sys, u_n, "step_implicit_euler");
    if (!(cfg.dt > 0.0)) {
        throw std::invalid_argument("step_implicit_euler: dt must be positive");
    }
    return minimise(Objective{sys, params, 1.0 / cfg.dt, &u_n.values, -1.0}, cfg, u_n);
}

NonlinearSolveResult solve_resolvent(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                                     const DiscreteField& g) {
    check_field(sys, g, "solve_resolvent");
    return minimise(Objective{sys, params, 1.0, &g.values, -1.0}, cfg, g);
}

EvolutionTrace evolve(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                      const DiscreteField& u0, const DiscreteField& reference) {
    cfg.validate();
    check_field(sys, u0, "evolve");
    check_field(sys, reference, "evolve");

    EvolutionTrace trace;
    trace.dt = cfg.dt;
    trace.t_end = cfg.t_end;
    trace.newton_tol = cfg.newton_tol;

    const double e_ref = detail::energy(sys, reference.values, params);
    const double ref_h = norms(sys, reference).h_norm;
    trace.reference_h_norm = ref_h;

    auto record = [&](double t, const DiscreteField& u, int iters) {
        const auto [err_h, err_v] = norms(sys, sys.make_field(u.values - reference.values));
        trace.times.push_back(t);
        trace.energies.push_back(detail::energy(sys, u.values, params));
        trace.err_H.push_back(err_h);
        trace.err_V.push_back(err_v);
        trace.newton_iters.push_back(iters);
    };

    record(0.0, u0, 0);
    const double energy_slack = 1e-12 * std::max(std::abs(trace.energies.front()), std::abs(e_ref));
    const double error_slack = 1e-12 * std::max(trace.err_H.front(), ref_h);

    DiscreteField u = u0;
    const std::size_t steps = step_count(cfg);
    for (std::size_t n = 1; n <= steps; ++n) {
        NonlinearSolveResult next = step_implicit_euler(sys, params, cfg, u);
        if (!next.report.converged()) {
            trace.status = TraceStatus::step_failed;
            trace.failed_step = n;
            break;
        }
        const double e_prev = trace.energies.back();
        const double err_prev = trace.err_H.back();
        const double jump = m_norm(sys, next.u.values - u.values);
        record(static_cast<double>(n) * cfg.dt, next.u, next.report.iterations);

        const double e_next = trace.energies.back();
        if (e_next > e_prev + energy_slack) {
            trace.energy_monotone = false;
        }
        if (e_next + jump * jump / (2.0 * cfg.dt) > e_prev + energy_slack) {
            trace.proximal_inequality = false;
        }
        if (trace.err_H.back() > err_prev + error_slack) {
            trace.error_monotone = false;
        }
        u = std::move(next.u);
    }
    trace.final_state = std::move(u);
    return trace;
}

EvolutionTrace evolve(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                      const DiscreteField& u0) {
    NonlinearSolveResult stationary = stationary_solve(sys, params, cfg, sys.zero_field());
    if (!stationary.report.converged()) {
        throw std::runtime_error("evolve: stationary solve failed: " + stationary.report.message);
    }
    return evolve(sys, params, cfg, u0, stationary.u);
}

std::vector<double> trajectory_distances(const AssembledSystem& sys, const ModelParams& params,
                                         const SolverConfig& cfg, const DiscreteField& u0,
                                         const DiscreteField& v0) {
    cfg.validate();
    std::vector<double> distances{m_norm(sys, u0.values - v0.values)};
    DiscreteField u = u0;
    DiscreteField v = v0;
    const std::size_t steps = step_count(cfg);
    for (std::size_t n = 1; n <= steps; ++n) {
        auto next_u = step_implicit_euler(sys, params, cfg, u);
        auto next_v = step_implicit_euler(sys, params, cfg, v);
        if (!next_u.report.converged() || !next_v.report.converged()) {
            throw std::runtime_error(fmt::format("trajectory_distances: step {} failed", n));
        }
        u = std::move(next_u.u);
        v = std::move(next_v.u);
        distances.push_back(m_norm(sys, u.values - v.values));
    }
    return distances;
}

void EvolutionTrace::check() const {
    const std::size_t n = times.size();
    if (energies.size() != n || err_H.size() != n || err_V.size() != n || newton_iters.size() != n) {
        throw std::runtime_error("trace: column lengths differ");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(times[i] > times[i - 1])) {
            throw std::runtime_error(fmt::format("trace: times not strictly increasing at index {}", i));
        }
    }
}

}  // namespace coreshell
