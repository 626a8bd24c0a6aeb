#pragma once

/**
 * @file solvers.hpp
 * @brief Stationary and time-dependent solvers built on the convex energy.
 *
 * Every nonlinear solve here minimises a strictly convex functional
 *
 *   Phi(w) = E(w) + sigma/2 * ||w - z||_M^2
 *
 * by Newton's method with an Armijo backtracking line search on Phi:
 *  - sigma = 0            stationary state u*,
 *  - sigma = 1/dt, z = u_n  one implicit-Euler step,
 *  - sigma = 1,    z = g    the resolvent (I + A) u = M g.
 *
 * Newton stops once ||grad Phi|| <= newton_tol * ||M1||, or once it drops
 * below the round-off level of evaluating grad Phi (relevant for very
 * small dt, where sigma M dominates). Newton systems are solved to
 * linear_tol, or to sqrt(linear_tol) when CG stagnates above linear_tol.
 */

#include <stdexcept>
#include <string>
#include <vector>

#include "coreshell/discretization.hpp"
#include "coreshell/trace.hpp"

namespace coreshell {

struct SolverConfig {
    double newton_tol{1e-10};
    int newton_max_iter{50};
    double dt{0.05};
    double t_end{10.0};
    double linear_tol{1e-12};

    void validate() const;
};

class LinearSolveError : public std::runtime_error {
public:
    LinearSolveError(const std::string& what, int iterations)
        : std::runtime_error(what), iterations_(iterations) {}
    int iterations() const { return iterations_; }

private:
    int iterations_;
};

struct LinearSolveResult {
    Vector x;
    int iterations{0};
    double relative_residual{0.0};
};

/// Jacobi-preconditioned conjugate gradients. The returned relative
/// residual ||rhs - A x|| / ||rhs|| is recomputed from scratch and is at
/// most `tol`. Throws LinearSolveError on breakdown (non-positive curvature)
/// or when `max_iter` iterations do not suffice (0 selects 10 n + 100).
LinearSolveResult solve_spd(const SparseMatrix& a, const Vector& rhs, double tol, int max_iter = 0);

enum class NewtonStatus { converged, max_iterations, line_search_failure, linear_solver_failure };

std::string to_string(NewtonStatus status);

struct NewtonReport {
    NewtonStatus status{NewtonStatus::converged};
    int iterations{0};
    std::vector<double> residual_history;  ///< ||grad Phi|| before each step
    double residual_scale{1.0};            ///< tolerances are relative to this
    std::string message;

    bool converged() const { return status == NewtonStatus::converged; }
    double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
    /// ||r_{k+1}|| / ||r_k||^2 for consecutive entries of residual_history.
    std::vector<double> quadratic_ratios() const;
};

struct NonlinearSolveResult {
    DiscreteField u;
    NewtonReport report;
};

/// Residual scale used by the Newton stopping test: ||M1||_2.
double residual_scale(const AssembledSystem& sys);

/// Minimiser of E, i.e. the unique u* with grad E(u*) = 0. On failure the
/// best iterate is returned and report.status says why.
NonlinearSolveResult stationary_solve(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                                      const DiscreteField& u_init);

/// One backward-Euler step: M (u_{n+1} - u_n) / dt + A(u_{n+1}) = 0.
NonlinearSolveResult step_implicit_euler(const AssembledSystem& sys, const ModelParams& params,
                                         const SolverConfig& cfg, const DiscreteField& u_n);

/// Solves M u + A(u) = M g, the discrete counterpart of (I + A) u = g.
NonlinearSolveResult solve_resolvent(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                                     const DiscreteField& g);

/// Evolves u0 to t_end with round(t_end / dt) implicit-Euler steps and
/// records energy and distances to the stationary state `reference`.
///
/// Monotonicity checks use the slacks
///   energy:     E_{n+1} <= E_n + 1e-12 max(|E_0|, |E(u*)|)
///   proximal:   E_{n+1} + ||u_{n+1} - u_n||_M^2 / (2 dt) <= E_n + same slack
///   err_H:      e_{n+1} <= e_n + 1e-12 max(e_0, ||u*||_H)
/// A failing step ends the trace early with status step_failed.
EvolutionTrace evolve(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                      const DiscreteField& u0, const DiscreteField& reference);

/// Same, computing the reference by stationary_solve from zero. Throws
/// std::runtime_error if that solve fails.
EvolutionTrace evolve(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                      const DiscreteField& u0);

/// ||u_n - v_n||_M for n = 0..round(t_end/dt) along two trajectories
/// driven with the same step size. Throws std::runtime_error on a failed step.
std::vector<double> trajectory_distances(const AssembledSystem& sys, const ModelParams& params,
                                         const SolverConfig& cfg, const DiscreteField& u0,
                                         const DiscreteField& v0);

}  // namespace coreshell
