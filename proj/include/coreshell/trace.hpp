#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "coreshell/discretization.hpp"

namespace coreshell {

enum class TraceStatus { completed, step_failed };

/// Time series of an implicit-Euler trajectory measured against the
/// stationary state u*.
struct EvolutionTrace {
    std::vector<double> times;
    std::vector<double> energies;
    std::vector<double> err_H;  ///< ||u_n - u*||_H
    std::vector<double> err_V;  ///< ||u_n - u*||_V
    std::vector<int> newton_iters;

    // Per-step checks, evaluated with the slacks documented on evolve().
    bool energy_monotone{true};
    bool proximal_inequality{true};
    bool error_monotone{true};

    TraceStatus status{TraceStatus::completed};
    std::optional<std::size_t> failed_step;

    // config echo
    double dt{0.0};
    double t_end{0.0};
    double newton_tol{0.0};
    double reference_h_norm{0.0};  ///< ||u*||_H

    DiscreteField final_state;

    std::size_t size() const { return times.size(); }
    double last_time() const { return times.empty() ? 0.0 : times.back(); }
    /// Checks the structural invariants (equal lengths, increasing times).
    void check() const;
};

}  // namespace coreshell
