#pragma once

/**
 * @file properties.hpp
 * @brief Randomised checks of the structural properties of the model and
 * of its discretisation. Each check returns the worst observed margin and,
 * on failure, the first violating sample for replay.
 */

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coreshell/discretization.hpp"
#include "coreshell/solvers.hpp"

namespace coreshell {

using Rng = std::mt19937_64;

struct PropertyResult {
    std::string name;
    bool passed{true};
    std::size_t samples{0};
    /// Smallest value of (lhs - rhs) / normaliser over all samples; negative
    /// beyond the tolerance means a violation.
    double worst_margin{0.0};
    double tolerance{0.0};
    std::string detail;
    /// Violating sample as named columns (empty when passed).
    std::vector<std::pair<std::string, std::vector<double>>> violation;
};

/// Uniform random values in [lo, hi] on unmasked nodes, zero on masked ones.
DiscreteField random_field(const AssembledSystem& sys, Rng& rng, double lo, double hi);

/// Bounds, monotone decrease, Lipschitz constant 1/(c1-c0) and z phi(z) <= c0
/// on `samples` random points, plus F(s) <= |s|.
PropertyResult check_phi_properties(const ModelParams& params, Rng& rng, std::size_t samples);

/// Central differences of F reproduce phi away from the kink.
PropertyResult check_antiderivative(const ModelParams& params, Rng& rng, std::size_t samples);

/// (A(u) - A(v)) . (u - v) >= -1e-12 ||u - v||_M^2
PropertyResult check_monotonicity(const AssembledSystem& sys, const ModelParams& params, Rng& rng,
                                  std::size_t pairs);

/// u^T (M + K) u - r(u) . u >= min(1, b_min) ||u||_V^2 - c0 |core|
PropertyResult check_coercivity(const AssembledSystem& sys, const ModelParams& params, Rng& rng,
                                std::size_t samples);

/// (grad E(u) - grad E(v)) . (u - v) >= gamma ||u - v||_V^2
PropertyResult check_strong_monotonicity(const AssembledSystem& sys, const ModelParams& params, double gamma,
                                         Rng& rng, std::size_t pairs);

/// Central differences of E along random directions match grad E . h to
/// relative error 1e-6. Nodal values of u stay at least 1e-3 away from c0.
PropertyResult check_gradient(const AssembledSystem& sys, const ModelParams& params, Rng& rng, std::size_t pairs,
                              double eps = 1e-6);

/// M u + A(u) = M g is solvable for random g.
PropertyResult check_resolvent(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                               Rng& rng, std::size_t samples);

}  // namespace coreshell
