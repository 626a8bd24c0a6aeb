#pragma once

/**
 * @file analysis.hpp
 * @brief Diagnostics: norms, decay-rate fitting, the strong-monotonicity
 * constant, interface flux jumps and an independent radial ODE reference.
 */

#include <cstddef>
#include <string>
#include <vector>

#include "coreshell/discretization.hpp"
#include "coreshell/mesh.hpp"
#include "coreshell/model.hpp"
#include "coreshell/trace.hpp"

namespace coreshell {

struct FieldNorms {
    double h_norm{0.0};  ///< sqrt(u^T M u)
    double v_norm{0.0};  ///< sqrt(u^T (M + K~) u), K~ the b == 1 stiffness
};

FieldNorms norms(const AssembledSystem& sys, const DiscreteField& u);

enum class DecayFlag {
    ok,
    converged_at_start,  ///< err_H(0) already at round-off level
    underflow,           ///< too few samples above round-off to fit
    not_decaying,        ///< fitted rate negative
};

std::string to_string(DecayFlag flag);

struct DecayReport {
    double beta_fit{0.0};
    double gamma_disc{0.0};
    double r_squared{0.0};
    std::size_t window_begin{0};  ///< first trace index used
    std::size_t window_end{0};    ///< one past the last index used
    DecayFlag flag{DecayFlag::ok};
};

/// Least-squares fit of log err_H against t.
///
/// Samples with err_H <= 1e2 * eps * max(max err_H, trace.reference_h_norm)
/// are dropped as round-off. If err_H stalls at the end of the trace (a
/// trailing run with relative change <= 1e-6 per step) everything below ten
/// times the stalled level is dropped too. The fit uses the last half of
/// the remaining samples. `gamma_disc` is copied into the report for comparison. Throws
/// std::invalid_argument for traces with fewer than 10 samples.
DecayReport fit_decay_rate(const EvolutionTrace& trace, double gamma_disc = 0.0);

struct GammaEstimate {
    double gamma{0.0};   ///< b_min * lambda / (1 + lambda)
    double lambda{0.0};  ///< smallest eigenvalue of K~ x = lambda M x on the free subspace
    int iterations{0};
};

/// Inverse power iteration for the smallest generalised eigenvalue.
/// Throws std::runtime_error if it does not settle within max_iter steps.
GammaEstimate estimate_gamma(const AssembledSystem& sys, const ModelParams& params, double rel_tol = 1e-8,
                             int max_iter = 1000);

/// Per-facet |b2 grad u|_shell . nu - b1 grad u|_core . nu| with elementwise
/// constant gradients.
std::vector<double> interface_flux_jumps(const CoreShellMesh& mesh, const DiscreteField& u,
                                         const ModelParams& params);

/// Maximum of interface_flux_jumps (0 for meshes without interface).
double interface_flux_jump(const AssembledSystem& sys, const CoreShellMesh& mesh, const DiscreteField& u,
                           const ModelParams& params);

/**
 * Radially symmetric stationary state obtained by shooting from the centre.
 *
 * In the core u'' + (N-1)/r u' = -phi(u)/b1 with u(0) = alpha, u'(0) = 0 is
 * integrated with an adaptive Dormand-Prince scheme. In the shell u is
 * harmonic, u = A + B psi(r) with psi = r^{2-N} (N >= 3) or log r (N = 2),
 * and A, B match value and flux b u' at r1. alpha is bisected until
 * |u(r2)| < 1e-10.
 */
class RadialProfile {
public:
    double value(double r) const;
    double derivative(double r) const;

    double alpha() const { return alpha_; }
    double defect() const { return defect_; }
    int bisection_steps() const { return bisection_steps_; }
    double shell_constant() const { return shell_a_; }
    double shell_slope() const { return shell_b_; }
    /// |b1 u'(r1-) - b2 u'(r1+)|
    double flux_mismatch() const;

private:
    friend RadialProfile radial_stationary_reference(const ModelParams&, const GeometrySpec&, double, double);

    ModelParams params_;
    GeometrySpec spec_;
    double alpha_{0.0};
    double defect_{0.0};
    int bisection_steps_{0};
    double r_start_{0.0};
    double shell_a_{0.0};
    double shell_b_{0.0};
    std::vector<double> grid_;   // core sample radii, uniform from r_start_ to r1
    std::vector<double> u_;      // u at grid_
    std::vector<double> du_;     // u' at grid_

    double psi(double r) const;
    double psi_derivative(double r) const;
};

/// Throws std::invalid_argument unless spec is radial and the matching
/// defect changes sign on [alpha_lo, alpha_hi].
RadialProfile radial_stationary_reference(const ModelParams& params, const GeometrySpec& spec, double alpha_lo,
                                          double alpha_hi);

/// Bracket [0, c0]; the centre value of the stationary state lies inside.
RadialProfile radial_stationary_reference(const ModelParams& params, const GeometrySpec& spec);

}  // namespace coreshell
