#pragma once

/**
 * @file model.hpp
 * @brief Model parameters and the Michaelis-Menten consumption nonlinearity.
 *
 * Working variable u = c0 - v, where v is the dimensionless oxygen
 * concentration. In these variables the consumption is
 *
 *   phi(z) = (c0 - z) / (c1 - z)   for z <= c0,
 *   phi(z) = 0                     for z >  c0,
 *
 * with 0 < c0 < c1, and the stored-energy density is its antiderivative F.
 */

#include <string>

namespace coreshell {

/**
 * Physical parameters of the core-shell problem (all dimensionless).
 * Invariants: b1 > 0, b2 > 0, 0 < c0 < c1.
 */
struct ModelParams {
    double b1{1.0};  ///< diffusion coefficient in the core
    double b2{5.0};  ///< diffusion coefficient in the shell
    double c0{1.0};  ///< boundary concentration level
    double c1{2.0};  ///< Michaelis-Menten shift, c1 = c0 + c_hat
    /// Switches the consumption term on. With it off the reaction is f == 0.
    bool consumption{true};

    /// Michaelis-Menten constant of the dimensional model.
    double c_hat() const { return c1 - c0; }
    double b_min() const { return b1 < b2 ? b1 : b2; }
    double b_max() const { return b1 < b2 ? b2 : b1; }

    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const;
};

/// Non-physical smoke-test profile: b1 = 1, b2 = 5, c0 = 1, c1 = 2.
ModelParams default_model_params();

/// Consumption nonlinearity phi. Values lie in [0, 1); decreasing in z.
double phi(double z, const ModelParams& params);

/// Derivative of phi. At the kink z = c0 the left derivative -1/(c1 - c0)
/// is returned; for z > c0 the derivative is 0.
double phi_derivative(double z, const ModelParams& params);

/// Antiderivative F of phi with F(0) = 0, constant for s > c0.
double phi_antiderivative(double s, const ModelParams& params);

/// u = c0 - v
double to_working_variable(double v, const ModelParams& params);
/// v = c0 - u
double from_working_variable(double u, const ModelParams& params);

/// Consumption in the dimensional variable: g(v) = v / (v + c_hat) for
/// v >= 0 and 0 otherwise. Equals phi(to_working_variable(v)).
double dimensional_consumption(double v, const ModelParams& params);

}  // namespace coreshell
