#pragma once

/**
 * @file discretization.hpp
 * @brief P1 finite-element assembly of the core-shell reaction-diffusion
 * operator and its energy.
 *
 * On a mesh with nodal basis {w_i} the discrete objects are
 *
 *   K_ij  = int b grad w_i . grad w_j        (b = b1 in the core, b2 in the shell)
 *   M_ij  = int w_i w_j
 *   M1_i  = int_{core} w_i                   (nodal quadrature weights)
 *
 *   A(u)  = K u - r(u),        r_i(u) = M1_i phi(u_i)
 *   E(u)  = 1/2 u^T K u - sum_i M1_i F(u_i)
 *
 * so that grad E == A. Radial meshes carry the weight |S^{N-1}| r^{N-1} in
 * every integral. Dirichlet nodes are eliminated: fields keep full length
 * with masked entries equal to zero, and the *_free matrices act on the
 * unmasked subspace only.
 */

#include <cstdint>
#include <vector>

#include <Eigen/Sparse>

#include "coreshell/mesh.hpp"
#include "coreshell/model.hpp"

namespace coreshell {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Nodal coefficients of a P1 field together with its Dirichlet mask.
struct DiscreteField {
    Vector values;
    std::vector<std::uint8_t> mask;

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
    /// true when every masked entry is exactly zero
    bool satisfies_mask() const;
};

struct AssembledSystem {
    SparseMatrix stiffness;       ///< K, weighted by b, before elimination
    SparseMatrix unit_stiffness;  ///< K with b == 1
    SparseMatrix mass;            ///< consistent mass M
    Vector core_weights;          ///< M1
    std::vector<std::uint8_t> mask;
    std::vector<Eigen::Index> free_dofs;

    SparseMatrix stiffness_free;
    SparseMatrix unit_stiffness_free;
    SparseMatrix mass_free;

    double b_min{0.0};
    double core_volume{0.0};  ///< sum of M1

    std::size_t size() const { return mask.size(); }
    std::size_t free_size() const { return free_dofs.size(); }

    DiscreteField zero_field() const;
    /// Copies values and zeroes the masked entries.
    DiscreteField make_field(Vector values) const;

    Vector restrict_to_free(const Vector& full) const;
    Vector extend_from_free(const Vector& free) const;
};

struct AssemblyOptions {
    /// Reject invalid parameters. Switched off only by the verification
    /// harness when it injects a corrupted coefficient on purpose.
    bool validate_params{true};
};

AssembledSystem assemble(const CoreShellMesh& mesh, const ModelParams& params, AssemblyOptions options = {});

/// r(u)_i = M1_i phi(u_i); zero when consumption is switched off.
Vector reaction_vector(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params);

/// K u - r(u) with masked entries set to zero.
Vector apply_A(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params);

/// Weak operator with the identity shift: M u + K u - r(u), masked entries zero.
Vector apply_shifted_A(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params);

double energy(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params);

/// Gradient of the energy. Identical to apply_A.
Vector energy_gradient(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params);

/// P1 interpolant of a function of position. Masked entries are set to 0.
template <class Fn>
DiscreteField interpolate(const AssembledSystem& sys, const CoreShellMesh& mesh, Fn&& fn) {
    Vector values(static_cast<Eigen::Index>(mesh.node_count()));
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        values[static_cast<Eigen::Index>(i)] = fn(mesh.nodes[i]);
    }
    return sys.make_field(std::move(values));
}

namespace detail {
// Vector-level kernels shared with the solvers; no dimension checks.
Vector reaction(const AssembledSystem& sys, const Vector& u, const ModelParams& params);
Vector gradient(const AssembledSystem& sys, const Vector& u, const ModelParams& params);
double energy(const AssembledSystem& sys, const Vector& u, const ModelParams& params);
/// diag entries M1_i * (-phi'(u_i)) >= 0
Vector reaction_jacobian_diagonal(const AssembledSystem& sys, const Vector& u, const ModelParams& params);
}  // namespace detail

}  // namespace coreshell
