#include "coreshell/discretization.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace coreshell {

namespace {

using Triplet = Eigen::Triplet<double>;

struct GaussRule {
    std::vector<double> points;  // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre nodes by Newton iteration on P_n.
GaussRule gauss_legendre(int n) {
    GaussRule rule;
    rule.points.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        rule.points[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

struct RadialElementIntegrals {
    double weight{0.0};                 // int w
    std::array<double, 2> lumped{};     // int w phi_i
    std::array<double, 3> mass{};       // int w phi0^2, phi0 phi1, phi1^2
};

RadialElementIntegrals radial_integrals(double a, double b, const CoreShellMesh& mesh, const GaussRule& rule) {
    RadialElementIntegrals out;
    const double h = b - a;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const double r = a + 0.5 * h * (rule.points[q] + 1.0);
        const double w = 0.5 * h * rule.weights[q] * mesh.solid_angle * std::pow(r, mesh.radial_power);
        const double phi0 = (b - r) / h;
        const double phi1 = (r - a) / h;
        out.weight += w;
        out.lumped[0] += w * phi0;
        out.lumped[1] += w * phi1;
        out.mass[0] += w * phi0 * phi0;
        out.mass[1] += w * phi0 * phi1;
        out.mass[2] += w * phi1 * phi1;
    }
    return out;
}

SparseMatrix select_free(const SparseMatrix& full, const std::vector<Eigen::Index>& free_index,
                         Eigen::Index n_free) {
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(full.nonZeros()));
    for (Eigen::Index col = 0; col < full.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
            const Eigen::Index i = free_index[static_cast<std::size_t>(it.row())];
            const Eigen::Index j = free_index[static_cast<std::size_t>(it.col())];
            if (i >= 0 && j >= 0) {
                triplets.emplace_back(i, j, it.value());
            }
        }
    }
    SparseMatrix out(n_free, n_free);
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

void check_size(const AssembledSystem& sys, const DiscreteField& u, const char* op) {
    if (u.size() != sys.size()) {
        throw std::invalid_argument(std::string(op) + ": field has " + std::to_string(u.size()) +
                                    " entries, system has " + std::to_string(sys.size()));
    }
}

}  // namespace

bool DiscreteField::satisfies_mask() const {
    if (mask.size() != size()) {
        return false;
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] && values[static_cast<Eigen::Index>(i)] != 0.0) {
            return false;
        }
    }
    return true;
}

DiscreteField AssembledSystem::zero_field() const {
    return DiscreteField{Vector::Zero(static_cast<Eigen::Index>(size())), mask};
}

DiscreteField AssembledSystem::make_field(Vector values) const {
    if (static_cast<std::size_t>(values.size()) != size()) {
        throw std::invalid_argument("make_field: expected " + std::to_string(size()) + " values, got " +
                                    std::to_string(values.size()));
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            values[static_cast<Eigen::Index>(i)] = 0.0;
        }
    }
    return DiscreteField{std::move(values), mask};
}

Vector AssembledSystem::restrict_to_free(const Vector& full) const {
    Vector out(static_cast<Eigen::Index>(free_dofs.size()));
    for (std::size_t k = 0; k < free_dofs.size(); ++k) {
        out[static_cast<Eigen::Index>(k)] = full[free_dofs[k]];
    }
    return out;
}

Vector AssembledSystem::extend_from_free(const Vector& free) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t k = 0; k < free_dofs.size(); ++k) {
        out[free_dofs[k]] = free[static_cast<Eigen::Index>(k)];
    }
    return out;
}

AssembledSystem assemble(const CoreShellMesh& mesh, const ModelParams& params, AssemblyOptions options) {
    if (options.validate_params) {
        params.validate();
    }
    const auto n = static_cast<Eigen::Index>(mesh.node_count());
    std::vector<Triplet> k_triplets;
    std::vector<Triplet> kt_triplets;
    std::vector<Triplet> m_triplets;
    Vector core_weights = Vector::Zero(n);

    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        if (!(mesh.element_measure(e) > 0.0)) {
            throw std::invalid_argument("assemble: element " + std::to_string(e) + " has non-positive measure");
        }
    }

    if (mesh.is_radial()) {
        const GaussRule rule = gauss_legendre(static_cast<int>(mesh.radial_power / 2.0) + 3);
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
            const auto i = static_cast<Eigen::Index>(mesh.elements[e][0]);
            const auto j = static_cast<Eigen::Index>(mesh.elements[e][1]);
            const double a = mesh.nodes[static_cast<std::size_t>(i)].x;
            const double b = mesh.nodes[static_cast<std::size_t>(j)].x;
            const double h = b - a;
            const RadialElementIntegrals ints = radial_integrals(a, b, mesh, rule);
            const double coeff = mesh.region[e] == Region::core ? params.b1 : params.b2;
            const double kt = ints.weight / (h * h);

            const std::array<Eigen::Index, 2> idx{i, j};
            const std::array<std::array<double, 2>, 2> sign{{{1.0, -1.0}, {-1.0, 1.0}}};
            const std::array<std::array<double, 2>, 2> mass{{{ints.mass[0], ints.mass[1]},
                                                             {ints.mass[1], ints.mass[2]}}};
            for (int p = 0; p < 2; ++p) {
                for (int q = 0; q < 2; ++q) {
                    kt_triplets.emplace_back(idx[p], idx[q], sign[p][q] * kt);
                    k_triplets.emplace_back(idx[p], idx[q], coeff * sign[p][q] * kt);
                    m_triplets.emplace_back(idx[p], idx[q], mass[p][q]);
                }
            }
            if (mesh.region[e] == Region::core) {
                core_weights[i] += ints.lumped[0];
                core_weights[j] += ints.lumped[1];
            }
        }
    } else {
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
            const auto& v = mesh.elements[e];
            const double area = mesh.element_measure(e);
            std::array<Point, 3> grad;
            for (int k = 0; k < 3; ++k) {
                const Point& pj = mesh.nodes[v[(k + 1) % 3]];
                const Point& pk = mesh.nodes[v[(k + 2) % 3]];
                grad[k] = {(pj.y - pk.y) / (2.0 * area), (pk.x - pj.x) / (2.0 * area)};
            }
            const double coeff = mesh.region[e] == Region::core ? params.b1 : params.b2;
            for (int p = 0; p < 3; ++p) {
                for (int q = 0; q < 3; ++q) {
                    const auto i = static_cast<Eigen::Index>(v[p]);
                    const auto j = static_cast<Eigen::Index>(v[q]);
                    const double kt = area * (grad[p].x * grad[q].x + grad[p].y * grad[q].y);
                    kt_triplets.emplace_back(i, j, kt);
                    k_triplets.emplace_back(i, j, coeff * kt);
                    m_triplets.emplace_back(i, j, area / 12.0 * (p == q ? 2.0 : 1.0));
                }
            }
            if (mesh.region[e] == Region::core) {
                for (int p = 0; p < 3; ++p) {
                    core_weights[static_cast<Eigen::Index>(v[p])] += area / 3.0;
                }
            }
        }
    }

    AssembledSystem sys;
    sys.stiffness.resize(n, n);
    sys.unit_stiffness.resize(n, n);
    sys.mass.resize(n, n);
    sys.stiffness.setFromTriplets(k_triplets.begin(), k_triplets.end());
    sys.unit_stiffness.setFromTriplets(kt_triplets.begin(), kt_triplets.end());
    sys.mass.setFromTriplets(m_triplets.begin(), m_triplets.end());
    sys.core_weights = std::move(core_weights);
    sys.mask = mesh.dirichlet_mask();
    sys.b_min = params.b_min();
    sys.core_volume = sys.core_weights.sum();

    std::vector<Eigen::Index> free_index(mesh.node_count(), -1);
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        if (!sys.mask[i]) {
            free_index[i] = static_cast<Eigen::Index>(sys.free_dofs.size());
            sys.free_dofs.push_back(static_cast<Eigen::Index>(i));
        }
    }
    const auto n_free = static_cast<Eigen::Index>(sys.free_dofs.size());
    sys.stiffness_free = select_free(sys.stiffness, free_index, n_free);
    sys.unit_stiffness_free = select_free(sys.unit_stiffness, free_index, n_free);
    sys.mass_free = select_free(sys.mass, free_index, n_free);
    return sys;
}

namespace detail {

Vector reaction(const AssembledSystem& sys, const Vector& u, const ModelParams& params) {
    Vector r = Vector::Zero(u.size());
    if (!params.consumption) {
        return r;
    }
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (!sys.mask[static_cast<std::size_t>(i)]) {
            r[i] = sys.core_weights[i] * phi(u[i], params);
        }
    }
    return r;
}

Vector gradient(const AssembledSystem& sys, const Vector& u, const ModelParams& params) {
    Vector g = sys.stiffness * u;
    g -= reaction(sys, u, params);
    for (std::size_t i = 0; i < sys.mask.size(); ++i) {
        if (sys.mask[i]) {
            g[static_cast<Eigen::Index>(i)] = 0.0;
        }
    }
    return g;
}

double energy(const AssembledSystem& sys, const Vector& u, const ModelParams& params) {
    // Sums run in extended precision: the terms of u^T K u are large and
    // cancel, and finite differences of E need the difference of two
    // nearby energies to many more digits than double summation keeps.
    long double quadratic = 0.0L;
    for (Eigen::Index j = 0; j < sys.stiffness.outerSize(); ++j) {
        long double column = 0.0L;
        for (SparseMatrix::InnerIterator it(sys.stiffness, j); it; ++it) {
            column += static_cast<long double>(it.value()) * u[it.row()];
        }
        quadratic += column * u[j];
    }
    long double value = 0.5L * quadratic;
    if (params.consumption) {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            if (sys.core_weights[i] != 0.0) {
                value -= static_cast<long double>(sys.core_weights[i]) * phi_antiderivative(u[i], params);
            }
        }
    }
    return static_cast<double>(value);
}

Vector reaction_jacobian_diagonal(const AssembledSystem& sys, const Vector& u, const ModelParams& params) {
    Vector d = Vector::Zero(u.size());
    if (!params.consumption) {
        return d;
    }
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        d[i] = -sys.core_weights[i] * phi_derivative(u[i], params);
    }
    return d;
}

}  // namespace detail

Vector reaction_vector(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params) {
    check_size(sys, u, "reaction_vector");
    return detail::reaction(sys, u.values, params);
}

Vector apply_A(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params) {
    check_size(sys, u, "apply_A");
    return detail::gradient(sys, u.values, params);
}

Vector apply_shifted_A(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params) {
    check_size(sys, u, "apply_shifted_A");
    Vector out = detail::gradient(sys, u.values, params);
    const Vector mu = sys.mass * u.values;
    for (std::size_t i = 0; i < sys.mask.size(); ++i) {
        if (!sys.mask[i]) {
            out[static_cast<Eigen::Index>(i)] += mu[static_cast<Eigen::Index>(i)];
        }
    }
    return out;
}

double energy(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params) {
    check_size(sys, u, "energy");
    return detail::energy(sys, u.values, params);
}

Vector energy_gradient(const AssembledSystem& sys, const DiscreteField& u, const ModelParams& params) {
    return apply_A(sys, u, params);
}

}  // namespace coreshell
