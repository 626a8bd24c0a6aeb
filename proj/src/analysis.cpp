#include "coreshell/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include "coreshell/solvers.hpp"

namespace coreshell {

namespace {

namespace odeint = boost::numeric::odeint;
using OdeState = std::array<double, 2>;  // (u, u')

constexpr double kOdeTol = 1e-13;
constexpr double kDefectTol = 1e-10;
constexpr std::size_t kCoreSamples = 4096;

Point element_gradient(const CoreShellMesh& mesh, std::size_t e, const Vector& u) {
    const auto& v = mesh.elements[e];
    if (mesh.is_radial()) {
        const double h = mesh.nodes[v[1]].x - mesh.nodes[v[0]].x;
        return {(u[static_cast<Eigen::Index>(v[1])] - u[static_cast<Eigen::Index>(v[0])]) / h, 0.0};
    }
    const double area = mesh.element_measure(e);
    Point g;
    for (int k = 0; k < 3; ++k) {
        const Point& pj = mesh.nodes[v[(k + 1) % 3]];
        const Point& pk = mesh.nodes[v[(k + 2) % 3]];
        const double uk = u[static_cast<Eigen::Index>(v[k])];
        g.x += uk * (pj.y - pk.y) / (2.0 * area);
        g.y += uk * (pk.x - pj.x) / (2.0 * area);
    }
    return g;
}

// u'' = -phi(u)/b1 - (N-1)/r u'
struct CoreOde {
    const ModelParams& params;
    double n_minus_1;

    void operator()(const OdeState& s, OdeState& ds, double r) const {
        ds[0] = s[1];
        ds[1] = -(params.consumption ? phi(s[0], params) : 0.0) / params.b1 - n_minus_1 / r * s[1];
    }
};

// Series start away from the coordinate singularity:
// u = alpha - phi(alpha) r^2 / (2 N b1) + O(r^4)
OdeState series_start(double alpha, double r, const ModelParams& params, int dimension) {
    const double source = params.consumption ? phi(alpha, params) / params.b1 : 0.0;
    return {alpha - source * r * r / (2.0 * dimension), -source * r / dimension};
}

OdeState shoot_to_interface(double alpha, double r_start, const ModelParams& params, const GeometrySpec& spec) {
    OdeState s = series_start(alpha, r_start, params, spec.dimension);
    const CoreOde ode{params, static_cast<double>(spec.dimension - 1)};
    odeint::integrate_adaptive(odeint::make_controlled(kOdeTol, kOdeTol, odeint::runge_kutta_dopri5<OdeState>()),
                               ode, s, r_start, spec.r1, 1e-4 * spec.r1);
    return s;
}

}  // namespace

FieldNorms norms(const AssembledSystem& sys, const DiscreteField& u) {
    if (u.size() != sys.size()) {
        throw std::invalid_argument(fmt::format("norms: field has {} entries, system has {}", u.size(), sys.size()));
    }
    const double h2 = u.values.dot(sys.mass * u.values);
    const double g2 = u.values.dot(sys.unit_stiffness * u.values);
    return {std::sqrt(std::max(0.0, h2)), std::sqrt(std::max(0.0, h2 + g2))};
}

std::string to_string(DecayFlag flag) {
    switch (flag) {
        case DecayFlag::ok: return "ok";
        case DecayFlag::converged_at_start: return "converged-at-start";
        case DecayFlag::underflow: return "underflow";
        case DecayFlag::not_decaying: return "not-decaying";
    }
    return "unknown";
}

DecayReport fit_decay_rate(const EvolutionTrace& trace, double gamma_disc) {
    trace.check();
    if (trace.size() < 10) {
        throw std::invalid_argument(fmt::format("fit_decay_rate: need at least 10 samples, got {}", trace.size()));
    }
    DecayReport report;
    report.gamma_disc = gamma_disc;

    const double scale =
        std::max(*std::max_element(trace.err_H.begin(), trace.err_H.end()), trace.reference_h_norm);
    double floor = 1e2 * std::numeric_limits<double>::epsilon() * scale;
    // A trailing run in which err_H stops moving means the iterates sit at
    // the accuracy of the nonlinear solver; that level is a floor as well.
    const std::vector<double>& e = trace.err_H;
    std::size_t plateau = e.size() - 1;
    while (plateau > 0 && std::abs(e[plateau - 1] - e[plateau]) <= 1e-6 * e[plateau]) {
        --plateau;
    }
    if (plateau + 1 < e.size()) {
        floor = std::max(floor, 10.0 * *std::max_element(e.begin() + static_cast<std::ptrdiff_t>(plateau), e.end()));
    }
    if (trace.err_H.front() <= floor) {
        report.flag = DecayFlag::converged_at_start;
        return report;
    }

    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (trace.err_H[i] > floor) {
            usable.push_back(i);
        }
    }
    const std::size_t first = usable.size() / 2;
    if (usable.size() - first < 3) {
        report.flag = DecayFlag::underflow;
        return report;
    }
    report.window_begin = usable[first];
    report.window_end = usable.back() + 1;

    double t_mean = 0.0;
    double y_mean = 0.0;
    const auto count = static_cast<double>(usable.size() - first);
    for (std::size_t k = first; k < usable.size(); ++k) {
        t_mean += trace.times[usable[k]];
        y_mean += std::log(trace.err_H[usable[k]]);
    }
    t_mean /= count;
    y_mean /= count;

    double stt = 0.0;
    double sty = 0.0;
    double syy = 0.0;
    for (std::size_t k = first; k < usable.size(); ++k) {
        const double dt = trace.times[usable[k]] - t_mean;
        const double dy = std::log(trace.err_H[usable[k]]) - y_mean;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    const double slope = sty / stt;
    const double ss_res = std::max(0.0, syy - slope * sty);
    report.beta_fit = -slope;
    report.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    if (report.beta_fit < 0.0) {
        report.flag = DecayFlag::not_decaying;
    }
    return report;
}

GammaEstimate estimate_gamma(const AssembledSystem& sys, const ModelParams& params, double rel_tol, int max_iter) {
    const SparseMatrix& k = sys.unit_stiffness_free;
    const SparseMatrix& m = sys.mass_free;
    Vector x = Vector::Ones(static_cast<Eigen::Index>(sys.free_size()));
    x /= std::sqrt(x.dot(m * x));

    GammaEstimate est;
    double lambda = x.dot(k * x);
    // The Rayleigh quotient error is roughly the square of the vector
    // error, so a stricter stop keeps lambda inside rel_tol.
    const double stop = 1e-2 * rel_tol;
    for (int it = 1; it <= max_iter; ++it) {
        x = solve_spd(k, m * x, 1e-11).x;
        x /= std::sqrt(x.dot(m * x));
        const double next = x.dot(k * x);
        est.iterations = it;
        if (std::abs(next - lambda) <= stop * next) {
            est.lambda = next;
            est.gamma = params.b_min() * next / (1.0 + next);
            return est;
        }
        lambda = next;
    }
    throw std::runtime_error(fmt::format("estimate_gamma: inverse iteration did not settle in {} steps", max_iter));
}

std::vector<double> interface_flux_jumps(const CoreShellMesh& mesh, const DiscreteField& u,
                                         const ModelParams& params) {
    if (u.size() != mesh.node_count()) {
        throw std::invalid_argument("interface_flux_jumps: field does not match mesh");
    }
    std::vector<double> jumps;
    jumps.reserve(mesh.gamma_facets.size());
    for (const GammaFacet& facet : mesh.gamma_facets) {
        const Point gc = element_gradient(mesh, facet.core_element, u.values);
        const Point gs = element_gradient(mesh, facet.shell_element, u.values);
        const double core_flux = params.b1 * (gc.x * facet.normal.x + gc.y * facet.normal.y);
        const double shell_flux = params.b2 * (gs.x * facet.normal.x + gs.y * facet.normal.y);
        jumps.push_back(std::abs(shell_flux - core_flux));
    }
    return jumps;
}

double interface_flux_jump(const AssembledSystem& sys, const CoreShellMesh& mesh, const DiscreteField& u,
                           const ModelParams& params) {
    if (u.size() != sys.size()) {
        throw std::invalid_argument("interface_flux_jump: field does not match system");
    }
    const std::vector<double> jumps = interface_flux_jumps(mesh, u, params);
    return jumps.empty() ? 0.0 : *std::max_element(jumps.begin(), jumps.end());
}

double RadialProfile::psi(double r) const {
    return spec_.dimension == 2 ? std::log(r) : std::pow(r, 2.0 - spec_.dimension);
}

double RadialProfile::psi_derivative(double r) const {
    return spec_.dimension == 2 ? 1.0 / r : (2.0 - spec_.dimension) * std::pow(r, 1.0 - spec_.dimension);
}

double RadialProfile::value(double r) const {
    if (r < 0.0 || r > spec_.r2 * (1.0 + 1e-12)) {
        throw std::out_of_range(fmt::format("RadialProfile::value: r = {} outside [0, r2]", r));
    }
    if (r > spec_.r1) {
        return shell_a_ + shell_b_ * psi(r);
    }
    if (r <= r_start_) {
        return series_start(alpha_, r, params_, spec_.dimension)[0];
    }
    // cubic Hermite on the stored samples
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - grid_.begin()), grid_.size() - 1);
    const std::size_t i = j - 1;
    const double h = grid_[j] - grid_[i];
    const double t = (r - grid_[i]) / h;
    const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    const double h10 = t * (1.0 - t) * (1.0 - t);
    const double h01 = t * t * (3.0 - 2.0 * t);
    const double h11 = t * t * (t - 1.0);
    return h00 * u_[i] + h10 * h * du_[i] + h01 * u_[j] + h11 * h * du_[j];
}

double RadialProfile::derivative(double r) const {
    if (r > spec_.r1) {
        return shell_b_ * psi_derivative(r);
    }
    if (r <= r_start_) {
        return series_start(alpha_, r, params_, spec_.dimension)[1];
    }
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - grid_.begin()), grid_.size() - 1);
    const std::size_t i = j - 1;
    const double t = (r - grid_[i]) / (grid_[j] - grid_[i]);
    return (1.0 - t) * du_[i] + t * du_[j];
}

double RadialProfile::flux_mismatch() const {
    return std::abs(params_.b1 * du_.back() - params_.b2 * shell_b_ * psi_derivative(spec_.r1));
}

RadialProfile radial_stationary_reference(const ModelParams& params, const GeometrySpec& spec, double alpha_lo,
                                          double alpha_hi) {
    params.validate();
    spec.validate();
    if (spec.kind != MeshKind::radial) {
        throw std::invalid_argument("radial_stationary_reference: geometry must be radial");
    }
    if (!(alpha_lo < alpha_hi)) {
        throw std::invalid_argument("radial_stationary_reference: empty bracket");
    }

    RadialProfile profile;
    profile.params_ = params;
    profile.spec_ = spec;
    profile.r_start_ = 1e-6 * spec.r1;

    // u(r2) for a given centre value, with the shell solved in closed form
    auto defect = [&](double alpha) {
        const OdeState s = shoot_to_interface(alpha, profile.r_start_, params, spec);
        const double b = params.b1 * s[1] / (params.b2 * profile.psi_derivative(spec.r1));
        return s[0] + b * (profile.psi(spec.r2) - profile.psi(spec.r1));
    };

    double lo = alpha_lo;
    double hi = alpha_hi;
    double f_lo = defect(lo);
    double f_hi = defect(hi);
    double alpha = 0.0;
    double f_alpha = 0.0;
    if (std::abs(f_lo) < kDefectTol) {
        alpha = lo;
        f_alpha = f_lo;
    } else if (std::abs(f_hi) < kDefectTol) {
        alpha = hi;
        f_alpha = f_hi;
    } else {
        if ((f_lo < 0.0) == (f_hi < 0.0)) {
            throw std::invalid_argument(fmt::format(
                "radial_stationary_reference: defect does not change sign on [{}, {}] ({} and {})", lo, hi, f_lo,
                f_hi));
        }
        while (true) {
            alpha = 0.5 * (lo + hi);
            f_alpha = defect(alpha);
            ++profile.bisection_steps_;
            if (std::abs(f_alpha) < kDefectTol || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(alpha)) {
                break;
            }
            if ((f_alpha < 0.0) == (f_lo < 0.0)) {
                lo = alpha;
                f_lo = f_alpha;
            } else {
                hi = alpha;
            }
        }
    }
    profile.alpha_ = alpha;
    profile.defect_ = f_alpha;

    // dense samples of the accepted core solution
    profile.grid_.resize(kCoreSamples + 1);
    for (std::size_t i = 0; i <= kCoreSamples; ++i) {
        profile.grid_[i] = profile.r_start_ + (spec.r1 - profile.r_start_) * static_cast<double>(i) /
                                                  static_cast<double>(kCoreSamples);
    }
    profile.grid_.back() = spec.r1;
    OdeState s = series_start(alpha, profile.r_start_, params, spec.dimension);
    const CoreOde ode{params, static_cast<double>(spec.dimension - 1)};
    odeint::integrate_times(
        odeint::make_dense_output(kOdeTol, kOdeTol, odeint::runge_kutta_dopri5<OdeState>()), ode, s,
        profile.grid_.begin(), profile.grid_.end(), 1e-4 * spec.r1, [&](const OdeState& x, double) {
            profile.u_.push_back(x[0]);
            profile.du_.push_back(x[1]);
        });

    profile.shell_b_ = params.b1 * profile.du_.back() / (params.b2 * profile.psi_derivative(spec.r1));
    profile.shell_a_ = profile.u_.back() - profile.shell_b_ * profile.psi(spec.r1);
    return profile;
}

RadialProfile radial_stationary_reference(const ModelParams& params, const GeometrySpec& spec) {
    return radial_stationary_reference(params, spec, 0.0, params.c0);
}

}  // namespace coreshell
