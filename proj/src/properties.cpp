#include "coreshell/properties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "coreshell/analysis.hpp"

namespace coreshell {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void record(PropertyResult& result, double margin, bool violated,
            std::vector<std::pair<std::string, std::vector<double>>> sample) {
    if (result.samples == 0 || margin < result.worst_margin) {
        result.worst_margin = margin;
    }
    ++result.samples;
    if (violated && result.passed) {
        result.passed = false;
        result.violation = std::move(sample);
    }
}

PropertyResult make_result(std::string name, double tolerance) {
    PropertyResult result;
    result.name = std::move(name);
    result.tolerance = tolerance;
    return result;
}

double v_norm_sq(const AssembledSystem& sys, const Vector& w) {
    return w.dot(sys.mass * w) + w.dot(sys.unit_stiffness * w);
}

}  // namespace

DiscreteField random_field(const AssembledSystem& sys, Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vector values(static_cast<Eigen::Index>(sys.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        values[i] = dist(rng);
    }
    return sys.make_field(std::move(values));
}

PropertyResult check_phi_properties(const ModelParams& params, Rng& rng, std::size_t samples) {
    PropertyResult result = make_result("phi_properties", 1e-12);
    const double gap = params.c1 - params.c0;
    std::uniform_real_distribution<double> wide(-20.0, 20.0);
    std::uniform_real_distribution<double> narrow(-1e-3, 1e-3);

    std::vector<double> z(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        // half the samples crowd around the kink at c0
        z[i] = params.c0 + gap * (i % 2 == 0 ? wide(rng) : narrow(rng));
    }
    if (samples > 0) {
        z[0] = params.c0;
    }

    const double lipschitz = (1.0 / gap) * (1.0 + result.tolerance);
    double worst_bound = std::numeric_limits<double>::infinity();
    double worst_lip = std::numeric_limits<double>::infinity();
    double worst_zphi = std::numeric_limits<double>::infinity();
    double worst_f = std::numeric_limits<double>::infinity();
    std::string failure;

    for (std::size_t i = 0; i < samples; ++i) {
        const double p = phi(z[i], params);
        const double bound_margin = std::min(p, 1.0 - p);
        worst_bound = std::min(worst_bound, bound_margin);
        if (!(p >= 0.0 && p < 1.0) && failure.empty()) {
            failure = fmt::format("phi({:.17g}) = {:.17g} outside [0, 1)", z[i], p);
            result.violation = {{"z", {z[i]}}, {"phi", {p}}};
        }
        const double zphi_margin = params.c0 + result.tolerance - z[i] * p;
        worst_zphi = std::min(worst_zphi, zphi_margin);
        if (zphi_margin < 0.0 && failure.empty()) {
            failure = fmt::format("z phi(z) = {:.17g} exceeds c0 at z = {:.17g}", z[i] * p, z[i]);
            result.violation = {{"z", {z[i]}}, {"phi", {p}}};
        }
        const double f = phi_antiderivative(z[i], params);
        const double f_margin = std::abs(z[i]) - f;
        worst_f = std::min(worst_f, f_margin);
        if (f_margin < -1e-15 && failure.empty()) {
            failure = fmt::format("F({:.17g}) = {:.17g} exceeds |s|", z[i], f);
            result.violation = {{"s", {z[i]}}, {"F", {f}}};
        }
        // independent pairs (i, i + n/2)
        const double w = z[(i + samples / 2) % samples];
        const double dz = std::abs(z[i] - w);
        if (dz > 0.0) {
            const double dphi = std::abs(p - phi(w, params));
            worst_lip = std::min(worst_lip, lipschitz - dphi / dz);
            if (dphi > lipschitz * dz && failure.empty()) {
                failure = fmt::format("Lipschitz bound violated at ({:.17g}, {:.17g})", z[i], w);
                result.violation = {{"z", {z[i], w}}, {"phi", {p, phi(w, params)}}};
            }
        }
    }

    std::vector<double> sorted = z;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double a = phi(sorted[i], params);
        const double b = phi(sorted[i + 1], params);
        if (b > a && failure.empty()) {
            failure = fmt::format("phi increases between {:.17g} and {:.17g}", sorted[i], sorted[i + 1]);
            result.violation = {{"z", {sorted[i], sorted[i + 1]}}, {"phi", {a, b}}};
        }
    }

    result.samples = samples;
    result.worst_margin = std::min({worst_bound, worst_zphi, worst_lip * gap});
    result.passed = failure.empty();
    result.detail = failure.empty()
                        ? fmt::format("min margins: bounds {:.3e}, z*phi {:.3e}, Lipschitz {:.3e}, F<=|s| {:.3e}",
                                      worst_bound, worst_zphi, worst_lip * gap, worst_f)
                        : failure;
    return result;
}

PropertyResult check_antiderivative(const ModelParams& params, Rng& rng, std::size_t samples) {
    PropertyResult result = make_result("antiderivative", 1e-6);
    const double gap = params.c1 - params.c0;
    const double band = 1e-3 * gap;
    std::uniform_real_distribution<double> dist(-20.0, 20.0);
    for (std::size_t i = 0; i < samples; ++i) {
        double s = params.c0 + gap * dist(rng);
        if (std::abs(s - params.c0) < band) {
            s = params.c0 - band - std::abs(s - params.c0);
        }
        const double h = 1e-6 * std::max(1.0, std::abs(s));
        const double fd = (phi_antiderivative(s + h, params) - phi_antiderivative(s - h, params)) / (2.0 * h);
        const double exact = phi(s, params);
        const double err = exact > 0.0 ? std::abs(fd - exact) / exact : std::abs(fd);
        record(result, result.tolerance - err, err > result.tolerance, {{"s", {s}}, {"fd", {fd}}, {"phi", {exact}}});
    }
    result.detail = fmt::format("worst relative error {:.3e}", result.tolerance - result.worst_margin);
    return result;
}

PropertyResult check_monotonicity(const AssembledSystem& sys, const ModelParams& params, Rng& rng,
                                  std::size_t pairs) {
    PropertyResult result = make_result("monotonicity", 1e-12);
    const double lo = params.c0 - 3.0 * params.c1;
    const double hi = params.c0 + 3.0 * params.c1;
    for (std::size_t k = 0; k < pairs; ++k) {
        const DiscreteField u = random_field(sys, rng, lo, hi);
        const DiscreteField v = random_field(sys, rng, lo, hi);
        const Vector w = u.values - v.values;
        const double pairing = (apply_A(sys, u, params) - apply_A(sys, v, params)).dot(w);
        const double scale = w.dot(sys.mass * w);
        const double margin = pairing / scale;
        record(result, margin, margin < -result.tolerance,
               {{"u", to_std(u.values)}, {"v", to_std(v.values)}});
    }
    result.detail = fmt::format("min (A(u)-A(v)).(u-v) / ||u-v||_M^2 = {:.6e}", result.worst_margin);
    return result;
}

PropertyResult check_coercivity(const AssembledSystem& sys, const ModelParams& params, Rng& rng,
                                std::size_t samples) {
    PropertyResult result = make_result("coercivity", 1e-12);
    const double c = std::min(1.0, params.b_min());
    std::uniform_real_distribution<double> exponent(-2.0, 2.0);
    for (std::size_t k = 0; k < samples; ++k) {
        const double amplitude = std::pow(10.0, exponent(rng));
        const DiscreteField u = random_field(sys, rng, -amplitude, amplitude);
        const double lhs = apply_shifted_A(sys, u, params).dot(u.values);
        const double rhs = c * v_norm_sq(sys, u.values) - params.c0 * sys.core_volume;
        const double scale = std::abs(lhs) + std::abs(rhs);
        const double margin = (lhs - rhs) / scale;
        record(result, margin, margin < -result.tolerance, {{"u", to_std(u.values)}});
    }
    result.detail = fmt::format("min relative margin {:.6e} (c = {:.6g}, |core| = {:.6g})", result.worst_margin, c,
                                sys.core_volume);
    return result;
}

PropertyResult check_strong_monotonicity(const AssembledSystem& sys, const ModelParams& params, double gamma,
                                         Rng& rng, std::size_t pairs) {
    // gamma comes from an iterative eigen-solve accurate to ~1e-8
    PropertyResult result = make_result("strong_monotonicity", 1e-8);
    if (!(gamma > 0.0)) {
        result.passed = false;
        result.worst_margin = gamma;
        result.detail = fmt::format("gamma_disc = {:.10g} is not positive", gamma);
        result.violation = {{"gamma", {gamma}}};
        return result;
    }
    const double lo = params.c0 - 3.0 * params.c1;
    const double hi = params.c0 + 3.0 * params.c1;
    for (std::size_t k = 0; k < pairs; ++k) {
        const DiscreteField u = random_field(sys, rng, lo, hi);
        const DiscreteField v = random_field(sys, rng, lo, hi);
        const Vector w = u.values - v.values;
        const double pairing = (energy_gradient(sys, u, params) - energy_gradient(sys, v, params)).dot(w);
        const double bound = gamma * v_norm_sq(sys, w);
        const double margin = (pairing - bound) / bound;
        record(result, margin, margin < -result.tolerance, {{"u", to_std(u.values)}, {"v", to_std(v.values)}});
    }
    result.detail = fmt::format("gamma_disc = {:.10g}, min relative margin {:.6e}", gamma, result.worst_margin);
    return result;
}

PropertyResult check_gradient(const AssembledSystem& sys, const ModelParams& params, Rng& rng, std::size_t pairs,
                              double eps) {
    PropertyResult result = make_result("gradient", 1e-6);
    const double kink_gap = 1e-3;
    const double lo = params.c0 - 2.0 * params.c1;
    const double hi = params.c0 + params.c1;
    for (std::size_t k = 0; k < pairs; ++k) {
        DiscreteField u = random_field(sys, rng, lo, hi);
        for (Eigen::Index i = 0; i < u.values.size(); ++i) {
            if (std::abs(u.values[i] - params.c0) < kink_gap) {
                u.values[i] = params.c0 - kink_gap - std::abs(u.values[i] - params.c0);
            }
        }
        u = sys.make_field(u.values);
        const DiscreteField h = random_field(sys, rng, -1.0, 1.0);
        const double fd = (energy(sys, sys.make_field(u.values + eps * h.values), params) -
                           energy(sys, sys.make_field(u.values - eps * h.values), params)) /
                          (2.0 * eps);
        const double directional = energy_gradient(sys, u, params).dot(h.values);
        const double err = std::abs(fd - directional) / std::abs(directional);
        record(result, result.tolerance - err, !(err <= result.tolerance),
               {{"u", to_std(u.values)}, {"h", to_std(h.values)}});
    }
    result.detail = fmt::format("worst relative error {:.3e}", result.tolerance - result.worst_margin);
    return result;
}

PropertyResult check_resolvent(const AssembledSystem& sys, const ModelParams& params, const SolverConfig& cfg,
                               Rng& rng, std::size_t samples) {
    PropertyResult result = make_result("resolvent_solvable", cfg.newton_tol);
    const double scale = residual_scale(sys);
    for (std::size_t k = 0; k < samples; ++k) {
        const DiscreteField g = random_field(sys, rng, -params.c1, params.c1 + params.c0);
        const NonlinearSolveResult solved = solve_resolvent(sys, params, cfg, g);
        Vector residual = apply_shifted_A(sys, solved.u, params) - sys.mass * g.values;
        for (std::size_t i = 0; i < sys.mask.size(); ++i) {
            if (sys.mask[i]) {
                residual[static_cast<Eigen::Index>(i)] = 0.0;
            }
        }
        const double rel = residual.norm() / scale;
        record(result, result.tolerance - rel, !solved.report.converged() || rel > result.tolerance,
               {{"g", to_std(g.values)}, {"u", to_std(solved.u.values)}});
    }
    result.detail = fmt::format("worst residual / ||M1|| = {:.3e}", result.tolerance - result.worst_margin);
    return result;
}

}  // namespace coreshell
