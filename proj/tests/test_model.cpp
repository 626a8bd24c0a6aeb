#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "coreshell/model.hpp"
#include "coreshell/properties.hpp"

using namespace coreshell;

namespace {

ModelParams desk() { return default_model_params(); }

std::string message_of(const ModelParams& p) {
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("phi reproduces the closed form at sample points") {
    const ModelParams p = desk();
    CHECK(phi(1.0, p) == 0.0);
    CHECK(phi(0.0, p) == 0.5);
    CHECK(phi(5.0, p) == 0.0);
    CHECK(phi(-2.0, p) == doctest::Approx(3.0 / 4.0).epsilon(1e-15));
    CHECK(phi(0.5, p) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("phi stays in [0, 1) far from the origin") {
    const ModelParams p = desk();
    CHECK(phi(-1e12, p) < 1.0);
    CHECK(phi(-1e12, p) > 0.99);
    CHECK(phi(1e12, p) == 0.0);
    CHECK(phi(std::nextafter(p.c0, 0.0), p) >= 0.0);
}

TEST_CASE("phi derivative: left branch at the kink, zero beyond") {
    const ModelParams p = desk();
    CHECK(phi_derivative(p.c0, p) == doctest::Approx(-1.0 / (p.c1 - p.c0)));
    CHECK(phi_derivative(p.c0 + 1e-9, p) == 0.0);
    CHECK(phi_derivative(3.0, p) == 0.0);
    for (double z : {-3.0, -0.5, 0.0, 0.4, 0.9}) {
        const double h = 1e-6;
        const double fd = (phi(z + h, p) - phi(z - h, p)) / (2.0 * h);
        CHECK(phi_derivative(z, p) == doctest::Approx(fd).epsilon(1e-8));
        CHECK(phi_derivative(z, p) < 0.0);
    }
}

TEST_CASE("antiderivative values") {
    const ModelParams p = desk();
    CHECK(phi_antiderivative(0.0, p) == 0.0);
    CHECK(phi_antiderivative(1.0, p) == doctest::Approx(1.0 + std::log(0.5)).epsilon(1e-15));
    CHECK(phi_antiderivative(1.0, p) == doctest::Approx(0.306852819).epsilon(1e-9));
    CHECK(phi_antiderivative(7.0, p) == phi_antiderivative(1.0, p));
    CHECK(phi_antiderivative(1e9, p) == phi_antiderivative(1.0, p));
}

TEST_CASE("antiderivative is continuous at the kink") {
    const ModelParams p = desk();
    const double at = phi_antiderivative(p.c0, p);
    CHECK(std::abs(phi_antiderivative(std::nextafter(p.c0, 0.0), p) - at) < 1e-15);
    CHECK(std::abs(phi_antiderivative(std::nextafter(p.c0, 2.0), p) - at) == 0.0);
}

TEST_CASE("antiderivative matches a trapezoid integral of phi") {
    // independent oracle: composite trapezoid rule of phi from 0 to s
    const ModelParams p{.b1 = 1.0, .b2 = 1.0, .c0 = 0.7, .c1 = 1.9};
    for (double s : {-4.0, -1.0, 0.3, 0.7, 2.5}) {
        const int n = 200000;
        const double h = s / n;
        double sum = 0.5 * (phi(0.0, p) + phi(s, p));
        for (int i = 1; i < n; ++i) {
            sum += phi(i * h, p);
        }
        CHECK(phi_antiderivative(s, p) == doctest::Approx(sum * h).epsilon(1e-9));
    }
}

TEST_CASE("working-variable transform") {
    const ModelParams p = desk();
    CHECK(to_working_variable(p.c0, p) == 0.0);
    CHECK(from_working_variable(0.0, p) == p.c0);
    CHECK(to_working_variable(0.5, p) == 0.5);
    CHECK(dimensional_consumption(0.5, p) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(dimensional_consumption(0.5, p) == doctest::Approx(phi(0.5, p)).epsilon(1e-15));
    CHECK(dimensional_consumption(-0.1, p) == 0.0);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = dist(rng);
        const double back = from_working_variable(to_working_variable(v, p), p);
        CHECK(std::abs(back - v) <= 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(v) + p.c0));
        if (v >= 0.0) {
            CHECK(dimensional_consumption(v, p) ==
                  doctest::Approx(phi(to_working_variable(v, p), p)).epsilon(1e-13));
        }
    }
}

TEST_CASE("parameter validation names the violated invariant") {
    CHECK(message_of(desk()).empty());
    ModelParams p = desk();
    p.b1 = 0.0;
    CHECK(message_of(p).find("b1") != std::string::npos);
    p = desk();
    p.b2 = -1.0;
    CHECK(message_of(p).find("b2") != std::string::npos);
    p = desk();
    p.c0 = 0.0;
    CHECK(message_of(p).find("c0") != std::string::npos);
    p = desk();
    p.c1 = p.c0;
    CHECK(message_of(p).find("c1") != std::string::npos);
    p = desk();
    p.b1 = std::nan("");
    CHECK_FALSE(message_of(p).empty());
}

TEST_CASE("derived constants") {
    const ModelParams p = desk();
    CHECK(p.c_hat() == 1.0);
    CHECK(p.b_min() == 1.0);
    CHECK(p.b_max() == 5.0);
}

TEST_CASE("phi properties hold for several parameter sets") {
    Rng rng(11);
    for (const ModelParams& p : {desk(), ModelParams{.c0 = 0.3, .c1 = 0.31}, ModelParams{.c0 = 5.0, .c1 = 50.0}}) {
        const PropertyResult r = check_phi_properties(p, rng, 20000);
        CHECK_MESSAGE(r.passed, r.detail);
        CHECK(r.samples == 20000);
        const PropertyResult f = check_antiderivative(p, rng, 2000);
        CHECK_MESSAGE(f.passed, f.detail);
    }
}

TEST_CASE("F(s) <= |s| including large and negative arguments") {
    const ModelParams p = desk();
    for (double s = -1e3; s <= 1e3; s += 0.37) {
        CHECK(phi_antiderivative(s, p) <= std::abs(s));
    }
}
