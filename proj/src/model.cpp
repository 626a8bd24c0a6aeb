#include "coreshell/model.hpp"

#include <cmath>
#include <stdexcept>

namespace coreshell {

void ModelParams::validate() const {
    if (!(b1 > 0.0)) {
        throw std::invalid_argument("model: b1 must be positive (got " + std::to_string(b1) + ")");
    }
    if (!(b2 > 0.0)) {
        throw std::invalid_argument("model: b2 must be positive (got " + std::to_string(b2) + ")");
    }
    if (!(c0 > 0.0)) {
        throw std::invalid_argument("model: c0 must be positive (got " + std::to_string(c0) + ")");
    }
    if (!(c1 > c0)) {
        throw std::invalid_argument("model: c1 must exceed c0 (got c0=" + std::to_string(c0) +
                                    ", c1=" + std::to_string(c1) + ")");
    }
}

ModelParams default_model_params() { return ModelParams{}; }

double phi(double z, const ModelParams& params) {
    if (z > params.c0) {
        return 0.0;
    }
    return (params.c0 - z) / (params.c1 - z);
}

double phi_derivative(double z, const ModelParams& params) {
    if (z > params.c0) {
        return 0.0;
    }
    const double d = params.c1 - z;
    return -(params.c1 - params.c0) / (d * d);
}

double phi_antiderivative(double s, const ModelParams& params) {
    const double gap = params.c1 - params.c0;
    // capped branch: F(c0) for every s > c0
    const double arg = s > params.c0 ? params.c0 : s;
    return arg + gap * std::log1p(-arg / params.c1);
}

double to_working_variable(double v, const ModelParams& params) { return -v + params.c0; }

double from_working_variable(double u, const ModelParams& params) { return params.c0 - u; }

double dimensional_consumption(double v, const ModelParams& params) {
    if (v < 0.0) {
        return 0.0;
    }
    return v / (v + params.c_hat());
}

}  // namespace coreshell
