#pragma once

#include <functional>

#include "ivccp/numkit/matrix.hpp"

namespace ivccp {

struct AdamConfig {
    long steps = 1000;
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    bool operator==(const AdamConfig&) const = default;
};

using GradientFn = std::function<Vector(const Vector&)>;

/// Runs exactly cfg.steps Adam updates from theta0. Deterministic.
/// Throws DivergenceError (carrying the step index) on a non-finite gradient.
Vector adam_minimize(const GradientFn& grad_fn, Vector theta0, const AdamConfig& cfg);

}  // namespace ivccp
