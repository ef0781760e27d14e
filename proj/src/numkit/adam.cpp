#include "ivccp/numkit/adam.hpp"

#include <cmath>
#include <string>

#include "ivccp/error.hpp"

namespace ivccp {

Vector adam_minimize(const GradientFn& grad_fn, Vector theta, const AdamConfig& cfg) {
    if (cfg.steps < 1) throw InputError("adam: steps must be at least 1");
    if (cfg.lr < 0.0) throw InputError("adam: learning rate must be nonnegative");
    Vector m = Vector::Zero(theta.size());
    Vector v = Vector::Zero(theta.size());
    double b1t = 1.0;
    double b2t = 1.0;
    for (long step = 0; step < cfg.steps; ++step) {
        const Vector g = grad_fn(theta);
        if (g.size() != theta.size()) throw InputError("adam: gradient has the wrong dimension");
        if (!g.allFinite()) throw DivergenceError("adam: non-finite gradient at step " + std::to_string(step), step);
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        const double lr_t = cfg.lr * std::sqrt(1.0 - b2t) / (1.0 - b1t);
        theta.array() -= lr_t * m.array() / (v.array().sqrt() + cfg.eps);
    }
    return theta;
}

}  // namespace ivccp
