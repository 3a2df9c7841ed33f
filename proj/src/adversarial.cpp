#include "cavat/adversarial.hpp"

#include <cmath>
#include <limits>

namespace cavat {

void AdvConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be finite and >= 0");
    if (xi && !(*xi > 0.0 && std::isfinite(*xi))) throw InvalidArgument("xi must be finite and > 0");
    if (power_iters < 1) throw InvalidArgument("power_iters must be >= 1");
}

double AdvConfig::probe_scale(const Image& x) const {
    if (xi) return *xi;
    const double base = 10.0 * std::sqrt(std::numeric_limits<double>::epsilon());
    const double n = l2_norm(x);
    return n > 0.0 ? base * n : base;
}

double l2_norm(const Image& x) {
    double s = 0.0;
    for (double v : x.values()) s += v * v;
    return std::sqrt(s);
}

Image random_direction(const Image& like, Rng& rng) {
    Image d(like.height(), like.width());
    double n = 0.0;
    while (n == 0.0) {
        for (double& v : d.values()) v = rng.normal();
        n = l2_norm(d);
    }
    for (double& v : d.values()) v /= n;
    return d;
}

namespace {

Image scaled(const Image& d, double s) {
    Image out = d;
    for (double& v : out.values()) v *= s;
    return out;
}

}  // namespace

Perturbation gen_perturbation(const Image& x, const Network& net, const NetworkParams& params,
                              const LossWeights& weights, const Constraint& constraint, const MonteCarloConfig& mc,
                              const AdvConfig& cfg, Rng& rng, PerturbationInfo* info) {
    cfg.validate();
    weights.validate();
    if (cfg.epsilon == 0.0) return Image(x.height(), x.width(), 0.0);

    const Image start = random_direction(x, rng);
    Image d = start;
    const ProbMap clean = net.forward(x, params);
    const double xi = cfg.probe_scale(x);
    double grad_norm = 0.0;
    for (int it = 0; it < cfg.power_iters; ++it) {
        const auto pass = net.forward_pass(add_images(x, scaled(d, xi)), params);
        ProbAdjoint adjoint = kl_lds_grad(clean, pass.probs);
        if (weights.gamma != 0.0) {
            adjoint.add_scaled(reinforce_constraint(pass.probs, constraint, mc, rng).grad, weights.gamma);
        }
        const Image g = *net.backward(pass, params, adjoint, true).input;
        grad_norm = l2_norm(g);
        if (grad_norm == 0.0 || !std::isfinite(grad_norm)) break;
        d = scaled(g, 1.0 / grad_norm);
    }
    const bool fallback = grad_norm == 0.0 || !std::isfinite(grad_norm);
    if (fallback) d = start;
    if (info) *info = {fallback, grad_norm};
    return scaled(d, cfg.epsilon);
}

}  // namespace cavat
