#pragma once

#include <optional>

#include "cavat/losses.hpp"

namespace cavat {

struct AdvConfig {
    double epsilon = 0.5;       // L2 radius, in normalized intensity units
    std::optional<double> xi;   // probe scale; defaults to 10 * sqrt(machine eps) * ||x||
    int power_iters = 1;

    void validate() const;
    double probe_scale(const Image& x) const;
};

struct PerturbationInfo {
    bool fallback = false;  // gradient vanished; the random direction was used
    double grad_norm = 0.0;
};

/// Approximate maximiser of the adversarial objective on the epsilon-sphere,
/// found by power iteration from a random direction. The constraint term's
/// input gradient flows through log p of the sampled labels.
Perturbation gen_perturbation(const Image& x, const Network& net, const NetworkParams& params,
                              const LossWeights& weights, const Constraint& constraint, const MonteCarloConfig& mc,
                              const AdvConfig& cfg, Rng& rng, PerturbationInfo* info = nullptr);

/// Unit-norm Gaussian direction with the shape of `like`.
Image random_direction(const Image& like, Rng& rng);

double l2_norm(const Image& x);

}  // namespace cavat
