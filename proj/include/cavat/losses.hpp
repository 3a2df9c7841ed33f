#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cavat/constraints.hpp"
#include "cavat/grid.hpp"
#include "cavat/net.hpp"

namespace cavat {

// All pixel reductions are means, so the weights below do not depend on
// image resolution.

struct LossWeights {
    double lambda = 1e-3;  // weight of the unlabeled term
    double gamma = 1.0;    // weight of the constraint term inside the adversarial objective

    void validate() const;
};

struct MonteCarloConfig {
    int samples = 10;
    // Every sample's constraint evaluation starts from the same random state,
    // so seed tie-breaks are shared instead of redrawn per sample.
    bool shared_seed_stream = false;
    // Constant reward baseline subtracted from J; off when empty.
    std::optional<double> baseline;

    void validate() const;
};

/// Image with its ground-truth mask.
struct Sample {
    Image image;
    DiscreteMask mask;
    friend bool operator==(const Sample&, const Sample&) = default;
};

using Perturbation = Image;

double cross_entropy(const ProbMap& p, const DiscreteMask& y);
ProbAdjoint cross_entropy_grad(const ProbMap& p, const DiscreteMask& y);

/// KL(clean || adv) averaged over pixels. The gradient is taken with respect
/// to `adv` only; `clean` is a constant target.
double kl_lds(const ProbMap& clean, const ProbMap& adv);
ProbAdjoint kl_lds_grad(const ProbMap& clean, const ProbMap& adv);

/// Mean per-pixel Shannon entropy.
double entropy_min(const ProbMap& p);
ProbAdjoint entropy_min_grad(const ProbMap& p);

/// Mean over pixels of the squared distance between the two class vectors.
/// Gradient with respect to `student` only.
double squared_consistency(const ProbMap& student, const ProbMap& teacher);
ProbAdjoint squared_consistency_grad(const ProbMap& student, const ProbMap& teacher);

/// Sampled masks and their rewards; both are constants for differentiation.
struct ConstraintSamples {
    std::vector<DiscreteMask> masks;
    std::vector<RewardMap> rewards;
};

ConstraintSamples draw_constraint_samples(const ProbMap& p, const Constraint& constraint, const MonteCarloConfig& mc,
                                          Rng& rng);

/// -(1/m) sum_s mean_i (J_i - b) log p(y_i^(s)): the score-function surrogate.
double reinforce_surrogate(const ProbMap& p, const ConstraintSamples& samples,
                           std::optional<double> baseline = std::nullopt);
ProbAdjoint reinforce_surrogate_grad(const ProbMap& p, const ConstraintSamples& samples,
                                     std::optional<double> baseline = std::nullopt);

struct ReinforceResult {
    double value = 0.0;
    ProbAdjoint grad;
    double mean_reward = 0.0;
    ConstraintSamples samples;
};

/// Draws m masks from `p_adv`, scores them and returns the surrogate with its gradient.
ReinforceResult reinforce_constraint(const ProbMap& p_adv, const Constraint& constraint, const MonteCarloConfig& mc,
                                     Rng& rng);

/// Inner adversarial objective at perturbation r:
/// kl_lds(f(x), f(x + r)) + gamma * reinforce_constraint(f(x + r)).
double cavat_inner(const Image& x, const Perturbation& r, const Network& net, const NetworkParams& params,
                   const LossWeights& weights, const Constraint& constraint, const MonteCarloConfig& mc, Rng& rng);

/// Loss value split by term, with the gradient of `total` w.r.t. the parameters.
struct LossBreakdown {
    double total = 0.0;
    double sup = 0.0;
    double lds = 0.0;
    double cons = 0.0;
    double other = 0.0;  // method-specific unlabeled term (entropy, consistency)
    GradientSet grad;
};

/// Mean cross-entropy over the labeled batch, accumulated into `out`.
void add_supervised_term(std::span<const Sample> labeled, const Network& net, const NetworkParams& params,
                         LossBreakdown& out);

/// lambda * mean over the unlabeled batch of the adversarial objective at the
/// given perturbations (one per unlabeled image), accumulated into `out`.
void add_cavat_term(std::span<const Image> unlabeled, std::span<const Perturbation> perturbations,
                    const Network& net, const NetworkParams& params, const LossWeights& weights,
                    const Constraint& constraint, const MonteCarloConfig& mc, Rng& rng, LossBreakdown& out);

/// Supervised term plus lambda times the adversarial term. An empty unlabeled
/// batch contributes zero.
LossBreakdown total_loss(std::span<const Sample> labeled, std::span<const Image> unlabeled,
                         std::span<const Perturbation> perturbations, const Network& net,
                         const NetworkParams& params, const LossWeights& weights, const Constraint& constraint,
                         const MonteCarloConfig& mc, Rng& rng);

Image add_images(const Image& a, const Image& b);

}  // namespace cavat
