#include "cavat/losses.hpp"

#include <cmath>

namespace cavat {

namespace {

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }
double dlog(double p) { return p > kProbFloor ? 1.0 / p : 0.0; }

void require_same(const ProbMap& a, const ProbMap& b, const char* what) {
    if (!a.same_shape(b)) throw InvalidArgument(std::string(what) + ": probability map shapes differ");
}

void require_labels(const ProbMap& p, const DiscreteMask& y) {
    if (!p.same_shape(y)) throw InvalidArgument("cross_entropy: mask shape differs from probability map");
    for (auto v : y.values())
        if (v < 0 || v >= p.classes()) throw InvalidArgument("cross_entropy: label out of range");
}

}  // namespace

void LossWeights::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be finite and >= 0");
}

void MonteCarloConfig::validate() const {
    if (samples < 1) throw InvalidArgument("Monte-Carlo sample count must be >= 1");
    if (baseline && !std::isfinite(*baseline)) throw InvalidArgument("reward baseline must be finite");
}

double cross_entropy(const ProbMap& p, const DiscreteMask& y) {
    require_labels(p, y);
    double total = 0.0;
    for (std::size_t i = 0; i < p.pixels(); ++i) total -= safe_log(p(i, y[i]));
    return total / static_cast<double>(p.pixels());
}

ProbAdjoint cross_entropy_grad(const ProbMap& p, const DiscreteMask& y) {
    require_labels(p, y);
    ProbAdjoint g(p);
    const double n = static_cast<double>(p.pixels());
    for (std::size_t i = 0; i < p.pixels(); ++i) g(i, y[i]) = -dlog(p(i, y[i])) / n;
    return g;
}

double kl_lds(const ProbMap& clean, const ProbMap& adv) {
    require_same(clean, adv, "kl_lds");
    double total = 0.0;
    for (std::size_t i = 0; i < clean.pixels(); ++i)
        for (int c = 0; c < clean.classes(); ++c) {
            const double q = clean(i, c);
            if (q > 0.0) total += q * (safe_log(q) - safe_log(adv(i, c)));
        }
    return total / static_cast<double>(clean.pixels());
}

ProbAdjoint kl_lds_grad(const ProbMap& clean, const ProbMap& adv) {
    require_same(clean, adv, "kl_lds");
    ProbAdjoint g(adv);
    const double n = static_cast<double>(adv.pixels());
    for (std::size_t i = 0; i < adv.pixels(); ++i)
        for (int c = 0; c < adv.classes(); ++c) g(i, c) = -clean(i, c) * dlog(adv(i, c)) / n;
    return g;
}

double entropy_min(const ProbMap& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.pixels(); ++i)
        for (int c = 0; c < p.classes(); ++c) {
            const double v = p(i, c);
            if (v > 0.0) total -= v * safe_log(v);
        }
    return total / static_cast<double>(p.pixels());
}

ProbAdjoint entropy_min_grad(const ProbMap& p) {
    ProbAdjoint g(p);
    const double n = static_cast<double>(p.pixels());
    for (std::size_t i = 0; i < p.pixels(); ++i)
        for (int c = 0; c < p.classes(); ++c) {
            const double v = p(i, c);
            g(i, c) = -(safe_log(v) + (v > kProbFloor ? 1.0 : 0.0)) / n;
        }
    return g;
}

double squared_consistency(const ProbMap& student, const ProbMap& teacher) {
    require_same(student, teacher, "squared_consistency");
    double total = 0.0;
    const auto s = student.values();
    const auto t = teacher.values();
    for (std::size_t j = 0; j < s.size(); ++j) total += (s[j] - t[j]) * (s[j] - t[j]);
    return total / static_cast<double>(student.pixels());
}

ProbAdjoint squared_consistency_grad(const ProbMap& student, const ProbMap& teacher) {
    require_same(student, teacher, "squared_consistency");
    ProbAdjoint g(student);
    const double n = static_cast<double>(student.pixels());
    const auto s = student.values();
    const auto t = teacher.values();
    auto out = g.values();
    for (std::size_t j = 0; j < s.size(); ++j) out[j] = 2.0 * (s[j] - t[j]) / n;
    return g;
}

ConstraintSamples draw_constraint_samples(const ProbMap& p, const Constraint& constraint, const MonteCarloConfig& mc,
                                          Rng& rng) {
    mc.validate();
    ConstraintSamples out;
    out.masks.reserve(mc.samples);
    out.rewards.reserve(mc.samples);
    std::optional<Rng> shared;
    if (mc.shared_seed_stream) shared = rng.fork(0x5eed);
    for (int s = 0; s < mc.samples; ++s) {
        out.masks.push_back(sample_mask(p, rng));
        if (shared) {
            Rng local = *shared;
            out.rewards.push_back(constraint.evaluate(out.masks.back(), local));
        } else {
            out.rewards.push_back(constraint.evaluate(out.masks.back(), rng));
        }
        if (!out.rewards.back().same_shape(out.masks.back()))
            throw InvalidArgument("constraint '" + constraint.name() + "' returned a reward map of the wrong shape");
    }
    return out;
}

double reinforce_surrogate(const ProbMap& p, const ConstraintSamples& samples, std::optional<double> baseline) {
    if (samples.masks.empty()) return 0.0;
    const double b = baseline.value_or(0.0);
    double total = 0.0;
    for (std::size_t s = 0; s < samples.masks.size(); ++s) {
        const auto& mask = samples.masks[s];
        const auto& reward = samples.rewards[s];
        for (std::size_t i = 0; i < p.pixels(); ++i) {
            const double weight = reward[i] - b;
            if (weight != 0.0) total -= weight * safe_log(p(i, mask[i]));
        }
    }
    return total / (static_cast<double>(samples.masks.size()) * static_cast<double>(p.pixels()));
}

ProbAdjoint reinforce_surrogate_grad(const ProbMap& p, const ConstraintSamples& samples,
                                     std::optional<double> baseline) {
    ProbAdjoint g(p);
    if (samples.masks.empty()) return g;
    const double b = baseline.value_or(0.0);
    const double scale = 1.0 / (static_cast<double>(samples.masks.size()) * static_cast<double>(p.pixels()));
    for (std::size_t s = 0; s < samples.masks.size(); ++s) {
        const auto& mask = samples.masks[s];
        const auto& reward = samples.rewards[s];
        for (std::size_t i = 0; i < p.pixels(); ++i) {
            const double weight = reward[i] - b;
            if (weight != 0.0) g(i, mask[i]) -= weight * dlog(p(i, mask[i])) * scale;
        }
    }
    return g;
}

ReinforceResult reinforce_constraint(const ProbMap& p_adv, const Constraint& constraint, const MonteCarloConfig& mc,
                                     Rng& rng) {
    ReinforceResult out;
    out.samples = draw_constraint_samples(p_adv, constraint, mc, rng);
    out.value = reinforce_surrogate(p_adv, out.samples, mc.baseline);
    out.grad = reinforce_surrogate_grad(p_adv, out.samples, mc.baseline);
    double satisfied = 0.0;
    for (const auto& r : out.samples.rewards)
        for (auto v : r.values()) satisfied += v;
    out.mean_reward = satisfied / (static_cast<double>(out.samples.rewards.size()) * p_adv.pixels());
    return out;
}

Image add_images(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw InvalidArgument("image shapes differ");
    Image out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

double cavat_inner(const Image& x, const Perturbation& r, const Network& net, const NetworkParams& params,
                   const LossWeights& weights, const Constraint& constraint, const MonteCarloConfig& mc, Rng& rng) {
    weights.validate();
    const ProbMap clean = net.forward(x, params);
    const ProbMap adv = net.forward(add_images(x, r), params);
    double value = kl_lds(clean, adv);
    // gamma == 0 drops the constraint term without drawing samples.
    if (weights.gamma != 0.0) value += weights.gamma * reinforce_constraint(adv, constraint, mc, rng).value;
    return value;
}

void add_supervised_term(std::span<const Sample> labeled, const Network& net, const NetworkParams& params,
                         LossBreakdown& out) {
    if (out.grad.count() == 0) out.grad = GradientSet::zeros_like(params);
    if (labeled.empty()) return;
    const double scale = 1.0 / static_cast<double>(labeled.size());
    double sup = 0.0;
    for (const auto& s : labeled) {
        const auto pass = net.forward_pass(s.image, params);
        sup += cross_entropy(pass.probs, s.mask);
        out.grad.add_scaled(net.backward(pass, params, cross_entropy_grad(pass.probs, s.mask)).params, scale);
    }
    out.sup = sup * scale;
    out.total += out.sup;
}

void add_cavat_term(std::span<const Image> unlabeled, std::span<const Perturbation> perturbations,
                    const Network& net, const NetworkParams& params, const LossWeights& weights,
                    const Constraint& constraint, const MonteCarloConfig& mc, Rng& rng, LossBreakdown& out) {
    weights.validate();
    if (out.grad.count() == 0) out.grad = GradientSet::zeros_like(params);
    if (unlabeled.empty()) return;
    if (perturbations.size() != unlabeled.size())
        throw InvalidArgument("need one perturbation per unlabeled image");
    const double scale = 1.0 / static_cast<double>(unlabeled.size());
    double lds = 0.0;
    double cons = 0.0;
    for (std::size_t u = 0; u < unlabeled.size(); ++u) {
        const ProbMap clean = net.forward(unlabeled[u], params);
        const auto pass = net.forward_pass(add_images(unlabeled[u], perturbations[u]), params);
        lds += kl_lds(clean, pass.probs);
        ProbAdjoint adjoint = kl_lds_grad(clean, pass.probs);
        if (weights.gamma != 0.0) {
            const auto reinforce = reinforce_constraint(pass.probs, constraint, mc, rng);
            cons += reinforce.value;
            adjoint.add_scaled(reinforce.grad, weights.gamma);
        }
        if (weights.lambda != 0.0)
            out.grad.add_scaled(net.backward(pass, params, adjoint).params, weights.lambda * scale);
    }
    out.lds = lds * scale;
    out.cons = cons * scale;
    out.total += weights.lambda * (out.lds + weights.gamma * out.cons);
}

LossBreakdown total_loss(std::span<const Sample> labeled, std::span<const Image> unlabeled,
                         std::span<const Perturbation> perturbations, const Network& net,
                         const NetworkParams& params, const LossWeights& weights, const Constraint& constraint,
                         const MonteCarloConfig& mc, Rng& rng) {
    LossBreakdown out;
    add_supervised_term(labeled, net, params, out);
    add_cavat_term(unlabeled, perturbations, net, params, weights, constraint, mc, rng, out);
    return out;
}

}  // namespace cavat
