#include "cavat/methods.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace cavat {

namespace {

constexpr std::array<std::pair<MethodId, const char*>, 7> kMethodNames{{
    {MethodId::Baseline, "baseline"},
    {MethodId::EntropyMin, "entropy_min"},
    {MethodId::Vat, "vat"},
    {MethodId::MeanTeacher, "mean_teacher"},
    {MethodId::Cavat, "cavat"},
    {MethodId::CavatNoPerturb, "cavat_no_perturb"},
    {MethodId::MtCavat, "mt_cavat"},
}};

}  // namespace

std::string to_string(MethodId id) {
    for (const auto& [m, name] : kMethodNames)
        if (m == id) return name;
    return "unknown";
}

MethodId parse_method(const std::string& name) {
    for (const auto& [m, n] : kMethodNames)
        if (name == n) return m;
    throw ConfigError("unknown method '" + name + "'");
}

void MethodSpec::validate() const {
    if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) throw InvalidArgument("EMA decay must be in [0, 1]");
    if (!(consistency_noise >= 0.0) || !std::isfinite(consistency_noise))
        throw InvalidArgument("consistency noise must be finite and >= 0");
}

void ema_update(NetworkParams& teacher, const NetworkParams& student, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("EMA decay must be in [0, 1]");
    if (!teacher.same_shape(student)) throw InvalidArgument("teacher and student shapes differ");
    for (std::size_t i = 0; i < teacher.count(); ++i) {
        auto& t = teacher[i].values;
        const auto& s = student[i].values;
        for (std::size_t j = 0; j < t.size(); ++j) t[j] = alpha * t[j] + (1.0 - alpha) * s[j];
    }
}

MethodStreams MethodStreams::split(Rng& rng) {
    Rng perturb(rng.next_u64());
    Rng loss(rng.next_u64());
    Rng noise(rng.next_u64());
    return {perturb, loss, noise};
}

namespace {

void add_entropy_term(std::span<const Image> unlabeled, const Network& net, const NetworkParams& params,
                      double lambda, LossBreakdown& out) {
    if (unlabeled.empty()) return;
    const double scale = 1.0 / static_cast<double>(unlabeled.size());
    double total = 0.0;
    for (const auto& x : unlabeled) {
        const auto pass = net.forward_pass(x, params);
        total += entropy_min(pass.probs);
        if (lambda != 0.0)
            out.grad.add_scaled(net.backward(pass, params, entropy_min_grad(pass.probs)).params, lambda * scale);
    }
    out.other = total * scale;
    out.total += lambda * out.other;
}

void add_consistency_term(std::span<const Image> unlabeled, const Network& net, const NetworkParams& student,
                          const NetworkParams& teacher, double lambda, double noise_std, Rng& noise,
                          LossBreakdown& out) {
    if (unlabeled.empty()) return;
    const double scale = 1.0 / static_cast<double>(unlabeled.size());
    double total = 0.0;
    for (const auto& x : unlabeled) {
        Image noisy = x;
        for (double& v : noisy.values()) v += noise_std * noise.normal();
        const ProbMap target = net.forward(x, teacher);
        const auto pass = net.forward_pass(noisy, student);
        total += squared_consistency(pass.probs, target);
        if (lambda != 0.0)
            out.grad.add_scaled(net.backward(pass, student, squared_consistency_grad(pass.probs, target)).params,
                                lambda * scale);
    }
    out.other = total * scale;
    out.total += lambda * out.other;
}

std::vector<Perturbation> perturbations_for(std::span<const Image> unlabeled, const NetworkParams& params,
                                            const MethodContext& ctx, const LossWeights& weights, Rng& rng) {
    std::vector<Perturbation> out;
    out.reserve(unlabeled.size());
    for (const auto& x : unlabeled)
        out.push_back(gen_perturbation(x, ctx.net, params, weights, ctx.constraint, ctx.mc, ctx.adv, rng));
    return out;
}

std::vector<Perturbation> zero_perturbations(std::span<const Image> unlabeled) {
    std::vector<Perturbation> out;
    for (const auto& x : unlabeled) out.emplace_back(x.height(), x.width(), 0.0);
    return out;
}

}  // namespace

LossBreakdown method_loss(const MethodSpec& spec, std::span<const Sample> labeled, std::span<const Image> unlabeled,
                          const NetworkParams& student, const NetworkParams* teacher, const MethodContext& ctx,
                          Rng& rng) {
    spec.validate();
    ctx.weights.validate();
    if (spec.uses_teacher() && teacher == nullptr) throw InvalidArgument("mean-teacher methods need teacher params");

    auto streams = MethodStreams::split(rng);
    LossBreakdown out;
    out.grad = GradientSet::zeros_like(student);
    add_supervised_term(labeled, ctx.net, student, out);

    const double lambda = ctx.weights.lambda;
    switch (spec.id) {
        case MethodId::Baseline:
            break;
        case MethodId::EntropyMin:
            add_entropy_term(unlabeled, ctx.net, student, lambda, out);
            break;
        case MethodId::MeanTeacher:
            add_consistency_term(unlabeled, ctx.net, student, *teacher, lambda, spec.consistency_noise, streams.noise,
                                 out);
            break;
        case MethodId::Vat:
        case MethodId::Cavat:
        case MethodId::CavatNoPerturb:
        case MethodId::MtCavat: {
            LossWeights weights = ctx.weights;
            if (spec.id == MethodId::Vat) weights.gamma = 0.0;
            if (spec.id == MethodId::MtCavat) {
                add_consistency_term(unlabeled, ctx.net, student, *teacher, lambda, spec.consistency_noise,
                                     streams.noise, out);
            }
            const auto perturbations = spec.id == MethodId::CavatNoPerturb
                                           ? zero_perturbations(unlabeled)
                                           : perturbations_for(unlabeled, student, ctx, weights, streams.perturb);
            add_cavat_term(unlabeled, perturbations, ctx.net, student, weights, ctx.constraint, ctx.mc, streams.loss,
                           out);
            break;
        }
    }
    return out;
}

}  // namespace cavat
