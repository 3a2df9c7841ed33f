#pragma once

#include <span>
#include <string>

#include "cavat/adversarial.hpp"
#include "cavat/losses.hpp"

namespace cavat {

enum class MethodId { Baseline, EntropyMin, Vat, MeanTeacher, Cavat, CavatNoPerturb, MtCavat };

std::string to_string(MethodId id);
/// Throws ConfigError for unknown names.
MethodId parse_method(const std::string& name);

struct MethodSpec {
    MethodId id = MethodId::Cavat;
    double ema_decay = 0.99;         // mean-teacher EMA decay
    double consistency_noise = 0.1;  // std of Gaussian input noise for the student

    bool uses_teacher() const noexcept { return id == MethodId::MeanTeacher || id == MethodId::MtCavat; }
    bool uses_perturbation() const noexcept {
        return id == MethodId::Vat || id == MethodId::Cavat || id == MethodId::MtCavat;
    }
    void validate() const;
};

/// teacher <- alpha * teacher + (1 - alpha) * student.
void ema_update(NetworkParams& teacher, const NetworkParams& student, double alpha);

/// Everything a method needs besides the batches and parameters.
struct MethodContext {
    const Network& net;
    LossWeights weights;
    const Constraint& constraint;
    MonteCarloConfig mc;
    AdvConfig adv;
};

/// Independent random streams for one loss evaluation, split off the caller's
/// stream in a fixed order: perturbation search, outer loss samples, input noise.
struct MethodStreams {
    Rng perturb;
    Rng loss;
    Rng noise;

    static MethodStreams split(Rng& rng);
};

/// Supervised cross-entropy plus the method's unlabeled term, with the
/// gradient with respect to `student`. `teacher` is read only, and required
/// for the mean-teacher methods.
LossBreakdown method_loss(const MethodSpec& spec, std::span<const Sample> labeled, std::span<const Image> unlabeled,
                          const NetworkParams& student, const NetworkParams* teacher, const MethodContext& ctx,
                          Rng& rng);

}  // namespace cavat
