#pragma once

#include <cstdint>

#include "cavat/tensor.hpp"

namespace cavat {

/// Linear warm-up from 0 to `peak`, then cosine decay from `peak` to `floor`.
struct LrSchedule {
    double peak = 1e-5;
    std::int64_t warmup_steps = 0;
    std::int64_t total_steps = 1;
    double floor = 0.0;

    static LrSchedule constant(double lr) { return {lr, 0, 1, lr}; }
};

/// Learning rate at `step`; steps past the end clamp to the floor.
double lr_at(std::int64_t step, const LrSchedule& schedule);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    // Variance rectification (RAdam).
    bool rectified = false;
};

using MomentSet = TensorSet<struct MomentTag>;

struct OptimizerState {
    std::int64_t step = 0;
    MomentSet first;
    MomentSet second;
    AdamConfig adam;
    LrSchedule schedule;

    static OptimizerState for_params(const NetworkParams& params, AdamConfig adam, LrSchedule schedule);
};

/// One bias-corrected Adam update at lr_at(step + 1). Increments the step.
void optimizer_step(NetworkParams& params, const GradientSet& grads, OptimizerState& state);

}  // namespace cavat
