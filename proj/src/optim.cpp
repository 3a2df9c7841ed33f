#include "cavat/optim.hpp"

#include <cmath>
#include <numbers>

namespace cavat {

double lr_at(std::int64_t step, const LrSchedule& s) {
    if (step <= 0) return s.warmup_steps > 0 ? 0.0 : s.peak;
    if (step >= s.total_steps) return s.floor;
    if (step < s.warmup_steps) return s.peak * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
    const double span = static_cast<double>(s.total_steps - s.warmup_steps);
    const double progress = static_cast<double>(step - s.warmup_steps) / span;
    return s.floor + (s.peak - s.floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

OptimizerState OptimizerState::for_params(const NetworkParams& params, AdamConfig adam, LrSchedule schedule) {
    if (schedule.total_steps < 1 || schedule.warmup_steps < 0 || schedule.warmup_steps > schedule.total_steps)
        throw InvalidArgument("learning-rate schedule needs 0 <= warmup <= total and total >= 1");
    return OptimizerState{0, MomentSet::zeros_like(params), MomentSet::zeros_like(params), adam, schedule};
}

void optimizer_step(NetworkParams& params, const GradientSet& grads, OptimizerState& state) {
    if (!params.same_shape(grads) || !params.same_shape(state.first) || !params.same_shape(state.second))
        throw InvalidArgument("optimizer shapes do not match parameters");

    const auto& a = state.adam;
    const std::int64_t t = ++state.step;
    const double lr = lr_at(t, state.schedule);
    const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(t));

    // RAdam: rectify once the variance estimate is tractable, otherwise fall back to momentum SGD.
    bool adaptive = true;
    double rect = 1.0;
    if (a.rectified) {
        const double rho_inf = 2.0 / (1.0 - a.beta2) - 1.0;
        const double beta2_t = std::pow(a.beta2, static_cast<double>(t));
        const double rho_t = rho_inf - 2.0 * static_cast<double>(t) * beta2_t / (1.0 - beta2_t);
        if (rho_t > 5.0) {
            rect = std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
        } else {
            adaptive = false;
        }
    }

    for (std::size_t i = 0; i < params.count(); ++i) {
        auto& p = params[i].values;
        const auto& g = grads[i].values;
        auto& m = state.first[i].values;
        auto& v = state.second[i].values;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j] + a.weight_decay * p[j];
            m[j] = a.beta1 * m[j] + (1.0 - a.beta1) * gj;
            v[j] = a.beta2 * v[j] + (1.0 - a.beta2) * gj * gj;
            const double m_hat = m[j] / bc1;
            if (adaptive) {
                const double v_hat = v[j] / bc2;
                p[j] -= lr * rect * m_hat / (std::sqrt(v_hat) + a.eps);
            } else {
                p[j] -= lr * m_hat;
            }
        }
    }
}

}  // namespace cavat
