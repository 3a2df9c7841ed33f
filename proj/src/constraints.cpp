#include "cavat/constraints.hpp"

namespace cavat {

void ConnectivityConfig::validate() const {
    if (seed_window < 1 || seed_window % 2 == 0) throw InvalidArgument("seed window l must be odd and >= 1");
    if (violation_window < 1 || violation_window % 2 == 0)
        throw InvalidArgument("violation window k must be odd and >= 1");
}

std::optional<Coord> select_seed(const BinaryMask& mask, const ConnectivityConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto counts = box_sum(mask, cfg.seed_window);
    std::int32_t best = -1;
    std::vector<Coord> ties;
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask(r, c)) continue;
            const auto v = counts(r, c);
            if (v > best) {
                best = v;
                ties.clear();
            }
            if (v == best) ties.push_back({r, c});
        }
    }
    if (ties.empty()) return std::nullopt;
    return ties[rng.uniform_index(ties.size())];
}

RewardMap connectivity_reward_at(const BinaryMask& mask, Coord seed, const ConnectivityConfig& cfg) {
    cfg.validate();
    const BinaryMask component = component_mask(mask, seed, cfg.adjacency);
    // Foreground outside the component; set difference, never negative.
    BinaryMask stray(mask.height(), mask.width());
    for (std::size_t i = 0; i < mask.size(); ++i) stray[i] = (mask[i] && !component[i]) ? 1 : 0;
    const auto violations = box_sum(stray, cfg.violation_window);
    RewardMap reward(mask.height(), mask.width());
    for (std::size_t i = 0; i < reward.size(); ++i) reward[i] = violations[i] == 0 ? 1 : 0;
    return reward;
}

RewardMap connectivity_reward(const BinaryMask& mask, const ConnectivityConfig& cfg, Rng& rng) {
    const auto seed = select_seed(mask, cfg, rng);
    if (!seed) return RewardMap(mask.height(), mask.width(), 1);
    return connectivity_reward_at(mask, *seed, cfg);
}

RewardMap ConnectivityConstraint::evaluate(const DiscreteMask& mask, Rng& rng) const {
    return connectivity_reward(foreground(mask, cfg_.foreground_label), cfg_, rng);
}

RewardMap TrivialConstraint::evaluate(const DiscreteMask& mask, Rng&) const {
    return RewardMap(mask.height(), mask.width(), 1);
}

RewardMap GlobalConnectivityConstraint::evaluate(const DiscreteMask& mask, Rng&) const {
    const bool ok = is_connected(foreground(mask, foreground_label_), adjacency_);
    return RewardMap(mask.height(), mask.width(), ok ? 1 : 0);
}

std::unique_ptr<Constraint> make_constraint(const std::string& name, const ConnectivityConfig& cfg) {
    if (name == "connectivity") return std::make_unique<ConnectivityConstraint>(cfg);
    if (name == "trivial") return std::make_unique<TrivialConstraint>();
    if (name == "global_connectivity")
        return std::make_unique<GlobalConnectivityConstraint>(cfg.adjacency, cfg.foreground_label);
    throw ConfigError("unknown constraint '" + name + "'");
}

}  // namespace cavat
