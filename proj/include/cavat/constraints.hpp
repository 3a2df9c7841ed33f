#pragma once

#include <memory>
#include <optional>
#include <string>

#include "cavat/grid.hpp"

namespace cavat {

struct ConnectivityConfig {
    int seed_window = 5;       // l: window used to rank seed candidates
    int violation_window = 3;  // k: window checked for stray foreground
    Adjacency adjacency = Adjacency::Four;
    int foreground_label = 1;

    void validate() const;
};

/// Foreground pixel with the largest l x l foreground count; ties broken
/// uniformly with `rng`. Empty foreground gives nullopt and consumes no randomness.
std::optional<Coord> select_seed(const BinaryMask& mask, const ConnectivityConfig& cfg, Rng& rng);

/// Local connectivity reward for a fixed seed: J_i = 1 iff the k x k window
/// around i holds no foreground outside the seed's component.
RewardMap connectivity_reward_at(const BinaryMask& mask, Coord seed, const ConnectivityConfig& cfg);

/// Full reward: seed selection followed by connectivity_reward_at. Empty
/// foreground is vacuously satisfied (all ones).
RewardMap connectivity_reward(const BinaryMask& mask, const ConnectivityConfig& cfg, Rng& rng);

/// A per-pixel binary reward over sampled label masks.
class Constraint {
public:
    virtual ~Constraint() = default;
    virtual RewardMap evaluate(const DiscreteMask& mask, Rng& rng) const = 0;
    virtual std::string name() const = 0;
};

class ConnectivityConstraint final : public Constraint {
public:
    explicit ConnectivityConstraint(ConnectivityConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }
    RewardMap evaluate(const DiscreteMask& mask, Rng& rng) const override;
    std::string name() const override { return "connectivity"; }
    const ConnectivityConfig& config() const noexcept { return cfg_; }

private:
    ConnectivityConfig cfg_;
};

/// Always satisfied; used for ablations.
class TrivialConstraint final : public Constraint {
public:
    RewardMap evaluate(const DiscreteMask& mask, Rng& rng) const override;
    std::string name() const override { return "trivial"; }
};

/// Whole-mask connectivity broadcast to every pixel: all ones when the
/// foreground is empty or a single component, all zeros otherwise.
class GlobalConnectivityConstraint final : public Constraint {
public:
    explicit GlobalConnectivityConstraint(Adjacency adjacency = Adjacency::Four, int foreground_label = 1)
        : adjacency_(adjacency), foreground_label_(foreground_label) {}
    RewardMap evaluate(const DiscreteMask& mask, Rng& rng) const override;
    std::string name() const override { return "global_connectivity"; }

private:
    Adjacency adjacency_;
    int foreground_label_;
};

/// Builds a constraint from its name: "connectivity", "trivial" or "global_connectivity".
std::unique_ptr<Constraint> make_constraint(const std::string& name, const ConnectivityConfig& cfg);

}  // namespace cavat
