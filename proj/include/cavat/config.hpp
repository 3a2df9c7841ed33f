#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cavat/adversarial.hpp"
#include "cavat/data.hpp"
#include "cavat/methods.hpp"
#include "cavat/net.hpp"
#include "cavat/optim.hpp"

namespace cavat {

/// Every setting of a training run. Loaded from a flat "key = value" file;
/// keys are listed in config_keys() and documented in the README.
struct TrainConfig {
    MethodSpec method;
    LossWeights weights;
    MonteCarloConfig mc;
    AdvConfig adv;
    ConnectivityConfig connectivity;
    std::string constraint = "connectivity";

    NetConfig net;
    AdamConfig adam;
    double lr = 1e-5;
    double lr_floor = 0.0;
    std::int64_t warmup_steps = 100;
    std::int64_t total_steps = 3000;
    int labeled_batch = 4;
    int unlabeled_batch = 16;

    // Data: read from data_dir when set, otherwise generated in memory.
    std::filesystem::path data_dir;
    int data_n = 500;
    ShapeParams shapes;
    std::uint64_t data_seed = 1;
    double labeled_ratio = 0.05;
    double val_fraction = 0.2;
    std::uint64_t split_seed = 1;

    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::filesystem::path out_dir = "runs/default";
    int eval_every = 100;
    int n_conn_draws = 5;
    bool log_wall_time = false;
    bool write_checkpoint = true;

    void validate() const;

    LrSchedule schedule() const { return {lr, warmup_steps, total_steps, lr_floor}; }
};

std::vector<std::string> config_keys();

/// Applies one "key = value" setting. Throws ConfigError for unknown keys or bad values.
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Current value of `key` in the same text form set_config_value accepts.
std::string get_config_value(const TrainConfig& cfg, const std::string& key);

TrainConfig load_config(const std::filesystem::path& path);

/// Canonical text form: one "key = value" line per key, in config_keys() order.
std::string config_to_text(const TrainConfig& cfg);

/// FNV-1a 64 hash of config_to_text with out_dir cleared, as 16 hex digits.
std::string config_hash(const TrainConfig& cfg);

}  // namespace cavat
