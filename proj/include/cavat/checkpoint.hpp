#pragma once

#include <filesystem>

#include "cavat/net.hpp"

namespace cavat {

/// Text checkpoint. Layout:
///
///     CAVAT-CHECKPOINT 1
///     arch hidden=8,16 classes=2 kernel=3
///     tensors <count>
///     tensor <name> <rank> <dim>...
///     <values as C99 hex floats, space separated, one line>
///     ...
///     end
///
/// Hex floats make the round trip bit exact.
struct Checkpoint {
    NetConfig config;
    NetworkParams params;
};

inline constexpr const char* kCheckpointMagic = "CAVAT-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cavat
