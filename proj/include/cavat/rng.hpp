#pragma once

#include <cstdint>
#include <random>

namespace cavat {

/// Seedable random stream with platform-independent output.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// The standard distributions are implementation-defined, so the conversions
/// to doubles, bounded integers and normals are done here instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t position() const noexcept { return position_; }

    std::uint64_t next_u64() {
        ++position_;
        return engine_();
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal via Box-Muller. The spare value is cached.
    double normal();

    /// Derives an independent child stream; does not advance this stream.
    Rng fork(std::uint64_t stream) const;

    friend bool operator==(const Rng& a, const Rng& b) {
        return a.seed_ == b.seed_ && a.position_ == b.position_ && a.engine_ == b.engine_ &&
               a.has_spare_ == b.has_spare_ && (!a.has_spare_ || a.spare_ == b.spare_);
    }

private:
    std::uint64_t seed_;
    std::uint64_t position_ = 0;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 finalizer; used to derive stream seeds from (seed, stream id).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cavat
