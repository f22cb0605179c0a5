#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace ufkm {

/// Deterministic 64-bit-seedable random generator (xoshiro256++ seeded via
/// splitmix64). The same seed yields the same stream of uniform and normal
/// draws on every platform; no libc or libstdc++ distribution is involved.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Standard normal draw via Box-Muller on the uniform stream.
    double normal();

    /// Uniform integer in [0, bound). bound must be nonzero.
    std::size_t uniform_index(std::size_t bound);

    bool bernoulli(double p);

    /// Full generator state, for checkpointing. 4 engine words plus the
    /// cached Box-Muller spare (bit pattern) and its validity flag.
    std::array<std::uint64_t, 6> state() const;
    void restore(const std::array<std::uint64_t, 6>& s);

  private:
    std::array<std::uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// n i.i.d. standard-normal draws. Throws ConfigError when n == 0.
std::vector<double> normal_sample(Rng& rng, std::size_t n);

/// Deterministic in-place Fisher-Yates shuffle driven by rng.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng);

}  // namespace ufkm
