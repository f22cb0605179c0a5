#include "ufkm/rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "ufkm/error.hpp"

namespace ufkm {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0,1] keeps the log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::size_t Rng::uniform_index(std::size_t bound) {
    if (bound == 0) throw ConfigError("uniform_index: bound must be nonzero");
    return static_cast<std::size_t>(next_u64() % bound);
}

bool Rng::bernoulli(double p) {
    return uniform() < p;
}

std::array<std::uint64_t, 6> Rng::state() const {
    std::array<std::uint64_t, 6> out{};
    for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = s_[static_cast<std::size_t>(i)];
    std::uint64_t bits = 0;
    std::memcpy(&bits, &spare_, sizeof bits);
    out[4] = bits;
    out[5] = has_spare_ ? 1 : 0;
    return out;
}

void Rng::restore(const std::array<std::uint64_t, 6>& s) {
    for (int i = 0; i < 4; ++i) s_[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)];
    std::memcpy(&spare_, &s[4], sizeof spare_);
    has_spare_ = s[5] != 0;
}

std::vector<double> normal_sample(Rng& rng, std::size_t n) {
    if (n == 0) throw ConfigError("normal_sample: empty request (n must be >= 1)");
    std::vector<double> out(n);
    for (auto& v : out) v = rng.normal();
    return out;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace ufkm
