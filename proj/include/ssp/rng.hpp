#pragma once

// Seedable, portable randomness. One master seed per experiment; every
// consumer (wave phases, KS amplitudes, data splits, weight init, epoch
// shuffles) draws from its own named substream so adding a consumer never
// perturbs the others.

#include <cstdint>
#include <string_view>
#include <vector>

namespace ssp {

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGolden64);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// xoshiro256** by Blackman & Vigna. Output sequence is fully determined by
/// the 256-bit state, independent of platform or standard library.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, n). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t x = next();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = -n % n;
            while (lo < threshold) {
                x = next();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

/// Derive the generator for purpose `tag`, instance `index`, from a master
/// seed. Distinct (tag, index) pairs give statistically independent streams.
inline Xoshiro256 substream(std::uint64_t master, std::string_view tag,
                            std::uint64_t index = 0) {
    std::uint64_t s = master;
    std::uint64_t mixed = splitmix64(s) ^ fnv1a64(tag);
    mixed += kGolden64 * (index + 1);
    return Xoshiro256(mixed);
}

/// A derived 64-bit seed for purpose `tag`, instance `index` (for handing a
/// whole child seed to a sub-task rather than a generator).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t s = master ^ fnv1a64(tag);
    std::uint64_t mixed = splitmix64(s) + kGolden64 * (index + 1);
    return splitmix64(mixed);
}

}  // namespace ssp
