#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hcdn {

constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) { return splitmix64(seed ^ splitmix64(v)); }

using RandomEngine = std::mt19937_64;

/// Seed source for one simulation run. Every stochastic component draws from
/// its own named substream, so adding a component never shifts the numbers
/// another component sees.
class RunRandom {
public:
    explicit RunRandom(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    RandomEngine substream(std::string_view name) const { return RandomEngine(hash_combine(seed_, fnv1a64(name))); }

private:
    std::uint64_t seed_;
};

inline double uniform01(RandomEngine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(RandomEngine& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace hcdn
