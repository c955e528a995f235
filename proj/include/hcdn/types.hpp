#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hcdn {

/// Simulated time in integer nanoseconds. Integer time keeps event ordering
/// exact and reproducible across platforms.
using SimTime = std::int64_t;

inline constexpr SimTime kNanosPerSecond = 1'000'000'000;

constexpr SimTime from_seconds(double s) { return static_cast<SimTime>(s * 1e9 + (s >= 0 ? 0.5 : -0.5)); }
constexpr SimTime from_millis(std::int64_t ms) { return ms * 1'000'000; }
constexpr double to_seconds(SimTime t) { return static_cast<double>(t) / 1e9; }

using NodeId = int;
using LinkId = int;

/// Direction 0 carries traffic from link endpoint a to endpoint b.
enum class Direction : std::uint8_t { AtoB = 0, BtoA = 1 };

constexpr int index_of(Direction d) { return static_cast<int>(d); }
constexpr Direction reverse(Direction d) { return d == Direction::AtoB ? Direction::BtoA : Direction::AtoB; }

struct Hop {
    LinkId link = -1;
    Direction dir = Direction::AtoB;
    friend bool operator==(const Hop&, const Hop&) = default;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hcdn
