/**
 * @file core.hpp
 * @brief Shared vocabulary types, error classes and seeding helpers.
 */
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace orbitlab {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;

/// |det| at or below this value counts as singular everywhere in the library.
inline constexpr double kSingularDet = 1e-12;

/// Raised on invalid arguments, malformed configs and rejected inputs.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot produce a finite / admissible result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Engine for stream `k` of a seeded computation. Stream k uses seed ^ k,
/// so a fixed block partition gives results independent of worker count.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t k) {
    return std::mt19937_64(mix_seed(seed ^ k));
}

}  // namespace orbitlab
