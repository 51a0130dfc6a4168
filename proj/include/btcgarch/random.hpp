#pragma once

#include <cstdint>
#include <random>

namespace btcg {

/// Name recorded in every generated artifact.
inline constexpr const char* kRngAlgorithm = "mt19937_64";

/// Seeded generator. Uniforms use the top 53 bits of each 64-bit draw, offset
/// by half a unit so they never hit 0 or 1; normals are the inverse normal CDF
/// of a uniform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();
    double normal();

private:
    std::mt19937_64 engine_;
};

}  // namespace btcg
