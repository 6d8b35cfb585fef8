#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pamcts {

// Seedable random stream passed explicitly to everything that samples.
// Draw helpers are written out by hand so that results do not depend on the
// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform index in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n);

    // Independent child stream; advances this stream by one draw.
    Rng split();

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Stable seed derivation. Mixing is order sensitive and independent of
// the platform's std::hash.
class SeedBuilder {
public:
    explicit SeedBuilder(std::uint64_t base) : state_(splitmix64(base)) {}

    SeedBuilder& add(std::uint64_t v);
    SeedBuilder& add(double v);
    SeedBuilder& add(std::string_view s);

    std::uint64_t finish() const { return splitmix64(state_); }

private:
    std::uint64_t state_;
};

}  // namespace pamcts
