#include "pamcts/rng.hpp"

#include <bit>
#include <stdexcept>

namespace pamcts {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    if (n == 1) return 0;
    // Rejection sampling on the top bits; unbiased for any n.
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return static_cast<std::size_t>(v % range);
}

Rng Rng::split() { return Rng(splitmix64(engine_())); }

SeedBuilder& SeedBuilder::add(std::uint64_t v) {
    state_ = splitmix64(state_ ^ splitmix64(v + 0x632be59bd9b4e019ULL));
    return *this;
}

SeedBuilder& SeedBuilder::add(double v) {
    if (v == 0.0) v = 0.0;  // fold -0.0 into 0.0
    return add(std::bit_cast<std::uint64_t>(v));
}

SeedBuilder& SeedBuilder::add(std::string_view s) {
    // FNV-1a over the bytes, then mixed in with the length.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    add(static_cast<std::uint64_t>(s.size()));
    return add(h);
}

}  // namespace pamcts
