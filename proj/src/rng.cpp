#include "levydiv/rng.hpp"

#include <cmath>

namespace levydiv {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t s = a ^ (b * 0x9E3779B97F4A7C15ULL);
    return splitmix64(s);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed) noexcept {
    std::uint64_t st = seed;
    for (auto& w : s_) w = splitmix64(st);
}

RngStream::RngStream(std::uint64_t master, std::uint64_t family, std::uint64_t index,
                     StreamPurpose purpose) noexcept
    : RngStream(mix(mix(mix(master, family), index), static_cast<std::uint64_t>(purpose))) {}

std::uint64_t RngStream::next() noexcept {
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

double RngStream::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double RngStream::uniform_pos() noexcept {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
}

// Marsaglia polar method.
double RngStream::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double RngStream::exponential(double rate) noexcept { return -std::log(uniform_pos()) / rate; }

StreamFamily StreamFamily::derive(std::uint64_t tag) const noexcept {
    return StreamFamily{master_seed, mix(family + 0x51ED2701ULL, tag)};
}

}  // namespace levydiv
