#pragma once

#include <array>
#include <cstdint>

namespace levydiv {

// Substream purposes. Clock and path noise never share a stream.
enum class StreamPurpose : std::uint64_t { clock = 1, path = 2, aux = 3 };

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// xoshiro256++ with a few distribution helpers implemented locally, so that
// draws are identical across standard libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) noexcept;
    RngStream(std::uint64_t master, std::uint64_t family, std::uint64_t index,
              StreamPurpose purpose) noexcept;

    std::uint64_t next() noexcept;
    double uniform() noexcept;       // [0, 1)
    double uniform_pos() noexcept;   // (0, 1]
    double normal() noexcept;
    double exponential(double rate) noexcept;

private:
    std::array<std::uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// A family of substreams keyed by (path index, purpose). Distinct families
// give statistically independent estimators from one master seed.
struct StreamFamily {
    std::uint64_t master_seed = 0;
    std::uint64_t family = 0;

    RngStream substream(std::uint64_t index, StreamPurpose purpose) const noexcept {
        return RngStream(master_seed, family, index, purpose);
    }
    StreamFamily derive(std::uint64_t tag) const noexcept;
};

}  // namespace levydiv
