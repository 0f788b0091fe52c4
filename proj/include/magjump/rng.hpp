#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace magjump {

namespace detail {

/// SplitMix64 finalizer (Stafford mix13). Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

} // namespace detail

/// Counter-based random stream. Output i depends only on (seed, stream_id, i),
/// so paths keyed by stream_id reproduce bit-identically no matter how work is
/// scheduled across workers. Statistical quality is SplitMix64; not for crypto.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_(detail::mix64(seed ^ detail::mix64(stream_id ^ detail::kGolden))) {}

    std::uint64_t next_u64() {
        counter_ += detail::kGolden;
        return detail::mix64(key_ + counter_);
    }

    /// Uniform draw strictly inside (0,1): midpoints of the 2^53 dyadic cells.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exponential holding time by inverse transform. Strictly positive.
    double next_exponential(double rate) {
        if (!(rate > 0.0)) throw std::invalid_argument("exponential rate must be positive");
        return -std::log(next_unit()) / rate;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace magjump
