#pragma once
#include <array>
#include <cstdint>
#include <cmath>

#include "pedflow/vec2.hpp"

// Counter-based RNG (Philox4x32-10). Every random draw in the project comes
// from a stream keyed by (seed, purpose, replica, entity), so any replica or
// particle can be regenerated in isolation and results do not depend on
// thread scheduling or evaluation order across streams.

namespace pedflow {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    constexpr std::uint32_t M0 = 0xD2511F53u;
    constexpr std::uint32_t M1 = 0xCD9E8D57u;
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, key);
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

} // namespace detail

// Stream purposes. Values are baked into the counter layout; adding new ones
// is safe, renumbering existing ones changes every output.
enum class StreamPurpose : std::uint32_t {
    initial_tracked = 1,
    initial_field = 2,
    moment_primary = 3,
    moment_companion = 4,
    moment_quadrature = 5,
    measure_bank = 6,
    measure_subsample = 7,
    calibrate = 8,
    scratch = 9,
};

class CounterRng {
public:
    CounterRng(std::uint64_t seed, StreamPurpose purpose, std::uint32_t replica,
               std::uint32_t entity)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(entity),
          stream_hi_((static_cast<std::uint32_t>(purpose) << 24) | (replica & 0x00FFFFFFu)) {}

    std::uint32_t next_u32() {
        if (have_ == 0) {
            const std::array<std::uint32_t, 4> ctr = {
                static_cast<std::uint32_t>(counter_),
                static_cast<std::uint32_t>(counter_ >> 32), stream_lo_, stream_hi_};
            buf_ = detail::philox4x32_10(ctr, key_);
            ++counter_;
            have_ = 4;
        }
        return buf_[4 - have_--];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on [0, 1): 53 random mantissa bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; consumes two u64 per pair, caches the second value.
    double gaussian() {
        if (have_gauss_) {
            have_gauss_ = false;
            return cached_gauss_;
        }
        // u1 in (0,1] so the log is finite.
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_gauss_ = r * std::sin(a);
        have_gauss_ = true;
        return r * std::cos(a);
    }

    // Gaussian conditioned on [lo, hi] by rejection; the stream just keeps
    // consuming, which is fine for per-entity streams.
    double truncated_gaussian(double mean, double sigma, double lo, double hi) {
        for (;;) {
            const double g = mean + sigma * gaussian();
            if (g >= lo && g <= hi) return g;
        }
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int have_ = 0;
    bool have_gauss_ = false;
    double cached_gauss_ = 0.0;
};

} // namespace pedflow
