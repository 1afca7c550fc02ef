#include <doctest.h>

#include <cmath>
#include <set>

#include "pedflow/initial.hpp"
#include "pedflow/rng.hpp"

using namespace pedflow;

TEST_SUITE("rng") {

// Known-answer vectors for Philox4x32-10 (round keys and multipliers are
// fixed by the algorithm, so these pin the whole generator).
TEST_CASE("philox known answers") {
    auto out = detail::philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);

    out = detail::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);

    out = detail::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("streams are deterministic and distinct") {
    CounterRng a(42, StreamPurpose::scratch, 3, 7);
    CounterRng b(42, StreamPurpose::scratch, 3, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());

    CounterRng c(42, StreamPurpose::scratch, 3, 8);   // other entity
    CounterRng d(42, StreamPurpose::scratch, 4, 7);   // other replica
    CounterRng e(42, StreamPurpose::calibrate, 3, 7); // other purpose
    CounterRng f(43, StreamPurpose::scratch, 3, 7);   // other seed
    CounterRng base(42, StreamPurpose::scratch, 3, 7);
    const std::uint64_t v = base.next_u64();
    CHECK(c.next_u64() != v);
    CHECK(d.next_u64() != v);
    CHECK(e.next_u64() != v);
    CHECK(f.next_u64() != v);
}

TEST_CASE("uniform01 range and moments") {
    CounterRng rng(1, StreamPurpose::scratch, 0, 0);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // 5 sigma of the CLT for the mean of U[0,1); variance 1/12
    CHECK(std::abs(mean - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("truncated gaussian respects bounds") {
    CounterRng rng(9, StreamPurpose::scratch, 0, 1);
    for (int i = 0; i < 5000; ++i) {
        const double x = rng.truncated_gaussian(0.2, 1.5, -0.5, 0.75);
        CHECK(x >= -0.5);
        CHECK(x <= 0.75);
    }
}

TEST_CASE("ensemble draws nest across sizes") {
    const F0Spec f0 = uniform_box_f0(0, 2, 0, 3, -1, 1, -1, 1);
    const Ensemble small = sample_ensemble(f0, 8, 5, StreamPurpose::initial_tracked, 2);
    const Ensemble big = sample_ensemble(f0, 64, 5, StreamPurpose::initial_tracked, 2);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(small.px[i] == big.px[i]);
        CHECK(small.py[i] == big.py[i]);
        CHECK(small.vx[i] == big.vx[i]);
        CHECK(small.vy[i] == big.vy[i]);
    }
}

TEST_CASE("box sampling hits the marginal mean") {
    const F0Spec f0 = uniform_box_f0(1, 8, 1, 9, 0, 0.5, -0.25, 0.25);
    const std::size_t n = 50000;
    const Ensemble e = sample_ensemble(f0, n, 11, StreamPurpose::initial_field, 0);
    double mx = 0, my = 0, mvx = 0, mvy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += e.px[i];
        my += e.py[i];
        mvx += e.vx[i];
        mvy += e.vy[i];
    }
    mx /= n; my /= n; mvx /= n; mvy /= n;
    const double rt12n = std::sqrt(12.0 * n);
    CHECK(std::abs(mx - 4.5) < 5.0 * 7.0 / rt12n);
    CHECK(std::abs(my - 5.0) < 5.0 * 8.0 / rt12n);
    CHECK(std::abs(mvx - 0.25) < 5.0 * 0.5 / rt12n);
    CHECK(std::abs(mvy - 0.0) < 5.0 * 0.5 / rt12n);
}

} // TEST_SUITE

