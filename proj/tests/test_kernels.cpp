#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "pedflow/forces.hpp"
#include "pedflow/kernels.hpp"
#include "pedflow/params.hpp"
#include "pedflow/rng.hpp"

using namespace pedflow;

namespace {

struct Soa {
    std::vector<double> sx, sy, svx, svy;
};

// Random sources spread so some pairs land in every region of the kernel:
// inside the cutoff, in the smooth window, and outside the support.
Soa random_sources(std::size_t count, std::uint64_t seed) {
    CounterRng rng(seed, StreamPurpose::scratch, 0, 0);
    Soa s;
    s.sx.resize(count);
    s.sy.resize(count);
    s.svx.resize(count);
    s.svy.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        s.sx[i] = 3.0 * (2.0 * rng.uniform01() - 1.0);
        s.sy[i] = 3.0 * (2.0 * rng.uniform01() - 1.0);
        s.svx[i] = 5.0 * (2.0 * rng.uniform01() - 1.0);
        s.svy[i] = 5.0 * (2.0 * rng.uniform01() - 1.0);
    }
    return s;
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar force sum matches the pairwise reference") {
    ModelParams p;
    p.n = 64;
    const PairKernelParams kp = make_pair_kernel_params(p);
    const Soa s = random_sources(97, 11);
    CounterRng rng(12, StreamPurpose::scratch, 1, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const double qx = 2.0 * rng.uniform01() - 1.0, qy = 2.0 * rng.uniform01() - 1.0;
        const double qvx = rng.uniform01(), qvy = rng.uniform01();
        double fx = 0.0, fy = 0.0;
        kernels::force_sum_scalar(s.sx.data(), s.sy.data(), s.svx.data(), s.svy.data(),
                                  nullptr, s.sx.size(), qx, qy, qvx, qvy, kp, fx, fy);
        Vec2 want{0, 0};
        double mwant = 0.0;
        for (std::size_t j = 0; j < s.sx.size(); ++j) {
            const Vec2 f = cutoff_force({qx - s.sx[j], qy - s.sy[j]},
                                        {qvx - s.svx[j], qvy - s.svy[j]}, kp);
            want.x += f.x;
            want.y += f.y;
            mwant += lipschitz_majorant({qx - s.sx[j], qy - s.sy[j]},
                                        {qvx - s.svx[j], qvy - s.svy[j]}, kp);
        }
        CHECK(close_rel(fx, want.x, 1e-12));
        CHECK(close_rel(fy, want.y, 1e-12));
        const double m = kernels::majorant_sum_scalar(s.sx.data(), s.sy.data(), s.svx.data(),
                                                      s.svy.data(), nullptr, s.sx.size(),
                                                      qx, qy, qvx, qvy, kp);
        CHECK(close_rel(m, mwant, 1e-12));
    }
}

TEST_CASE("index subsets gather the same terms") {
    ModelParams p;
    p.n = 128;
    const PairKernelParams kp = make_pair_kernel_params(p);
    const Soa s = random_sources(64, 21);
    // A scrambled subset with a gap.
    std::vector<std::uint32_t> idx;
    for (std::uint32_t j = 0; j < 64; j += 3) idx.push_back(63 - j);
    double fx = 0.0, fy = 0.0;
    kernels::force_sum_scalar(s.sx.data(), s.sy.data(), s.svx.data(), s.svy.data(),
                              idx.data(), idx.size(), 0.1, -0.2, 0.5, 0.0, kp, fx, fy);
    Vec2 want{0, 0};
    for (const std::uint32_t j : idx) {
        const Vec2 f = cutoff_force({0.1 - s.sx[j], -0.2 - s.sy[j]},
                                    {0.5 - s.svx[j], 0.0 - s.svy[j]}, kp);
        want.x += f.x;
        want.y += f.y;
    }
    CHECK(close_rel(fx, want.x, 1e-12));
    CHECK(close_rel(fy, want.y, 1e-12));
}

TEST_CASE("backend resolution") {
    CHECK(kernels::get_backend(kernels::resolve_backend("scalar")).name ==
          std::string("scalar"));
    CHECK_THROWS_AS(kernels::resolve_backend("sse9"), ConfigError);
    const kernels::BackendKind k = kernels::resolve_backend("auto");
    CHECK(kernels::get_backend(k).force_sum != nullptr);
#ifdef PEDFLOW_HAVE_AVX2
    if (kernels::avx2_supported())
        CHECK(kernels::get_backend(kernels::resolve_backend("avx2")).name ==
              std::string("avx2"));
#endif
}

#ifdef PEDFLOW_HAVE_AVX2
TEST_CASE("avx2 backend matches scalar to rounding") {
    if (!kernels::avx2_supported()) return;
    ModelParams p;
    p.n = 256;
    const PairKernelParams kp = make_pair_kernel_params(p);
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        // Odd sizes exercise the remainder loop of the vector path.
        const Soa s = random_sources(64 + 13 * seed + 1, 100 + seed);
        CounterRng rng(200 + seed, StreamPurpose::scratch, 2, 0);
        const double qx = rng.uniform01(), qy = rng.uniform01();
        const double qvx = 2.0 * rng.uniform01() - 1.0, qvy = 2.0 * rng.uniform01() - 1.0;

        double fx_s = 0.0, fy_s = 0.0, fx_v = 0.0, fy_v = 0.0;
        kernels::force_sum_scalar(s.sx.data(), s.sy.data(), s.svx.data(), s.svy.data(),
                                  nullptr, s.sx.size(), qx, qy, qvx, qvy, kp, fx_s, fy_s);
        kernels::force_sum_avx2(s.sx.data(), s.sy.data(), s.svx.data(), s.svy.data(),
                                nullptr, s.sx.size(), qx, qy, qvx, qvy, kp, fx_v, fy_v);
        CHECK(close_rel(fx_s, fx_v, 1e-12));
        CHECK(close_rel(fy_s, fy_v, 1e-12));

        const double m_s = kernels::majorant_sum_scalar(
            s.sx.data(), s.sy.data(), s.svx.data(), s.svy.data(), nullptr, s.sx.size(),
            qx, qy, qvx, qvy, kp);
        const double m_v = kernels::majorant_sum_avx2(
            s.sx.data(), s.sy.data(), s.svx.data(), s.svy.data(), nullptr, s.sx.size(),
            qx, qy, qvx, qvy, kp);
        CHECK(close_rel(m_s, m_v, 1e-12));

        std::vector<std::uint32_t> idx;
        for (std::uint32_t j = 0; j < s.sx.size(); j += 2) idx.push_back(j);
        double gx_s = 0.0, gy_s = 0.0, gx_v = 0.0, gy_v = 0.0;
        kernels::force_sum_scalar(s.sx.data(), s.sy.data(), s.svx.data(), s.svy.data(),
                                  idx.data(), idx.size(), qx, qy, qvx, qvy, kp, gx_s, gy_s);
        kernels::force_sum_avx2(s.sx.data(), s.sy.data(), s.svx.data(), s.svy.data(),
                                idx.data(), idx.size(), qx, qy, qvx, qvy, kp, gx_v, gy_v);
        CHECK(close_rel(gx_s, gx_v, 1e-12));
        CHECK(close_rel(gy_s, gy_v, 1e-12));
    }
}
#endif

} // TEST_SUITE
