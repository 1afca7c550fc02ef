// AVX2/FMA variants of the pair kernels. Four pairs per iteration, scalar
// tail through the reference pair functions. Lane blending keeps the inner
// cut-off branch free of the 1/r factors, so r = 0 lanes never propagate the
// inf/NaN produced by the unselected outer branch.

#include "pedflow/kernels.hpp"

#ifdef PEDFLOW_HAVE_AVX2
#include <immintrin.h>

namespace pedflow::kernels {

namespace {

inline __m256d clamp01(__m256d u) {
    return _mm256_min_pd(_mm256_max_pd(u, _mm256_setzero_pd()), _mm256_set1_pd(1.0));
}

// Smoothstep of the selected order on a pre-clamped argument. Exact 0/1 at
// the clamp ends for every order, matching the scalar plateau conventions.
template <int ORDER>
inline __m256d smoothstep4(__m256d u) {
    if constexpr (ORDER == 1) {
        const __m256d t = _mm256_fnmadd_pd(_mm256_set1_pd(2.0), u, _mm256_set1_pd(3.0));
        return _mm256_mul_pd(_mm256_mul_pd(u, u), t);
    } else if constexpr (ORDER == 2) {
        __m256d t = _mm256_fmsub_pd(_mm256_set1_pd(6.0), u, _mm256_set1_pd(15.0));
        t = _mm256_fmadd_pd(u, t, _mm256_set1_pd(10.0));
        const __m256d u3 = _mm256_mul_pd(_mm256_mul_pd(u, u), u);
        return _mm256_mul_pd(u3, t);
    } else {
        __m256d t = _mm256_fnmadd_pd(_mm256_set1_pd(20.0), u, _mm256_set1_pd(70.0));
        t = _mm256_fmadd_pd(u, t, _mm256_set1_pd(-84.0));
        t = _mm256_fmadd_pd(u, t, _mm256_set1_pd(35.0));
        const __m256d u2 = _mm256_mul_pd(u, u);
        return _mm256_mul_pd(_mm256_mul_pd(u2, u2), t);
    }
}

struct Lanes {
    __m256d dx, dy, dvx, dvy;
};

inline Lanes load_lanes(const double* sx, const double* sy,
                        const double* svx, const double* svy,
                        const std::uint32_t* idx, std::size_t c,
                        __m256d qx, __m256d qy, __m256d qvx, __m256d qvy) {
    Lanes l;
    if (idx) {
        const __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + c));
        l.dx = _mm256_sub_pd(qx, _mm256_i32gather_pd(sx, vi, 8));
        l.dy = _mm256_sub_pd(qy, _mm256_i32gather_pd(sy, vi, 8));
        l.dvx = _mm256_sub_pd(qvx, _mm256_i32gather_pd(svx, vi, 8));
        l.dvy = _mm256_sub_pd(qvy, _mm256_i32gather_pd(svy, vi, 8));
    } else {
        l.dx = _mm256_sub_pd(qx, _mm256_loadu_pd(sx + c));
        l.dy = _mm256_sub_pd(qy, _mm256_loadu_pd(sy + c));
        l.dvx = _mm256_sub_pd(qvx, _mm256_loadu_pd(svx + c));
        l.dvy = _mm256_sub_pd(qvy, _mm256_loadu_pd(svy + c));
    }
    return l;
}

inline double hsum_ordered(__m256d v) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return ((lane[0] + lane[1]) + lane[2]) + lane[3];
}

template <int ORDER>
void force_sum_impl(const double* sx, const double* sy,
                    const double* svx, const double* svy,
                    const std::uint32_t* idx, std::size_t count,
                    double qxs, double qys, double qvxs, double qvys,
                    const PairKernelParams& kp, double& fx, double& fy) {
    const __m256d qx = _mm256_set1_pd(qxs), qy = _mm256_set1_pd(qys);
    const __m256d qvx = _mm256_set1_pd(qvxs), qvy = _mm256_set1_pd(qvys);
    const __m256d inv_R = _mm256_set1_pd(kp.inv_R);
    const __m256d two_R = _mm256_set1_pd(kp.two_R);
    const __m256d inv_Rt = _mm256_set1_pd(kp.inv_R_tilde);
    const __m256d two_Rt = _mm256_set1_pd(kp.two_R_tilde);
    const __m256d cut = _mm256_set1_pd(kp.cut);
    const __m256d two_R_kn = _mm256_set1_pd(kp.two_R_kn);
    const __m256d k_n = _mm256_set1_pd(kp.k_n);
    const __m256d gt = _mm256_set1_pd(kp.gamma_t);
    const __m256d gtgn = _mm256_set1_pd(kp.gt_minus_gn);
    const __m256d a_in_const = _mm256_set1_pd(kp.two_R_kn * kp.n_theta - kp.k_n);
    const __m256d n2t_gtgn = _mm256_set1_pd(kp.gt_minus_gn * kp.n_2theta);

    __m256d accx = _mm256_setzero_pd();
    __m256d accy = _mm256_setzero_pd();

    const std::size_t quads = count / 4 * 4;
    for (std::size_t c = 0; c < quads; c += 4) {
        const Lanes l = load_lanes(sx, sy, svx, svy, idx, c, qx, qy, qvx, qvy);
        const __m256d r2 = _mm256_fmadd_pd(l.dx, l.dx, _mm256_mul_pd(l.dy, l.dy));
        const __m256d s2 = _mm256_fmadd_pd(l.dvx, l.dvx, _mm256_mul_pd(l.dvy, l.dvy));
        const __m256d r = _mm256_sqrt_pd(r2);
        const __m256d s = _mm256_sqrt_pd(s2);

        const __m256d Hx = smoothstep4<ORDER>(clamp01(_mm256_mul_pd(_mm256_sub_pd(two_R, r), inv_R)));
        const __m256d Hv = smoothstep4<ORDER>(clamp01(_mm256_mul_pd(_mm256_sub_pd(two_Rt, s), inv_Rt)));
        const __m256d H = _mm256_mul_pd(Hx, Hv);

        const __m256d vdotx = _mm256_fmadd_pd(l.dvx, l.dx, _mm256_mul_pd(l.dvy, l.dy));
        const __m256d a_out = _mm256_sub_pd(
            _mm256_add_pd(_mm256_div_pd(two_R_kn, r),
                          _mm256_mul_pd(gtgn, _mm256_div_pd(vdotx, r2))),
            k_n);
        const __m256d a_in = _mm256_fmadd_pd(n2t_gtgn, vdotx, a_in_const);
        const __m256d outer = _mm256_cmp_pd(r, cut, _CMP_GE_OQ);
        const __m256d a = _mm256_blendv_pd(a_in, a_out, outer);

        accx = _mm256_fmadd_pd(_mm256_fnmadd_pd(gt, l.dvx, _mm256_mul_pd(a, l.dx)), H, accx);
        accy = _mm256_fmadd_pd(_mm256_fnmadd_pd(gt, l.dvy, _mm256_mul_pd(a, l.dy)), H, accy);
    }

    double ax = hsum_ordered(accx);
    double ay = hsum_ordered(accy);
    for (std::size_t c = quads; c < count; ++c) {
        const std::size_t j = idx ? idx[c] : c;
        const Vec2 f = cutoff_force({qxs - sx[j], qys - sy[j]},
                                    {qvxs - svx[j], qvys - svy[j]}, kp);
        ax += f.x;
        ay += f.y;
    }
    fx = ax;
    fy = ay;
}

} // namespace

void force_sum_avx2(const double* sx, const double* sy,
                    const double* svx, const double* svy,
                    const std::uint32_t* idx, std::size_t count,
                    double qx, double qy, double qvx, double qvy,
                    const PairKernelParams& kp, double& fx, double& fy) {
    switch (kp.mollifier_order) {
        case 1: force_sum_impl<1>(sx, sy, svx, svy, idx, count, qx, qy, qvx, qvy, kp, fx, fy); break;
        case 3: force_sum_impl<3>(sx, sy, svx, svy, idx, count, qx, qy, qvx, qvy, kp, fx, fy); break;
        default: force_sum_impl<2>(sx, sy, svx, svy, idx, count, qx, qy, qvx, qvy, kp, fx, fy); break;
    }
}

double majorant_sum_avx2(const double* sx, const double* sy,
                         const double* svx, const double* svy,
                         const std::uint32_t* idx, std::size_t count,
                         double qxs, double qys, double qvxs, double qvys,
                         const PairKernelParams& kp) {
    const __m256d qx = _mm256_set1_pd(qxs), qy = _mm256_set1_pd(qys);
    const __m256d qvx = _mm256_set1_pd(qvxs), qvy = _mm256_set1_pd(qvys);
    const __m256d two_R = _mm256_set1_pd(kp.two_R);
    const __m256d two_Rt = _mm256_set1_pd(kp.two_R_tilde);
    const __m256d cut = _mm256_set1_pd(kp.cut);
    const __m256d C = _mm256_set1_pd(kp.majorant_c);
    const __m256d q_in = _mm256_set1_pd(kp.majorant_c * kp.n_theta);

    __m256d acc = _mm256_setzero_pd();
    const std::size_t quads = count / 4 * 4;
    for (std::size_t c = 0; c < quads; c += 4) {
        const Lanes l = load_lanes(sx, sy, svx, svy, idx, c, qx, qy, qvx, qvy);
        const __m256d r = _mm256_sqrt_pd(_mm256_fmadd_pd(l.dx, l.dx, _mm256_mul_pd(l.dy, l.dy)));
        const __m256d s = _mm256_sqrt_pd(_mm256_fmadd_pd(l.dvx, l.dvx, _mm256_mul_pd(l.dvy, l.dvy)));
        const __m256d q_out = _mm256_add_pd(_mm256_div_pd(C, r), C);
        const __m256d outer = _mm256_cmp_pd(r, cut, _CMP_GE_OQ);
        __m256d q = _mm256_blendv_pd(q_in, q_out, outer);
        const __m256d support = _mm256_and_pd(_mm256_cmp_pd(r, two_R, _CMP_LE_OQ),
                                              _mm256_cmp_pd(s, two_Rt, _CMP_LE_OQ));
        q = _mm256_and_pd(q, support);
        acc = _mm256_add_pd(acc, q);
    }

    double total = hsum_ordered(acc);
    for (std::size_t c = quads; c < count; ++c) {
        const std::size_t j = idx ? idx[c] : c;
        total += lipschitz_majorant({qxs - sx[j], qys - sy[j]},
                                    {qvxs - svx[j], qvys - svy[j]}, kp);
    }
    return total;
}

} // namespace pedflow::kernels

#endif // PEDFLOW_HAVE_AVX2
