#include "pedflow/kernels.hpp"

namespace pedflow::kernels {

void force_sum_scalar(const double* sx, const double* sy,
                      const double* svx, const double* svy,
                      const std::uint32_t* idx, std::size_t count,
                      double qx, double qy, double qvx, double qvy,
                      const PairKernelParams& kp, double& fx, double& fy) {
    double ax = 0.0, ay = 0.0;
    for (std::size_t c = 0; c < count; ++c) {
        const std::size_t j = idx ? idx[c] : c;
        const Vec2 f = cutoff_force({qx - sx[j], qy - sy[j]},
                                    {qvx - svx[j], qvy - svy[j]}, kp);
        ax += f.x;
        ay += f.y;
    }
    fx = ax;
    fy = ay;
}

double majorant_sum_scalar(const double* sx, const double* sy,
                           const double* svx, const double* svy,
                           const std::uint32_t* idx, std::size_t count,
                           double qx, double qy, double qvx, double qvy,
                           const PairKernelParams& kp) {
    double acc = 0.0;
    for (std::size_t c = 0; c < count; ++c) {
        const std::size_t j = idx ? idx[c] : c;
        acc += lipschitz_majorant({qx - sx[j], qy - sy[j]},
                                  {qvx - svx[j], qvy - svy[j]}, kp);
    }
    return acc;
}

} // namespace pedflow::kernels
