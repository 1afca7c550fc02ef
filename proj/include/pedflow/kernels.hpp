#pragma once
#include <cstddef>
#include <cstdint>
#include <string>

#include "pedflow/forces.hpp"

// Batched pair-interaction kernels: the hot inner loops of every force
// evaluation, mean-field quadrature and majorant accumulation. Each backend
// must produce results independent of thread count; backends may differ from
// each other by rounding only (equivalence-tested to tight relative
// tolerance). Sources are SoA arrays; `idx` selects a candidate subset
// (pass nullptr to run over sources [0, count) contiguously, which skips the
// gathers).

namespace pedflow::kernels {

// Accumulates sum_j F^n(q - s_j, qv - sv_j) into (fx, fy), j from idx or
// contiguous. The caller applies any 1/(n-1) or 1/m weight afterwards.
using ForceSumFn = void (*)(const double* sx, const double* sy,
                            const double* svx, const double* svy,
                            const std::uint32_t* idx, std::size_t count,
                            double qx, double qy, double qvx, double qvy,
                            const PairKernelParams& kp, double& fx, double& fy);

// Accumulates sum_j q^n(q - s_j, qv - sv_j).
using MajorantSumFn = double (*)(const double* sx, const double* sy,
                                 const double* svx, const double* svy,
                                 const std::uint32_t* idx, std::size_t count,
                                 double qx, double qy, double qvx, double qvy,
                                 const PairKernelParams& kp);

struct Backend {
    const char* name;
    ForceSumFn force_sum;
    MajorantSumFn majorant_sum;
};

enum class BackendKind { scalar, avx2 };

bool avx2_supported();

// Throws ConfigError for an unknown name or an unsupported explicit request.
// "auto" picks the widest backend the CPU supports.
BackendKind resolve_backend(const std::string& pref);

const Backend& get_backend(BackendKind kind);

// Scalar reference implementations (always available; other backends are
// tested against these).
void force_sum_scalar(const double* sx, const double* sy,
                      const double* svx, const double* svy,
                      const std::uint32_t* idx, std::size_t count,
                      double qx, double qy, double qvx, double qvy,
                      const PairKernelParams& kp, double& fx, double& fy);
double majorant_sum_scalar(const double* sx, const double* sy,
                           const double* svx, const double* svy,
                           const std::uint32_t* idx, std::size_t count,
                           double qx, double qy, double qvx, double qvy,
                           const PairKernelParams& kp);

#ifdef PEDFLOW_HAVE_AVX2
void force_sum_avx2(const double* sx, const double* sy,
                    const double* svx, const double* svy,
                    const std::uint32_t* idx, std::size_t count,
                    double qx, double qy, double qvx, double qvy,
                    const PairKernelParams& kp, double& fx, double& fy);
double majorant_sum_avx2(const double* sx, const double* sy,
                         const double* svx, const double* svy,
                         const std::uint32_t* idx, std::size_t count,
                         double qx, double qy, double qvx, double qvy,
                         const PairKernelParams& kp);
#endif

} // namespace pedflow::kernels
