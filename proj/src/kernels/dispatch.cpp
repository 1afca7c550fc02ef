#include "pedflow/kernels.hpp"
#include "pedflow/errors.hpp"

namespace pedflow::kernels {

bool avx2_supported() {
#if defined(PEDFLOW_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

BackendKind resolve_backend(const std::string& pref) {
    if (pref == "scalar") return BackendKind::scalar;
    if (pref == "avx2") {
        if (!avx2_supported())
            throw ConfigError("kernel_backend: avx2 requested but not available on this CPU/build");
        return BackendKind::avx2;
    }
    if (pref == "auto") return avx2_supported() ? BackendKind::avx2 : BackendKind::scalar;
    throw ConfigError("kernel_backend: unknown backend '" + pref + "' (scalar|avx2|auto)");
}

const Backend& get_backend(BackendKind kind) {
    static const Backend scalar{"scalar", &force_sum_scalar, &majorant_sum_scalar};
#ifdef PEDFLOW_HAVE_AVX2
    static const Backend avx2{"avx2", &force_sum_avx2, &majorant_sum_avx2};
    if (kind == BackendKind::avx2) return avx2;
#else
    if (kind == BackendKind::avx2)
        throw ConfigError("kernel_backend: avx2 not compiled into this build");
#endif
    return scalar;
}

} // namespace pedflow::kernels
