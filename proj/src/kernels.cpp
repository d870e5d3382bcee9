#include "pinnse/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "pinnse/common.hpp"

namespace pinnse::kern {

namespace scalar {
extern const Ops kOps;
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const Ops kOps;
}
#endif
#if defined(__aarch64__)
namespace neon {
extern const Ops kOps;
}
#endif

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::scalar: return "scalar";
        case Variant::avx2: return "avx2";
        case Variant::neon: return "neon";
    }
    return "?";
}

bool variant_available(Variant v) {
    switch (v) {
        case Variant::scalar:
            return true;
        case Variant::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Variant::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

namespace {

Variant pick_default() {
    if (const char* env = std::getenv("PINNSE_KERNELS")) {
        if (!std::strcmp(env, "scalar")) return Variant::scalar;
        if (!std::strcmp(env, "avx2") && variant_available(Variant::avx2)) return Variant::avx2;
        if (!std::strcmp(env, "neon") && variant_available(Variant::neon)) return Variant::neon;
        // unknown or unavailable request falls through to auto
    }
    if (variant_available(Variant::avx2)) return Variant::avx2;
    if (variant_available(Variant::neon)) return Variant::neon;
    return Variant::scalar;
}

Variant g_active = pick_default();

}  // namespace

Variant active_variant() { return g_active; }

void force_variant(Variant v) {
    PINNSE_CHECK(variant_available(v),
                 std::string("kernel variant unavailable on this CPU: ") + variant_name(v));
    g_active = v;
}

const Ops& ops_for(Variant v) {
    switch (v) {
#if defined(__x86_64__) || defined(_M_X64)
        case Variant::avx2:
            if (variant_available(Variant::avx2)) return avx2::kOps;
            break;
#endif
#if defined(__aarch64__)
        case Variant::neon:
            return neon::kOps;
#endif
        default:
            break;
    }
    return scalar::kOps;
}

const Ops& ops() { return ops_for(g_active); }

}  // namespace pinnse::kern
