#include "mvd/kernels/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mvd::kernels {

namespace {

bool cpu_has_avx2()
{
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& select()
{
    if (const char* env = std::getenv("MVD_SIMD")) {
        const std::string want(env);
        if (want == "scalar")
            return scalar_table();
        if (want == "avx2") {
            if (!isa_available(Isa::avx2))
                throw std::runtime_error("MVD_SIMD=avx2 requested but AVX2 is unavailable");
            return *avx2_table();
        }
        if (want != "auto")
            throw std::runtime_error("MVD_SIMD must be one of auto, scalar, avx2 (got '" + want + "')");
    }
    return isa_available(Isa::avx2) ? *avx2_table() : scalar_table();
}

} // namespace

bool isa_available(Isa isa)
{
    switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return avx2_table() != nullptr && cpu_has_avx2();
    }
    return false;
}

const KernelTable& table(Isa isa)
{
    if (!isa_available(isa))
        throw std::runtime_error("kernel ISA " + std::string(isa_name(isa)) + " is unavailable");
    return isa == Isa::avx2 ? *avx2_table() : scalar_table();
}

const KernelTable& active()
{
    static const KernelTable& chosen = select();
    return chosen;
}

Isa active_isa()
{
    return active().isa;
}

std::string_view isa_name(Isa isa)
{
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

} // namespace mvd::kernels
