#include <cstdlib>
#include <string_view>

#include "charc/kernels.hpp"

namespace charc::kernels {

namespace {

const KernelTable kGeneric{"generic", generic::dot, generic::gemv, generic::distance3, generic::axpy};

#if defined(CHARC_HAVE_AVX2)
const KernelTable kAvx2{"avx2", avx2::dot, avx2::gemv, avx2::distance3, avx2::axpy};

bool cpu_has_avx2()
{
#if defined(__GNUC__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}
#endif

const KernelTable& select()
{
    if (const char* env = std::getenv("CHARC_SIMD"); env && std::string_view(env) == "generic") return kGeneric;
    if (const KernelTable* t = avx2_table()) return *t;
    return kGeneric;
}

}  // namespace

const KernelTable& generic_table()
{
    return kGeneric;
}

const KernelTable* avx2_table()
{
#if defined(CHARC_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active()
{
    static const KernelTable& table = select();
    return table;
}

}  // namespace charc::kernels
