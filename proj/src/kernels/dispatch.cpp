#include "tables.hpp"

#include "mre/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace mre::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(MRE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect() {
    const bool avx2 = cpu_has_avx2();
    if (const char* env = std::getenv("MRE_SIMD")) {
        const std::string want(env);
        if (want == "scalar") return Isa::scalar;
        if (want == "avx2" && avx2) return Isa::avx2;
    }
    return avx2 ? Isa::avx2 : Isa::scalar;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> ptr{&table(detect())};
    return ptr;
}

std::atomic<Isa>& current_isa() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2: return cpu_has_avx2();
    }
    return false;
}

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

const KernelTable& table(Isa isa) {
    if (!isa_available(isa)) throw ValidationError(std::string("kernel set not available: ") + isa_name(isa));
#if defined(MRE_HAVE_AVX2)
    if (isa == Isa::avx2) return avx2_table();
#endif
    return scalar_table();
}

Isa active_isa() { return current_isa().load(); }

const KernelTable& active() { return *current().load(); }

void set_active(Isa isa) {
    const KernelTable& t = table(isa);
    current().store(&t);
    current_isa().store(isa);
}

}  // namespace mre::kernels
