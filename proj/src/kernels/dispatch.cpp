#include "kernels_internal.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace symshrink::kernels {

const KernelTable& scalar_table() noexcept { return detail::kScalarTable; }

const KernelTable* avx2_table() noexcept {
#if defined(SYMSHRINK_HAVE_AVX2)
    return &detail::kAvx2Table;
#else
    return nullptr;
#endif
}

bool cpu_supports_avx2() noexcept {
#if defined(SYMSHRINK_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const KernelTable* choose() noexcept {
    if (const char* env = std::getenv("SYMSHRINK_KERNELS"); env != nullptr) {
        if (std::string_view(env) == "scalar") return &detail::kScalarTable;
    }
    if (cpu_supports_avx2()) {
        if (const KernelTable* t = avx2_table()) return t;
    }
    return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> table{choose()};
    return table;
}

}  // namespace

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

void force_backend(Backend b) {
    if (b == Backend::Avx2 && cpu_supports_avx2() && avx2_table() != nullptr) {
        slot().store(avx2_table(), std::memory_order_relaxed);
    } else {
        slot().store(&detail::kScalarTable, std::memory_order_relaxed);
    }
}

std::string_view backend_name(Backend b) noexcept {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

}  // namespace symshrink::kernels
