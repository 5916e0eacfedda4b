#pragma once

#include "symshrink/kernels.hpp"

namespace symshrink::kernels::detail {

extern const KernelTable kScalarTable;

#if defined(SYMSHRINK_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace symshrink::kernels::detail
