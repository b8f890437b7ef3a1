#pragma once

#include "mre/kernels.hpp"

namespace mre::kernels {

#if defined(MRE_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace mre::kernels
