#pragma once

// Inner loops of entropy pooling over J scenarios.
//
// Feature matrices are column-major J x k (one contiguous column per
// feature), matching Eigen's default layout. Every kernel has a scalar
// reference version; wider versions are picked at runtime.

#include <cstddef>

namespace mre::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
    // out[j] = offset[j] + sum_c theta[c] * cols[c * J + j]
    void (*affine_logits)(const double* cols, std::size_t J, std::size_t k, const double* theta,
                          const double* offset, double* out);

    double (*max_value)(const double* x, std::size_t n);

    // x[j] <- exp(x[j] - shift); returns the sum of the new values.
    double (*exp_shift_sum)(double* x, std::size_t n, double shift);

    // out[c] = sum_j w[j] * cols[c * J + j]
    void (*weighted_first)(const double* cols, std::size_t J, std::size_t k, const double* w, double* out);

    // out (k x k, column-major) = sum_j w[j] (col_a[j] - mean[a]) (col_b[j] - mean[b])
    void (*weighted_centered_second)(const double* cols, std::size_t J, std::size_t k, const double* w,
                                     const double* mean, double* out);
};

const KernelTable& scalar_table();

bool isa_available(Isa isa);
const char* isa_name(Isa isa);

/// Throws ValidationError when the ISA is not compiled in or not supported by this CPU.
const KernelTable& table(Isa isa);

/// Widest supported ISA, unless MRE_SIMD=scalar|avx2 says otherwise.
Isa active_isa();
const KernelTable& active();

/// Overrides the runtime choice (mainly for tests and benchmarks).
void set_active(Isa isa);

}  // namespace mre::kernels
