#include "mre/kernels.hpp"

#include <cmath>
#include <limits>

namespace mre::kernels {

namespace {

void affine_logits(const double* cols, std::size_t J, std::size_t k, const double* theta, const double* offset,
                   double* out) {
    for (std::size_t j = 0; j < J; ++j) out[j] = offset[j];
    for (std::size_t c = 0; c < k; ++c) {
        const double t = theta[c];
        const double* col = cols + c * J;
        for (std::size_t j = 0; j < J; ++j) out[j] += t * col[j];
    }
}

double max_value(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

double exp_shift_sum(double* x, std::size_t n, double shift) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - shift);
        sum += x[i];
    }
    return sum;
}

void weighted_first(const double* cols, std::size_t J, std::size_t k, const double* w, double* out) {
    for (std::size_t c = 0; c < k; ++c) {
        const double* col = cols + c * J;
        double s = 0.0;
        for (std::size_t j = 0; j < J; ++j) s += w[j] * col[j];
        out[c] = s;
    }
}

void weighted_centered_second(const double* cols, std::size_t J, std::size_t k, const double* w, const double* mean,
                              double* out) {
    for (std::size_t a = 0; a < k; ++a) {
        const double* ca = cols + a * J;
        for (std::size_t b = a; b < k; ++b) {
            const double* cb = cols + b * J;
            double s = 0.0;
            for (std::size_t j = 0; j < J; ++j) s += w[j] * (ca[j] - mean[a]) * (cb[j] - mean[b]);
            out[a + b * k] = s;
            out[b + a * k] = s;
        }
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable t{affine_logits, max_value, exp_shift_sum, weighted_first, weighted_centered_second};
    return t;
}

}  // namespace mre::kernels
