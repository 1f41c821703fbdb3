#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace netls::kernels::detail {
namespace {

void axpy_neon(double* y, double a, const double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        // vmulq + vaddq, not vfmaq: keeps results bitwise equal to the reference
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void scale_neon(double* y, double a, const double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] = a * x[i];
}

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void gemv_neon(double* y, const double* a, const double* x, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(a + r * cols, x, cols);
}

}  // namespace

const Table& neon_table() {
    static const Table t{&axpy_neon, &scale_neon, &dot_neon, &gemv_neon};
    return t;
}

}  // namespace netls::kernels::detail
