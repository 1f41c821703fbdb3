#pragma once

// Vector kernels behind the per-node updates and M^t propagation.
//
// Every kernel has a scalar reference implementation; double precision
// additionally has AVX2 (x86-64) and NEON (aarch64) variants chosen at run
// time. axpy and scale are bitwise identical across backends (one multiply and
// one add per element, no contraction). dot and gemv reassociate the sum and
// agree with the reference to rounding.
//
// The backend can be forced with NETLS_KERNELS=scalar|avx2|neon.

#include <cstddef>
#include <span>

namespace netls::kernels {

enum class Backend { scalar, avx2, neon };

[[nodiscard]] const char* to_string(Backend b) noexcept;
[[nodiscard]] bool supported(Backend b) noexcept;
[[nodiscard]] Backend active_backend() noexcept;
/// Throws std::invalid_argument if `b` is not supported on this CPU/build.
void set_backend(Backend b);

/// Function table for one backend; all pointers non-null.
struct Table {
    void (*axpy)(double* y, double a, const double* x, std::size_t n);
    void (*scale)(double* y, double a, const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*gemv)(double* y, const double* a, const double* x, std::size_t rows, std::size_t cols);
};

[[nodiscard]] const Table& table(Backend b);

namespace scalar {

template <class Real>
void axpy(Real* y, Real a, const Real* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

template <class Real>
void scale(Real* y, Real a, const Real* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

template <class Real>
Real dot(const Real* a, const Real* b, std::size_t n) {
    Real s = 0;
    for (std::size_t i = 0; i < n; ++i) s = s + a[i] * b[i];
    return s;
}

/// y = A x with A row-major rows x cols.
template <class Real>
void gemv(Real* y, const Real* a, const Real* x, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

}  // namespace scalar

// Checked span front-ends. Double dispatches to the active backend, every
// other real type runs the scalar reference.

void axpy(std::span<double> y, double a, std::span<const double> x);
void scale(std::span<double> y, double a, std::span<const double> x);
[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
void gemv(std::span<double> y, std::span<const double> a, std::span<const double> x, std::size_t rows,
          std::size_t cols);

void check_lengths(std::size_t a, std::size_t b, const char* what);

template <class Real>
void axpy(std::span<Real> y, Real a, std::span<const Real> x) {
    check_lengths(y.size(), x.size(), "axpy");
    scalar::axpy(y.data(), a, x.data(), y.size());
}

template <class Real>
void scale(std::span<Real> y, Real a, std::span<const Real> x) {
    check_lengths(y.size(), x.size(), "scale");
    scalar::scale(y.data(), a, x.data(), y.size());
}

template <class Real>
[[nodiscard]] Real dot(std::span<const Real> a, std::span<const Real> b) {
    check_lengths(a.size(), b.size(), "dot");
    return scalar::dot(a.data(), b.data(), a.size());
}

template <class Real>
void gemv(std::span<Real> y, std::span<const Real> a, std::span<const Real> x, std::size_t rows,
          std::size_t cols) {
    check_lengths(y.size(), rows, "gemv rows");
    check_lengths(x.size(), cols, "gemv cols");
    check_lengths(a.size(), rows * cols, "gemv matrix");
    scalar::gemv(y.data(), a.data(), x.data(), rows, cols);
}

}  // namespace netls::kernels
