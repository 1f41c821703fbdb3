#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

#include "kernels_impl.hpp"

namespace netls::kernels {
namespace {

Backend best_available() noexcept {
    if (supported(Backend::avx2)) return Backend::avx2;
    if (supported(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

Backend initial_backend() noexcept {
    if (const char* env = std::getenv("NETLS_KERNELS")) {
        const std::string_view v(env);
        for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
            if (v == to_string(b) && supported(b)) return b;
        }
    }
    return best_available();
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> b{initial_backend()};
    return b;
}

const Table& active() { return table(current().load(std::memory_order_relaxed)); }

}  // namespace

const char* to_string(Backend b) noexcept {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

bool supported(Backend b) noexcept {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2:
#if defined(NETLS_HAVE_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Backend::neon:
#if defined(NETLS_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (!supported(b)) {
        throw std::invalid_argument(std::string("kernel backend not available: ") + to_string(b));
    }
    current().store(b, std::memory_order_relaxed);
}

const Table& table(Backend b) {
    switch (b) {
#if defined(NETLS_HAVE_AVX2)
        case Backend::avx2: return detail::avx2_table();
#endif
#if defined(NETLS_HAVE_NEON)
        case Backend::neon: return detail::neon_table();
#endif
        default: break;
    }
    if (b != Backend::scalar) {
        throw std::invalid_argument(std::string("kernel backend not compiled in: ") + to_string(b));
    }
    return detail::scalar_table();
}

void check_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string("kernels::") + what + ": length mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

void axpy(std::span<double> y, double a, std::span<const double> x) {
    check_lengths(y.size(), x.size(), "axpy");
    active().axpy(y.data(), a, x.data(), y.size());
}

void scale(std::span<double> y, double a, std::span<const double> x) {
    check_lengths(y.size(), x.size(), "scale");
    active().scale(y.data(), a, x.data(), y.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
    check_lengths(a.size(), b.size(), "dot");
    return active().dot(a.data(), b.data(), a.size());
}

void gemv(std::span<double> y, std::span<const double> a, std::span<const double> x, std::size_t rows,
          std::size_t cols) {
    check_lengths(y.size(), rows, "gemv rows");
    check_lengths(x.size(), cols, "gemv cols");
    check_lengths(a.size(), rows * cols, "gemv matrix");
    active().gemv(y.data(), a.data(), x.data(), rows, cols);
}

}  // namespace netls::kernels
