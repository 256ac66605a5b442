#include "rogo/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace rogo::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1 << 15;

int initial_threads() {
    if (const char* env = std::getenv("ROGO_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    return omp_get_max_threads();
}

int& thread_cap() {
    static int cap = initial_threads();
    return cap;
}

// Row kernels shared by both variants.
inline void row_nn(std::size_t i, std::size_t n, std::size_t k, const double* a, const double* b,
                   double* c) {
    double* ci = c + i * n;
    std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double aip = ai[p];
        if (aip == 0.0) continue;
        const double* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
}

inline void row_tn(std::size_t i, std::size_t m, std::size_t n, std::size_t k, const double* a,
                   const double* b, double* c) {
    double* ci = c + i * n;
    std::fill(ci, ci + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
        const double api = a[p * m + i];
        if (api == 0.0) continue;
        const double* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
}

inline void row_nt(std::size_t i, std::size_t n, std::size_t k, const double* a, const double* b,
                   double* c) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
        const double* bj = b + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
        ci[j] = s;
    }
}

int threads_for(std::size_t work) {
    return work < kParallelWork ? 1 : std::max(1, thread_cap());
}

}  // namespace

int max_threads() { return thread_cap(); }

void set_max_threads(int n) { thread_cap() = std::max(1, n); }

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) num_threads(threads_for(m * n * k))
    for (std::ptrdiff_t i = 0; i < rows; ++i) row_nn(static_cast<std::size_t>(i), n, k, a, b, c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) num_threads(threads_for(m * n * k))
    for (std::ptrdiff_t i = 0; i < rows; ++i)
        row_tn(static_cast<std::size_t>(i), m, n, k, a, b, c);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) num_threads(threads_for(m * n * k))
    for (std::ptrdiff_t i = 0; i < rows; ++i) row_nt(static_cast<std::size_t>(i), n, k, a, b, c);
}

namespace serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t i = 0; i < m; ++i) row_nn(i, n, k, a, b, c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t i = 0; i < m; ++i) row_tn(i, m, n, k, a, b, c);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t i = 0; i < m; ++i) row_nt(i, n, k, a, b, c);
}

}  // namespace serial

}  // namespace rogo::kernels
