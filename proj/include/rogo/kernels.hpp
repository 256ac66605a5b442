#pragma once

#include <cstddef>

// Dense kernels on raw row-major buffers. The parallel versions split work
// over output rows only, so every output entry is accumulated in the same
// order as the serial reference and results are bit-identical for any
// thread count.
namespace rogo::kernels {

// c (m x n) = a (m x k) * b (k x n)
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
// c (m x n) = a^T * b, a is (k x m), b is (k x n)
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
// c (m x n) = a * b^T, a is (m x k), b is (n x k)
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);

/// Threads the parallel kernels may use (ROGO_THREADS, else the OpenMP default).
int max_threads();
void set_max_threads(int n);

namespace serial {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
}  // namespace serial

}  // namespace rogo::kernels
