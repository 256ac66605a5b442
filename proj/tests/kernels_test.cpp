#include <doctest.h>

#include "oracles.hpp"
#include "rogo/kernels.hpp"
#include "rogo/linalg.hpp"
#include "rogo/rng.hpp"

using namespace rogo;

namespace {

struct ThreadCap {
    int saved = kernels::max_threads();
    explicit ThreadCap(int n) { kernels::set_max_threads(n); }
    ~ThreadCap() { kernels::set_max_threads(saved); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
    Rng rng = substream(11, "kernels");
    for (int threads : {1, 2, 3, 4}) {
        ThreadCap cap(threads);
        // sizes straddle the small-work serial cutoff
        for (std::size_t m : {1, 7, 64, 300}) {
            const std::size_t n = m / 2 + 3, k = m + 5;
            const Matrix a = random_normal(m, k, rng), b = random_normal(k, n, rng);
            Matrix par(m, n), ser(m, n);
            kernels::gemm_nn(m, n, k, a.data(), b.data(), par.data());
            kernels::serial::gemm_nn(m, n, k, a.data(), b.data(), ser.data());
            CHECK(par == ser);

            const Matrix at = random_normal(k, m, rng);
            Matrix par_tn(m, n), ser_tn(m, n);
            kernels::gemm_tn(m, n, k, at.data(), b.data(), par_tn.data());
            kernels::serial::gemm_tn(m, n, k, at.data(), b.data(), ser_tn.data());
            CHECK(par_tn == ser_tn);

            const Matrix bt = random_normal(n, k, rng);
            Matrix par_nt(m, n), ser_nt(m, n);
            kernels::gemm_nt(m, n, k, a.data(), bt.data(), par_nt.data());
            kernels::serial::gemm_nt(m, n, k, a.data(), bt.data(), ser_nt.data());
            CHECK(par_nt == ser_nt);
        }
    }
}

TEST_CASE("serial reference agrees with the naive oracle") {
    Rng rng = substream(12, "kernels/oracle");
    const Matrix a = random_normal(33, 21, rng), b = random_normal(21, 17, rng);
    Matrix c(33, 17);
    kernels::serial::gemm_nn(33, 17, 21, a.data(), b.data(), c.data());
    CHECK(oracle::max_abs_diff(c, oracle::naive_matmul(a, b)) < 1e-12);
}

TEST_CASE("thread cap") {
    ThreadCap cap(2);
    CHECK(kernels::max_threads() == 2);
    kernels::set_max_threads(0);
    CHECK(kernels::max_threads() >= 1);
}

}  // TEST_SUITE
