#include "plgan/gemm.hpp"

#include <cstdlib>

#include <cblas.h>

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace plgan {

namespace {

// Single-threaded BLAS unless the user asks otherwise: the matrices here are
// small enough that thread fan-out costs more than it saves, and a fixed
// summation order keeps training runs bitwise reproducible.
const bool kBlasConfigured = [] {
    if (openblas_set_num_threads && !std::getenv("OPENBLAS_NUM_THREADS"))
        openblas_set_num_threads(1);
    return true;
}();

} // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
    (void)kBlasConfigured;
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c,
                ldc);
}

} // namespace plgan
