#pragma once

namespace plgan {

// C (m x n, row-major, leading dim ldc) = alpha * op(A) * op(B) + beta * C.
// op(A) is m x k with leading dimension lda; op(B) is k x n with leading
// dimension ldb. trans_* selects op(X) = X^T on the stored matrix.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);

} // namespace plgan
