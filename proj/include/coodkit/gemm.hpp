#pragma once

// Float matmul kernels for the training hot path. Compiled with function
// multi-versioning so AVX2/FMA machines get vectorized clones while the
// binary stays runnable on baseline x86-64.

#include <cstddef>

namespace cood::ad::detail {

// C += A(m x k) * B(k x n), all row-major
void sgemm_nn(int m, int k, int n, const float* a, const float* b, float* c);

// C[i,j] += dot(A row i, B row j); A is m x k, B is n x k
void sgemm_nt(int m, int k, int n, const float* a, const float* b, float* c);

// C(k x n) += A^T(k x m) * G(m x n) with A stored m x k row-major
void sgemm_tn(int m, int k, int n, const float* a, const float* g, float* c);

} // namespace cood::ad::detail
