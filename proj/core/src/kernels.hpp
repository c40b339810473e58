#pragma once

// Internal row-major GEMM kernels shared by the op layer and the fused
// temporal kernels. All take explicit leading dimensions so callers can
// address column windows of larger matrices (the conv tap trick).

namespace dest::kern {

// C[m,n] = (accumulate ? C : 0) + A[m,k] * B[k,n]
void gemm_nn(int m, int n, int k,
             const double* a, int lda,
             const double* b, int ldb,
             double* c, int ldc, bool accumulate);

// C[m,n] = (accumulate ? C : 0) + A[m,k] * B[n,k]^T
void gemm_nt(int m, int n, int k,
             const double* a, int lda,
             const double* b, int ldb,
             double* c, int ldc, bool accumulate);

// C[m,n] = (accumulate ? C : 0) + A[k,m]^T * B[k,n]
void gemm_tn(int m, int n, int k,
             const double* a, int lda,
             const double* b, int ldb,
             double* c, int ldc, bool accumulate);

} // namespace dest::kern
