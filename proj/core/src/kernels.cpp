#include "kernels.hpp"

#include <cstring>

namespace dest::kern {

void gemm_nn(int m, int n, int k,
             const double* a, int lda,
             const double* b, int ldb,
             double* c, int ldc, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<long>(i) * ldc;
        if (!accumulate) std::memset(ci, 0, sizeof(double) * static_cast<size_t>(n));
        const double* ai = a + static_cast<long>(i) * lda;
        for (int p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = b + static_cast<long>(p) * ldb;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void gemm_nt(int m, int n, int k,
             const double* a, int lda,
             const double* b, int ldb,
             double* c, int ldc, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<long>(i) * lda;
        double* ci = c + static_cast<long>(i) * ldc;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<long>(j) * ldb;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            if (accumulate) ci[j] += acc; else ci[j] = acc;
        }
    }
}

void gemm_tn(int m, int n, int k,
             const double* a, int lda,
             const double* b, int ldb,
             double* c, int ldc, bool accumulate) {
    if (!accumulate) {
        for (int i = 0; i < m; ++i) {
            std::memset(c + static_cast<long>(i) * ldc, 0, sizeof(double) * static_cast<size_t>(n));
        }
    }
    for (int p = 0; p < k; ++p) {
        const double* ap = a + static_cast<long>(p) * lda;
        const double* bp = b + static_cast<long>(p) * ldb;
        for (int i = 0; i < m; ++i) {
            const double av = ap[i];
            if (av == 0.0) continue;
            double* ci = c + static_cast<long>(i) * ldc;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

} // namespace dest::kern
