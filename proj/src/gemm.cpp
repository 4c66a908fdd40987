#include "coodkit/gemm.hpp"

namespace cood::ad::detail {

#if defined(__x86_64__) && defined(__GNUC__)
#define COOD_CLONES __attribute__((target_clones("avx2,fma", "avx2", "default")))
#else
#define COOD_CLONES
#endif

COOD_CLONES
void sgemm_nn(int m, int k, int n, const float* a, const float* b, float* c) {
    for (int i = 0; i < m; ++i) {
        float* crow = c + static_cast<std::ptrdiff_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const float aip = a[static_cast<std::ptrdiff_t>(i) * k + p];
            const float* brow = b + static_cast<std::ptrdiff_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

COOD_CLONES
void sgemm_nt(int m, int k, int n, const float* a, const float* b, float* c) {
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<std::ptrdiff_t>(i) * k;
        float* crow = c + static_cast<std::ptrdiff_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* brow = b + static_cast<std::ptrdiff_t>(j) * k;
            float s = 0.f;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] += s;
        }
    }
}

COOD_CLONES
void sgemm_tn(int m, int k, int n, const float* a, const float* g, float* c) {
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<std::ptrdiff_t>(i) * k;
        const float* grow = g + static_cast<std::ptrdiff_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const float aip = arow[p];
            float* crow = c + static_cast<std::ptrdiff_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += aip * grow[j];
        }
    }
}

} // namespace cood::ad::detail
