#pragma once

#include <cmath>
#include <cstddef>

namespace mtc {

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    // log(1 + e^x), overflow-safe
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

// C[B,n] += A[B,k] * W[n,k]^T  (all row-major)
inline void gemm_abt(const double* A, const double* W, double* C, int B, int k, int n) {
    for (int b = 0; b < B; ++b) {
        const double* a = A + static_cast<std::size_t>(b) * k;
        double* c = C + static_cast<std::size_t>(b) * n;
        for (int i = 0; i < n; ++i) {
            const double* w = W + static_cast<std::size_t>(i) * k;
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += a[j] * w[j];
            c[i] += acc;
        }
    }
}

// dW[n,k] += G[B,n]^T * A[B,k]
inline void gemm_atb(const double* G, const double* A, double* dW, int B, int n, int k) {
    for (int b = 0; b < B; ++b) {
        const double* g = G + static_cast<std::size_t>(b) * n;
        const double* a = A + static_cast<std::size_t>(b) * k;
        for (int i = 0; i < n; ++i) {
            double* w = dW + static_cast<std::size_t>(i) * k;
            const double gi = g[i];
            for (int j = 0; j < k; ++j) w[j] += gi * a[j];
        }
    }
}

// dA[B,k] += G[B,n] * W[n,k]
inline void gemm_ab(const double* G, const double* W, double* dA, int B, int n, int k) {
    for (int b = 0; b < B; ++b) {
        const double* g = G + static_cast<std::size_t>(b) * n;
        double* da = dA + static_cast<std::size_t>(b) * k;
        for (int i = 0; i < n; ++i) {
            const double* w = W + static_cast<std::size_t>(i) * k;
            const double gi = g[i];
            for (int j = 0; j < k; ++j) da[j] += gi * w[j];
        }
    }
}

} // namespace mtc
