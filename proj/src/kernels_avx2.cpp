// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma and must only be entered after the dispatcher has checked
// CPUID, so no per-call feature tests are needed here.

#include "corrnet/kernels_impl.hpp"

#ifdef CORRNET_HAVE_AVX2_BUILD

#include <immintrin.h>

namespace corrnet::kernels::avx2 {

namespace {

constexpr std::size_t kWidth = 4;  // doubles per __m256d

// Lane sum in a fixed order so results are reproducible run to run.
inline double hsum(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += kWidth) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double result = hsum(acc);
    for (std::size_t i = body; i < n; ++i) result += a[i] * b[i];
    return result;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    const __m256d va = _mm256_set1_pd(alpha);
    for (std::size_t i = 0; i < body; i += kWidth) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (std::size_t i = body; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, const double* x, double* out, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    const __m256d va = _mm256_set1_pd(alpha);
    for (std::size_t i = 0; i < body; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = alpha * x[i];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    for (std::size_t i = 0; i < body; i += kWidth) {
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = a[i] + b[i];
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    for (std::size_t i = 0; i < body; i += kWidth) {
        _mm256_storeu_pd(out + i,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = a[i] * b[i];
}

void elementwise_max(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    for (std::size_t i = 0; i < body; i += kWidth) {
        _mm256_storeu_pd(out + i,
                         _mm256_max_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = a[i] > b[i] ? a[i] : b[i];
}

double sum(const double* x, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += kWidth) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double result = hsum(acc);
    for (std::size_t i = body; i < n; ++i) result += x[i];
    return result;
}

double max_value(const double* x, std::size_t n) {
    if (n < kWidth) {
        double best = x[0];
        for (std::size_t i = 1; i < n; ++i) best = x[i] > best ? x[i] : best;
        return best;
    }
    const std::size_t body = n - n % kWidth;
    __m256d acc = _mm256_loadu_pd(x);
    for (std::size_t i = kWidth; i < body; i += kWidth) {
        acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double best = lanes[0];
    for (int l = 1; l < 4; ++l) best = lanes[l] > best ? lanes[l] : best;
    for (std::size_t i = body; i < n; ++i) best = x[i] > best ? x[i] : best;
    return best;
}

void relu(const double* x, double* out, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    const __m256d vzero = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += kWidth) {
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), vzero));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* pre, const double* g, double* out, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    const __m256d vzero = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += kWidth) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), vzero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, _mm256_loadu_pd(g + i)));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        out[r] = (b ? b[r] : 0.0) + dot(w + r * cols, x, cols);
    }
}

void matvec_transposed(const double* w, std::size_t rows, std::size_t cols,
                       const double* y, double* out) {
    for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        axpy(y[r], w + r * cols, out, cols);
    }
}

void rank1_update(double* w, std::size_t rows, std::size_t cols,
                  double alpha, const double* r, const double* c) {
    for (std::size_t i = 0; i < rows; ++i) {
        axpy(alpha * r[i], c, w + i * cols, cols);
    }
}

void momentum_step(double* param, double* vel, const double* grad,
                   double momentum, double lr, std::size_t n) {
    const std::size_t tail = n % kWidth;
    const std::size_t body = n - tail;
    const __m256d vm = _mm256_set1_pd(momentum);
    const __m256d vlr = _mm256_set1_pd(-lr);
    for (std::size_t i = 0; i < body; i += kWidth) {
        __m256d v = _mm256_mul_pd(vm, _mm256_loadu_pd(vel + i));
        v = _mm256_fmadd_pd(vlr, _mm256_loadu_pd(grad + i), v);
        _mm256_storeu_pd(vel + i, v);
        _mm256_storeu_pd(param + i, _mm256_add_pd(_mm256_loadu_pd(param + i), v));
    }
    for (std::size_t i = body; i < n; ++i) {
        vel[i] = momentum * vel[i] - lr * grad[i];
        param[i] += vel[i];
    }
}

}  // namespace corrnet::kernels::avx2

#endif  // CORRNET_HAVE_AVX2_BUILD
