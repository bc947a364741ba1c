// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against; keep them simple and obviously correct.

#include "corrnet/kernels_impl.hpp"

#include <algorithm>

namespace corrnet::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void elementwise_max(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(a[i], b[i]);
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double max_value(const double* x, std::size_t n) {
    double best = x[0];
    for (std::size_t i = 1; i < n; ++i) best = std::max(best, x[i]);
    return best;
}

void relu(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* pre, const double* g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b ? b[r] : 0.0;
        const double* row = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
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
    for (std::size_t i = 0; i < n; ++i) {
        vel[i] = momentum * vel[i] - lr * grad[i];
        param[i] += vel[i];
    }
}

}  // namespace corrnet::kernels::scalar
