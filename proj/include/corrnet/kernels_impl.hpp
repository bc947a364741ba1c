#ifndef CORRNET_KERNELS_IMPL_HPP_
#define CORRNET_KERNELS_IMPL_HPP_

#include <cstddef>

// Internal: per-backend kernel entry points used by the dispatcher. Each
// backend namespace mirrors the public surface in kernels.hpp.

#if defined(__x86_64__) || defined(_M_X64)
#define CORRNET_HAVE_AVX2_BUILD 1
#endif

namespace corrnet::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, const double* x, double* out, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
void elementwise_max(const double* a, const double* b, double* out, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);
void relu(const double* x, double* out, std::size_t n);
void relu_backward(const double* pre, const double* g, double* out, std::size_t n);
void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* out);
void matvec_transposed(const double* w, std::size_t rows, std::size_t cols,
                       const double* y, double* out);
void rank1_update(double* w, std::size_t rows, std::size_t cols,
                  double alpha, const double* r, const double* c);
void momentum_step(double* param, double* vel, const double* grad,
                   double momentum, double lr, std::size_t n);
}  // namespace scalar

#ifdef CORRNET_HAVE_AVX2_BUILD
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, const double* x, double* out, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
void elementwise_max(const double* a, const double* b, double* out, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);
void relu(const double* x, double* out, std::size_t n);
void relu_backward(const double* pre, const double* g, double* out, std::size_t n);
void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* out);
void matvec_transposed(const double* w, std::size_t rows, std::size_t cols,
                       const double* y, double* out);
void rank1_update(double* w, std::size_t rows, std::size_t cols,
                  double alpha, const double* r, const double* c);
void momentum_step(double* param, double* vel, const double* grad,
                   double momentum, double lr, std::size_t n);
}  // namespace avx2
#endif

}  // namespace corrnet::kernels

#endif  // CORRNET_KERNELS_IMPL_HPP_
