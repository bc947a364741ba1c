#ifndef CORRNET_KERNELS_HPP_
#define CORRNET_KERNELS_HPP_

#include <cstddef>
#include <string>

namespace corrnet::kernels {

// Dense double-precision kernels behind every hot loop in the library.
// Two implementations exist: a scalar reference (always built) and an AVX2+FMA
// variant (x86-64 only), selected once at runtime from CPUID. The variants are
// equivalence-tested against each other; within one process the selection is
// fixed, so repeated runs on the same machine are bit-identical.

enum class Backend { scalar, avx2 };

// Backend currently routing the kernels.
Backend active_backend();

// True if this build has an AVX2 variant and the CPU supports it.
bool avx2_available();

// Pin the backend (tests use this to cross-check variants). Throws
// ConfigError if the requested backend is unavailable. The environment
// variable CORRNET_KERNEL_BACKEND=scalar|avx2 does the same at startup.
void force_backend(Backend backend);
void reset_backend();  // back to automatic selection

std::string backend_name(Backend backend);

// y . x
double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// out = alpha * x
void scale(double alpha, const double* x, double* out, std::size_t n);

// out = a + b, a * b, max(a, b) elementwise
void add(const double* a, const double* b, double* out, std::size_t n);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
void elementwise_max(const double* a, const double* b, double* out, std::size_t n);

double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);

// out = max(x, 0)
void relu(const double* x, double* out, std::size_t n);

// out = g where pre > 0, else 0 (ReLU backward)
void relu_backward(const double* pre, const double* g, double* out, std::size_t n);

// out = W x + b (W row-major rows x cols, b may be null for plain W x)
void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* out);

// out = W^T y (out has cols entries)
void matvec_transposed(const double* w, std::size_t rows, std::size_t cols,
                       const double* y, double* out);

// W += alpha * r c^T (rank-1 update, r rows-dim, c cols-dim)
void rank1_update(double* w, std::size_t rows, std::size_t cols,
                  double alpha, const double* r, const double* c);

// vel = momentum * vel - lr * grad; param += vel
void momentum_step(double* param, double* vel, const double* grad,
                   double momentum, double lr, std::size_t n);

}  // namespace corrnet::kernels

#endif  // CORRNET_KERNELS_HPP_
