#include "corrnet/kernels.hpp"

#include <cstdlib>

#include "corrnet/errors.hpp"
#include "corrnet/kernels_impl.hpp"

namespace corrnet::kernels {

namespace {

struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, const double*, double*, std::size_t);
    void (*add)(const double*, const double*, double*, std::size_t);
    void (*hadamard)(const double*, const double*, double*, std::size_t);
    void (*elementwise_max)(const double*, const double*, double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*max_value)(const double*, std::size_t);
    void (*relu)(const double*, double*, std::size_t);
    void (*relu_backward)(const double*, const double*, double*, std::size_t);
    void (*matvec)(const double*, std::size_t, std::size_t, const double*, const double*, double*);
    void (*matvec_transposed)(const double*, std::size_t, std::size_t, const double*, double*);
    void (*rank1_update)(double*, std::size_t, std::size_t, double, const double*, const double*);
    void (*momentum_step)(double*, double*, const double*, double, double, std::size_t);
};

constexpr KernelTable kScalarTable = {
    scalar::dot,           scalar::axpy,          scalar::scale,
    scalar::add,           scalar::hadamard,      scalar::elementwise_max,
    scalar::sum,           scalar::max_value,     scalar::relu,
    scalar::relu_backward, scalar::matvec,        scalar::matvec_transposed,
    scalar::rank1_update,  scalar::momentum_step,
};

#ifdef CORRNET_HAVE_AVX2_BUILD
constexpr KernelTable kAvx2Table = {
    avx2::dot,           avx2::axpy,          avx2::scale,
    avx2::add,           avx2::hadamard,      avx2::elementwise_max,
    avx2::sum,           avx2::max_value,     avx2::relu,
    avx2::relu_backward, avx2::matvec,        avx2::matvec_transposed,
    avx2::rank1_update,  avx2::momentum_step,
};
#endif

bool cpu_has_avx2() {
#if defined(CORRNET_HAVE_AVX2_BUILD) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend pick_default() {
    if (const char* env = std::getenv("CORRNET_KERNEL_BACKEND")) {
        std::string requested(env);
        if (requested == "scalar") return Backend::scalar;
        if (requested == "avx2" && avx2_available()) return Backend::avx2;
    }
    return avx2_available() ? Backend::avx2 : Backend::scalar;
}

struct Dispatch {
    Backend backend;
    const KernelTable* table;

    Dispatch() { set(pick_default()); }

    void set(Backend b) {
        backend = b;
#ifdef CORRNET_HAVE_AVX2_BUILD
        table = (b == Backend::avx2) ? &kAvx2Table : &kScalarTable;
#else
        table = &kScalarTable;
#endif
    }
};

Dispatch& dispatch() {
    static Dispatch instance;
    return instance;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

bool avx2_available() {
    static const bool available = cpu_has_avx2();
    return available;
}

void force_backend(Backend backend) {
    if (backend == Backend::avx2 && !avx2_available()) {
        throw ConfigError("avx2 kernel backend is not available on this machine");
    }
    dispatch().set(backend);
}

void reset_backend() { dispatch().set(pick_default()); }

std::string backend_name(Backend backend) {
    return backend == Backend::avx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) {
    return dispatch().table->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    dispatch().table->axpy(alpha, x, y, n);
}

void scale(double alpha, const double* x, double* out, std::size_t n) {
    dispatch().table->scale(alpha, x, out, n);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    dispatch().table->add(a, b, out, n);
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    dispatch().table->hadamard(a, b, out, n);
}

void elementwise_max(const double* a, const double* b, double* out, std::size_t n) {
    dispatch().table->elementwise_max(a, b, out, n);
}

double sum(const double* x, std::size_t n) { return dispatch().table->sum(x, n); }

double max_value(const double* x, std::size_t n) {
    return dispatch().table->max_value(x, n);
}

void relu(const double* x, double* out, std::size_t n) {
    dispatch().table->relu(x, out, n);
}

void relu_backward(const double* pre, const double* g, double* out, std::size_t n) {
    dispatch().table->relu_backward(pre, g, out, n);
}

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* out) {
    dispatch().table->matvec(w, rows, cols, x, b, out);
}

void matvec_transposed(const double* w, std::size_t rows, std::size_t cols,
                       const double* y, double* out) {
    dispatch().table->matvec_transposed(w, rows, cols, y, out);
}

void rank1_update(double* w, std::size_t rows, std::size_t cols,
                  double alpha, const double* r, const double* c) {
    dispatch().table->rank1_update(w, rows, cols, alpha, r, c);
}

void momentum_step(double* param, double* vel, const double* grad,
                   double momentum, double lr, std::size_t n) {
    dispatch().table->momentum_step(param, vel, grad, momentum, lr, n);
}

}  // namespace corrnet::kernels
