#include "corrnet/ops.hpp"

#include <cmath>
#include <string>

#include "corrnet/kernels.hpp"

namespace corrnet {

Matrix outer(const Vector& u, const Vector& v) {
    if (u.empty() || v.empty()) {
        throw DimensionError("outer: input vectors must be non-empty");
    }
    Matrix c(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        kernels::scale(u[i], v.data(), c.row(i), v.size());
    }
    return c;
}

Matrix row_l2_normalize(const Matrix& c, double eps) {
    return row_l2_normalize(c, eps, nullptr);
}

Matrix row_l2_normalize(const Matrix& c, double eps, Vector* row_norms) {
    if (eps < 0.0) throw DomainError("row_l2_normalize: eps must be nonnegative");
    Matrix out(c.rows, c.cols);
    if (row_norms) row_norms->assign(c.rows, 0.0);
    for (std::size_t i = 0; i < c.rows; ++i) {
        const double* row = c.row(i);
        double norm = std::sqrt(kernels::dot(row, row, c.cols));
        if (row_norms) (*row_norms)[i] = norm;
        double denom = norm + eps;
        if (denom == 0.0) continue;  // zero row, eps 0: stays all-zero
        kernels::scale(1.0 / denom, row, out.row(i), c.cols);
    }
    return out;
}

Vector softmax(const Vector& x) {
    if (x.empty()) throw DimensionError("softmax: input must be non-empty");
    Vector p(x.size());
    double shift = kernels::max_value(x.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::exp(x[i] - shift);
    double total = kernels::sum(p.data(), p.size());
    kernels::scale(1.0 / total, p.data(), p.data(), p.size());
    return p;
}

double shannon_entropy(const Vector& p) {
    if (p.empty()) throw DimensionError("shannon_entropy: input must be non-empty");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0) {
            throw DomainError("shannon_entropy: negative probability at index " +
                              std::to_string(i));
        }
        total += p[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw DomainError("shannon_entropy: probabilities sum to " +
                          std::to_string(total) + ", expected 1");
    }
    double entropy = 0.0;
    for (double q : p) {
        if (q > 0.0) entropy -= q * std::log2(q);
    }
    return entropy < 0.0 ? 0.0 : entropy;  // rounding can leave -1e-16 behind
}

double cross_entropy(const Vector& probs, std::size_t target) {
    if (target >= probs.size()) {
        throw IndexError("cross_entropy: class id " + std::to_string(target) +
                         " out of range for " + std::to_string(probs.size()) +
                         " classes");
    }
    double p = probs[target];
    if (p < kProbFloor) p = kProbFloor;
    return -std::log(p);
}

Vector affine(const Matrix& w, const Vector& b, const Vector& x) {
    if (w.cols != x.size() || w.rows != b.size()) {
        throw DimensionError("affine: shape mismatch (W " + std::to_string(w.rows) +
                             "x" + std::to_string(w.cols) + ", b " +
                             std::to_string(b.size()) + ", x " +
                             std::to_string(x.size()) + ")");
    }
    Vector out(w.rows);
    kernels::matvec(w.data.data(), w.rows, w.cols, x.data(), b.data(), out.data());
    return out;
}

std::size_t argmax(const Vector& x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] > x[best]) best = i;
    }
    return best;
}

}  // namespace corrnet
