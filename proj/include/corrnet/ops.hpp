#ifndef CORRNET_OPS_HPP_
#define CORRNET_OPS_HPP_

#include <cstddef>

#include "corrnet/tensor.hpp"

namespace corrnet {

// Default guard added to row norms so rows produced by zero-ish scores stay
// finite; small enough to be invisible next to real class scores.
inline constexpr double kDefaultNormEps = 1e-8;

// Probability floor used before any log.
inline constexpr double kProbFloor = 1e-12;

// Outer product u v^T (rows indexed by u, columns by v).
Matrix outer(const Vector& u, const Vector& v);

// Divide every row by (||row||_2 + eps). With eps = 0 an all-zero row is
// returned unchanged rather than divided.
Matrix row_l2_normalize(const Matrix& c, double eps = kDefaultNormEps);

// As row_l2_normalize, additionally reporting each row's pre-normalization
// L2 norm (used by the model backward).
Matrix row_l2_normalize(const Matrix& c, double eps, Vector* row_norms);

// Shift-stable softmax; outputs are positive and sum to 1.
Vector softmax(const Vector& x);

// Shannon entropy in bits; p must be elementwise nonnegative and sum to 1
// within 1e-9. The 0 log 0 term counts as 0.
double shannon_entropy(const Vector& p);

// -log probs[target], with the probability floored at kProbFloor.
double cross_entropy(const Vector& probs, std::size_t target);

// W x + b.
Vector affine(const Matrix& w, const Vector& b, const Vector& x);

std::size_t argmax(const Vector& x);

}  // namespace corrnet

#endif  // CORRNET_OPS_HPP_
