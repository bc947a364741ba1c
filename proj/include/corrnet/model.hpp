#ifndef CORRNET_MODEL_HPP_
#define CORRNET_MODEL_HPP_

#include <cstdint>
#include <string>

#include "corrnet/ops.hpp"
#include "corrnet/tensor.hpp"

namespace corrnet {

enum class Activation : std::uint8_t { relu };

// Weights of the correlation head: flattened normalized correlation map in,
// class logits out, through fc1 -> relu -> fc2 -> relu -> fc3.
struct CorrnetParams {
    std::size_t n = 0;       // spatial class count (correlation map rows)
    std::size_t m = 0;       // temporal class count (correlation map columns)
    std::size_t hidden = 0;  // fc1/fc2 width
    std::size_t b = 0;       // output class count
    Matrix w1;               // hidden x (n*m)
    Vector b1;
    Matrix w2;               // hidden x hidden
    Vector b2;
    Matrix w3;               // b x hidden
    Vector b3;
    Activation activation = Activation::relu;

    bool operator==(const CorrnetParams& other) const = default;
};

// Everything forward() computed, kept for the exact backward pass.
struct ForwardCache {
    Vector u, v;          // raw inputs
    Vector row_norms;     // pre-normalization L2 norm of each correlation row
    double eps = 0.0;
    bool row_normalized = true;
    Vector x;             // flattened normalized correlation map, n*m
    Vector h1_pre, h1;    // fc1 pre/post activation
    Vector h2_pre, h2;    // fc2 pre/post activation
    Vector logits;
};

// Gradients mirroring CorrnetParams, plus gradients into the two stream
// score vectors (the chain continued through the correlation map).
struct CorrnetGradients {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;
    Matrix w3;
    Vector b3;
    Vector du;
    Vector dv;
};

// Glorot-uniform weights, zero biases, fully determined by the seed.
CorrnetParams init_params(std::size_t n, std::size_t m, std::size_t hidden,
                          std::size_t b, std::uint64_t seed);

// Flatten of row_l2_normalize(outer(u, v), eps). row_normalize=false skips
// the normalization and flattens the raw outer product (study flag).
Vector build_correlation_input(const Vector& u, const Vector& v,
                               double eps = kDefaultNormEps,
                               bool row_normalize = true);

// Head forward pass; the cache feeds backward().
ForwardCache forward(const CorrnetParams& params, const Vector& u, const Vector& v,
                     double eps = kDefaultNormEps, bool row_normalize = true);

// Exact gradients of sum(logits * dlogits) w.r.t. every parameter and both
// input score vectors.
CorrnetGradients backward(const CorrnetParams& params, const ForwardCache& cache,
                          const Vector& dlogits);

CorrnetGradients zero_gradients(const CorrnetParams& params);

// Accumulate: acc += g (shapes must match).
void accumulate_gradients(CorrnetGradients& acc, const CorrnetGradients& g);
void scale_gradients(CorrnetGradients& g, double factor);

// Binary little-endian parameter file, magic "CORRNET1". Round-trips
// bit-exactly.
void save_params(const CorrnetParams& params, const std::string& path);
CorrnetParams load_params(const std::string& path);

// Grow fc1 to accept a (new_n * new_m)-dim correlation input; each new input
// column reuses the column of (i mod n, j mod m). Other layers are untouched.
CorrnetParams tile_expand_fc1(const CorrnetParams& params, std::size_t new_n,
                              std::size_t new_m);

}  // namespace corrnet

#endif  // CORRNET_MODEL_HPP_
