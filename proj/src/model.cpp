#include "corrnet/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "corrnet/kernels.hpp"
#include "corrnet/rng.hpp"

namespace corrnet {

namespace {

void glorot_fill(Matrix& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& e : w.data) e = rng.uniform(-bound, bound);
}

void check_dims(const CorrnetParams& p, std::size_t un, std::size_t vm) {
    if (un != p.n || vm != p.m) {
        throw DimensionError("forward: input dims " + std::to_string(un) + "x" +
                             std::to_string(vm) + " do not match model " +
                             std::to_string(p.n) + "x" + std::to_string(p.m));
    }
}

}  // namespace

CorrnetParams init_params(std::size_t n, std::size_t m, std::size_t hidden,
                          std::size_t b, std::uint64_t seed) {
    if (n < 1 || m < 1 || hidden < 1 || b < 1) {
        throw ConfigError("init_params: all dimensions must be >= 1");
    }
    CorrnetParams p;
    p.n = n;
    p.m = m;
    p.hidden = hidden;
    p.b = b;
    Rng rng(seed);
    p.w1 = Matrix(hidden, n * m);
    glorot_fill(p.w1, n * m, hidden, rng);
    p.b1.assign(hidden, 0.0);
    p.w2 = Matrix(hidden, hidden);
    glorot_fill(p.w2, hidden, hidden, rng);
    p.b2.assign(hidden, 0.0);
    p.w3 = Matrix(b, hidden);
    glorot_fill(p.w3, hidden, b, rng);
    p.b3.assign(b, 0.0);
    return p;
}

Vector build_correlation_input(const Vector& u, const Vector& v, double eps,
                               bool row_normalize) {
    Matrix c = outer(u, v);
    if (!row_normalize) return c.data;
    return row_l2_normalize(c, eps).data;
}

ForwardCache forward(const CorrnetParams& params, const Vector& u, const Vector& v,
                     double eps, bool row_normalize) {
    check_dims(params, u.size(), v.size());
    ForwardCache cache;
    cache.u = u;
    cache.v = v;
    cache.eps = eps;
    cache.row_normalized = row_normalize;

    Matrix c = outer(u, v);
    if (row_normalize) {
        cache.x = row_l2_normalize(c, eps, &cache.row_norms).data;
    } else {
        cache.x = std::move(c.data);
    }

    cache.h1_pre = affine(params.w1, params.b1, cache.x);
    cache.h1.resize(params.hidden);
    kernels::relu(cache.h1_pre.data(), cache.h1.data(), params.hidden);

    cache.h2_pre = affine(params.w2, params.b2, cache.h1);
    cache.h2.resize(params.hidden);
    kernels::relu(cache.h2_pre.data(), cache.h2.data(), params.hidden);

    cache.logits = affine(params.w3, params.b3, cache.h2);
    return cache;
}

CorrnetGradients zero_gradients(const CorrnetParams& p) {
    CorrnetGradients g;
    g.w1 = Matrix(p.hidden, p.n * p.m);
    g.b1.assign(p.hidden, 0.0);
    g.w2 = Matrix(p.hidden, p.hidden);
    g.b2.assign(p.hidden, 0.0);
    g.w3 = Matrix(p.b, p.hidden);
    g.b3.assign(p.b, 0.0);
    g.du.assign(p.n, 0.0);
    g.dv.assign(p.m, 0.0);
    return g;
}

CorrnetGradients backward(const CorrnetParams& params, const ForwardCache& cache,
                          const Vector& dlogits) {
    if (dlogits.size() != params.b || cache.logits.size() != params.b ||
        cache.x.size() != params.n * params.m || cache.h1.size() != params.hidden) {
        throw DimensionError("backward: cache/params/dlogits shape mismatch");
    }
    const std::size_t n = params.n;
    const std::size_t m = params.m;
    const std::size_t hidden = params.hidden;

    CorrnetGradients g = zero_gradients(params);

    // fc3
    g.b3 = dlogits;
    kernels::rank1_update(g.w3.data.data(), params.b, hidden, 1.0, dlogits.data(),
                          cache.h2.data());
    Vector dh2(hidden);
    kernels::matvec_transposed(params.w3.data.data(), params.b, hidden,
                               dlogits.data(), dh2.data());

    // fc2
    Vector dh2_pre(hidden);
    kernels::relu_backward(cache.h2_pre.data(), dh2.data(), dh2_pre.data(), hidden);
    g.b2 = dh2_pre;
    kernels::rank1_update(g.w2.data.data(), hidden, hidden, 1.0, dh2_pre.data(),
                          cache.h1.data());
    Vector dh1(hidden);
    kernels::matvec_transposed(params.w2.data.data(), hidden, hidden,
                               dh2_pre.data(), dh1.data());

    // fc1
    Vector dh1_pre(hidden);
    kernels::relu_backward(cache.h1_pre.data(), dh1.data(), dh1_pre.data(), hidden);
    g.b1 = dh1_pre;
    kernels::rank1_update(g.w1.data.data(), hidden, n * m, 1.0, dh1_pre.data(),
                          cache.x.data());
    Vector dx(n * m);
    kernels::matvec_transposed(params.w1.data.data(), hidden, n * m,
                               dh1_pre.data(), dx.data());

    // Correlation map. Row i of the raw map is u[i] * v, so its norm is
    // |u[i]| * ||v|| and the quotient rule collapses: with d = r + eps,
    //   dL/du[i] = (dx_i . v) * eps / d^2
    //   dL/dv    = sum_i u[i]/d_i * dx_i  -  v * sum_i (dx_i . v) u[i]^3 / (r_i d_i^2)
    // At eps = 0 the du term vanishes identically: row normalization keeps
    // only the sign of u[i].
    const double eps = cache.eps;
    for (std::size_t i = 0; i < n; ++i) {
        const double* dxi = dx.data() + i * m;
        if (!cache.row_normalized) {
            g.du[i] = kernels::dot(dxi, cache.v.data(), m);
            kernels::axpy(cache.u[i], dxi, g.dv.data(), m);
            continue;
        }
        const double r = cache.row_norms[i];
        const double d = r + eps;
        if (d == 0.0) continue;  // guarded all-zero row: output constant
        const double row_dot = kernels::dot(dxi, cache.v.data(), m);
        g.du[i] = row_dot * eps / (d * d);
        kernels::axpy(cache.u[i] / d, dxi, g.dv.data(), m);
        if (r > 0.0) {
            double coeff = row_dot * cache.u[i] * cache.u[i] * cache.u[i] / (r * d * d);
            kernels::axpy(-coeff, cache.v.data(), g.dv.data(), m);
        }
    }
    return g;
}

void accumulate_gradients(CorrnetGradients& acc, const CorrnetGradients& g) {
    kernels::axpy(1.0, g.w1.data.data(), acc.w1.data.data(), acc.w1.size());
    kernels::axpy(1.0, g.b1.data(), acc.b1.data(), acc.b1.size());
    kernels::axpy(1.0, g.w2.data.data(), acc.w2.data.data(), acc.w2.size());
    kernels::axpy(1.0, g.b2.data(), acc.b2.data(), acc.b2.size());
    kernels::axpy(1.0, g.w3.data.data(), acc.w3.data.data(), acc.w3.size());
    kernels::axpy(1.0, g.b3.data(), acc.b3.data(), acc.b3.size());
    kernels::axpy(1.0, g.du.data(), acc.du.data(), acc.du.size());
    kernels::axpy(1.0, g.dv.data(), acc.dv.data(), acc.dv.size());
}

void scale_gradients(CorrnetGradients& g, double factor) {
    kernels::scale(factor, g.w1.data.data(), g.w1.data.data(), g.w1.size());
    kernels::scale(factor, g.b1.data(), g.b1.data(), g.b1.size());
    kernels::scale(factor, g.w2.data.data(), g.w2.data.data(), g.w2.size());
    kernels::scale(factor, g.b2.data(), g.b2.data(), g.b2.size());
    kernels::scale(factor, g.w3.data.data(), g.w3.data.data(), g.w3.size());
    kernels::scale(factor, g.b3.data(), g.b3.data(), g.b3.size());
    kernels::scale(factor, g.du.data(), g.du.data(), g.du.size());
    kernels::scale(factor, g.dv.data(), g.dv.data(), g.dv.size());
}

namespace {

constexpr char kMagic[8] = {'C', 'O', 'R', 'R', 'N', 'E', 'T', '1'};

void write_u32(std::ofstream& out, std::uint32_t value) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw ParseError("params file truncated: " + path);
    }
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return value;
}

void write_doubles(std::ofstream& out, const double* data, std::size_t count) {
    // Host is little-endian on every supported target; bytes go out as stored.
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
}

void read_doubles(std::ifstream& in, double* data, std::size_t count,
                  const std::string& path) {
    if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 8))) {
        throw ParseError("params file truncated: " + path);
    }
}

}  // namespace

void save_params(const CorrnetParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 8);
    write_u32(out, static_cast<std::uint32_t>(params.n));
    write_u32(out, static_cast<std::uint32_t>(params.m));
    write_u32(out, static_cast<std::uint32_t>(params.hidden));
    write_u32(out, static_cast<std::uint32_t>(params.b));
    write_doubles(out, params.w1.data.data(), params.w1.size());
    write_doubles(out, params.b1.data(), params.b1.size());
    write_doubles(out, params.w2.data.data(), params.w2.size());
    write_doubles(out, params.b2.data(), params.b2.size());
    write_doubles(out, params.w3.data.data(), params.w3.size());
    write_doubles(out, params.b3.data(), params.b3.size());
    if (!out) throw IoError("write failed: " + path);
}

CorrnetParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open params file: " + path);
    char magic[8];
    if (!in.read(magic, 8)) throw ParseError("params file truncated: " + path);
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw ParseError("bad magic header in params file: " + path);
    }
    CorrnetParams p;
    p.n = read_u32(in, path);
    p.m = read_u32(in, path);
    p.hidden = read_u32(in, path);
    p.b = read_u32(in, path);
    if (p.n < 1 || p.m < 1 || p.hidden < 1 || p.b < 1) {
        throw ParseError("params file header has zero dimension: " + path);
    }
    p.w1 = Matrix(p.hidden, p.n * p.m);
    read_doubles(in, p.w1.data.data(), p.w1.size(), path);
    p.b1.resize(p.hidden);
    read_doubles(in, p.b1.data(), p.b1.size(), path);
    p.w2 = Matrix(p.hidden, p.hidden);
    read_doubles(in, p.w2.data.data(), p.w2.size(), path);
    p.b2.resize(p.hidden);
    read_doubles(in, p.b2.data(), p.b2.size(), path);
    p.w3 = Matrix(p.b, p.hidden);
    read_doubles(in, p.w3.data.data(), p.w3.size(), path);
    p.b3.resize(p.b);
    read_doubles(in, p.b3.data(), p.b3.size(), path);
    char extra;
    if (in.read(&extra, 1)) {
        throw ParseError("params file has trailing bytes: " + path);
    }
    return p;
}

CorrnetParams tile_expand_fc1(const CorrnetParams& params, std::size_t new_n,
                              std::size_t new_m) {
    if (new_n < params.n || new_m < params.m) {
        throw ConfigError("tile_expand_fc1: new dims must not shrink");
    }
    if (new_n == params.n && new_m == params.m) return params;
    CorrnetParams p = params;
    p.n = new_n;
    p.m = new_m;
    p.w1 = Matrix(params.hidden, new_n * new_m);
    for (std::size_t h = 0; h < params.hidden; ++h) {
        const double* src = params.w1.row(h);
        double* dst = p.w1.row(h);
        for (std::size_t i = 0; i < new_n; ++i) {
            const std::size_t si = i % params.n;
            for (std::size_t j = 0; j < new_m; ++j) {
                dst[i * new_m + j] = src[si * params.m + (j % params.m)];
            }
        }
    }
    return p;
}

}  // namespace corrnet
