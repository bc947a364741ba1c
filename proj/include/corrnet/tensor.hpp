#ifndef CORRNET_TENSOR_HPP_
#define CORRNET_TENSOR_HPP_

#include <cstddef>
#include <vector>

#include "corrnet/errors.hpp"

namespace corrnet {

// Class-score vectors, probability vectors and gradients all live in this.
using Vector = std::vector<double>;

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    bool operator==(const Matrix& other) const = default;
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw DimensionError(msg);
}

}  // namespace corrnet

#endif  // CORRNET_TENSOR_HPP_
