#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hornets {

// Raised when operand shapes do not line up.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Raised on bad user-supplied data (labels out of range, non-binary input, ...).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Raised on invalid configuration values.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when training itself goes wrong (non-finite loss and friends).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

// Dense row-major matrix of doubles. Deliberately minimal: this project only
// needs products, row norms and row softmax at desk scale.
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

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
};

std::string shape_str(const Matrix& m);

// Standard dense product. Throws ShapeError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// Per-row p-norm, p >= 1. Zero rows give 0 (callers guard with epsilon).
std::vector<double> row_pnorm(const Matrix& x, double p);

// Row-wise softmax with max subtraction.
Matrix row_softmax(const Matrix& x);

}  // namespace hornets
