#include "hornets/matrix.hpp"

#include <cmath>

namespace hornets {

std::string shape_str(const Matrix& m) {
    return "(" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ")";
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: inner dimensions differ, " + shape_str(a) + " x " + shape_str(b));
    }
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

std::vector<double> row_pnorm(const Matrix& x, double p) {
    if (p < 1.0) throw ConfigError("row_pnorm: p must be >= 1, got " + std::to_string(p));
    std::vector<double> out(x.rows, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* r = x.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) acc += std::pow(std::abs(r[j]), p);
        out[i] = std::pow(acc, 1.0 / p);
    }
    return out;
}

Matrix row_softmax(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* r = x.row(i);
        double* o = out.row(i);
        double mx = r[0];
        for (std::size_t j = 1; j < x.cols; ++j) mx = std::max(mx, r[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            o[j] = std::exp(r[j] - mx);
            z += o[j];
        }
        for (std::size_t j = 0; j < x.cols; ++j) o[j] /= z;
    }
    return out;
}

}  // namespace hornets
