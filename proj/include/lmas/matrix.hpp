#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lmas/errors.hpp"

namespace lmas {

/// Dense row-major matrix. The element type tags the precision
/// (float or double); every module in the engine stores its weights
/// and activations in one of these two instantiations.
template <class T>
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<T> data; // rows * cols, row-major

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, T(0)) {}
    Matrix(size_t r, size_t c, std::vector<T> values);

    static Matrix identity(size_t n);

    // Validating constructor for matrices arriving from files, JSON, or
    // bindings. Rejects shape/length mismatches and non-finite entries.
    static Matrix from_external(size_t r, size_t c, std::vector<T> values);

    T& at(size_t r, size_t c) { return data[r * cols + c]; }
    const T& at(size_t r, size_t c) const { return data[r * cols + c]; }

    std::span<const T> row(size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<T> row(size_t r) { return {data.data() + r * cols, cols}; }

    bool all_finite() const;

    template <class U>
    Matrix<U> cast() const {
        Matrix<U> out(rows, cols);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    bool operator==(const Matrix&) const = default;
};

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

template <class T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b);

/// a * transpose(b); avoids materializing the transpose.
template <class T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b);

/// transpose(a) * b.
template <class T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b);

template <class T>
Matrix<T> transpose(const Matrix<T>& a);

/// sqrt of the sum of squared entries, accumulated in double.
template <class T>
double frobenius_norm(const Matrix<T>& m);

/// Solves A * X = B for symmetric positive-definite A via Cholesky
/// factorization. Throws ShapeMismatch on dimension violations (including
/// asymmetry beyond 1e-9 relative) and NotSPD when a pivot is not positive.
template <class T>
Matrix<T> solve_spd(const Matrix<T>& a, const Matrix<T>& b);

} // namespace lmas
