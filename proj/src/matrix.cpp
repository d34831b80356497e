#include "lmas/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lmas {

template <class T>
Matrix<T>::Matrix(size_t r, size_t c, std::vector<T> values) : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols)
        throw ShapeMismatch("matrix data length " + std::to_string(data.size()) + " != " +
                            std::to_string(rows) + "x" + std::to_string(cols));
}

template <class T>
Matrix<T> Matrix<T>::identity(size_t n) {
    Matrix m(n, n);
    for (size_t i = 0; i < n; ++i) m.at(i, i) = T(1);
    return m;
}

template <class T>
Matrix<T> Matrix<T>::from_external(size_t r, size_t c, std::vector<T> values) {
    Matrix m(r, c, std::move(values));
    if (!m.all_finite()) throw InvalidArgument("matrix contains non-finite entries");
    return m;
}

template <class T>
bool Matrix<T>::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
}

template <class T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols != b.rows)
        throw ShapeMismatch("matmul: " + std::to_string(a.cols) + " != " + std::to_string(b.rows));
    Matrix<T> out(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        for (size_t k = 0; k < a.cols; ++k) {
            const T aik = a.at(i, k);
            if (aik == T(0)) continue;
            const T* brow = b.data.data() + k * b.cols;
            T* orow = out.data.data() + i * out.cols;
            for (size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

template <class T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols != b.cols)
        throw ShapeMismatch("matmul_nt: inner dims " + std::to_string(a.cols) + " != " + std::to_string(b.cols));
    Matrix<T> out(a.rows, b.rows);
    for (size_t i = 0; i < a.rows; ++i) {
        for (size_t j = 0; j < b.rows; ++j) {
            T acc = 0;
            const T* ar = a.data.data() + i * a.cols;
            const T* br = b.data.data() + j * b.cols;
            for (size_t k = 0; k < a.cols; ++k) acc += ar[k] * br[k];
            out.at(i, j) = acc;
        }
    }
    return out;
}

template <class T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows != b.rows)
        throw ShapeMismatch("matmul_tn: inner dims " + std::to_string(a.rows) + " != " + std::to_string(b.rows));
    Matrix<T> out(a.cols, b.cols);
    for (size_t k = 0; k < a.rows; ++k) {
        const T* ar = a.data.data() + k * a.cols;
        const T* br = b.data.data() + k * b.cols;
        for (size_t i = 0; i < a.cols; ++i) {
            const T aki = ar[i];
            if (aki == T(0)) continue;
            T* orow = out.data.data() + i * out.cols;
            for (size_t j = 0; j < b.cols; ++j) orow[j] += aki * br[j];
        }
    }
    return out;
}

template <class T>
Matrix<T> transpose(const Matrix<T>& a) {
    Matrix<T> out(a.cols, a.rows);
    for (size_t i = 0; i < a.rows; ++i)
        for (size_t j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

template <class T>
double frobenius_norm(const Matrix<T>& m) {
    double acc = 0;
    for (T v : m.data) acc += double(v) * double(v);
    return std::sqrt(acc);
}

template <class T>
Matrix<T> solve_spd(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows != a.cols) throw ShapeMismatch("solve_spd: A must be square");
    if (a.rows != b.rows) throw ShapeMismatch("solve_spd: A and B row counts differ");
    const size_t n = a.rows;

    double max_abs = 0;
    for (T v : a.data) max_abs = std::max(max_abs, std::abs(double(v)));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (std::abs(double(a.at(i, j)) - double(a.at(j, i))) > 1e-9 * std::max(1.0, max_abs))
                throw ShapeMismatch("solve_spd: A is not symmetric");

    // Lower-triangular Cholesky factor, accumulated in double.
    std::vector<double> l(n * n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double acc = double(a.at(i, j));
            for (size_t k = 0; k < j; ++k) acc -= l[i * n + k] * l[j * n + k];
            if (i == j) {
                if (acc <= 0.0) throw NotSPD("solve_spd: non-positive pivot at row " + std::to_string(i));
                l[i * n + i] = std::sqrt(acc);
            } else {
                l[i * n + j] = acc / l[j * n + j];
            }
        }
    }

    // Forward/back substitution per right-hand-side column.
    Matrix<T> x(n, b.cols);
    std::vector<double> y(n), xc(n);
    for (size_t c = 0; c < b.cols; ++c) {
        for (size_t i = 0; i < n; ++i) {
            double acc = double(b.at(i, c));
            for (size_t k = 0; k < i; ++k) acc -= l[i * n + k] * y[k];
            y[i] = acc / l[i * n + i];
        }
        for (size_t ii = n; ii-- > 0;) {
            double acc = y[ii];
            for (size_t k = ii + 1; k < n; ++k) acc -= l[k * n + ii] * xc[k];
            xc[ii] = acc / l[ii * n + ii];
        }
        for (size_t i = 0; i < n; ++i) x.at(i, c) = T(xc[i]);
    }
    return x;
}

template struct Matrix<float>;
template struct Matrix<double>;

template Matrix<float> matmul(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> matmul(const Matrix<double>&, const Matrix<double>&);
template Matrix<float> matmul_nt(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> matmul_nt(const Matrix<double>&, const Matrix<double>&);
template Matrix<float> matmul_tn(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> matmul_tn(const Matrix<double>&, const Matrix<double>&);
template Matrix<float> transpose(const Matrix<float>&);
template Matrix<double> transpose(const Matrix<double>&);
template double frobenius_norm(const Matrix<float>&);
template double frobenius_norm(const Matrix<double>&);
template Matrix<float> solve_spd(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> solve_spd(const Matrix<double>&, const Matrix<double>&);

} // namespace lmas
