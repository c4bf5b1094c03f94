#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "lotos/common.hpp"

namespace lotos {

// Dense row-major matrix of 64-bit floats.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vector data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(const Vector& d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    static Matrix random_gaussian(std::size_t r, std::size_t c, Rng& rng, double stddev = 1.0) {
        Matrix m(r, c);
        for (auto& x : m.data) x = stddev * rng.gaussian();
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Vector apply(const Vector& x) const {
        if (x.size() != cols) throw ShapeError("Matrix::apply: dimension mismatch");
        Vector y(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            const double* row = &data[i * cols];
            for (std::size_t j = 0; j < cols; ++j) s += row[j] * x[j];
            y[i] = s;
        }
        return y;
    }

    Vector apply_transposed(const Vector& y) const {
        if (y.size() != rows) throw ShapeError("Matrix::apply_transposed: dimension mismatch");
        Vector x(cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            const double yi = y[i];
            const double* row = &data[i * cols];
            for (std::size_t j = 0; j < cols; ++j) x[j] += row[j] * yi;
        }
        return x;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double x : data) s += x * x;
        return std::sqrt(s);
    }

    bool finite() const { return all_finite(data); }
};

// A linear map exposed through apply / apply_adjoint only. Bias-free by
// construction; this is the object whose spectrum gets measured and clipped.
struct LinearOperator {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::function<Vector(const Vector&)> apply;
    std::function<Vector(const Vector&)> apply_adjoint;

    static LinearOperator from_matrix(const Matrix& m) {
        // captures a copy; callers that mutate the matrix should rebuild the view
        return LinearOperator{m.cols, m.rows,
                              [m](const Vector& x) { return m.apply(x); },
                              [m](const Vector& y) { return m.apply_transposed(y); }};
    }
};

// Full SVD: A = sum_i sigma_i u_i v_i^T, singular values sorted descending,
// u_i / v_i stored as columns of left_vectors / right_vectors.
struct SvdResult {
    Vector singular_values;
    Matrix left_vectors;
    Matrix right_vectors;

    Vector left(std::size_t i) const {
        Vector u(left_vectors.rows);
        for (std::size_t r = 0; r < left_vectors.rows; ++r) u[r] = left_vectors(r, i);
        return u;
    }
    Vector right(std::size_t i) const {
        Vector v(right_vectors.rows);
        for (std::size_t r = 0; r < right_vectors.rows; ++r) v[r] = right_vectors(r, i);
        return v;
    }
};

struct SingularTriple {
    double sigma = 0.0;
    Vector u;
    Vector v;
};

// Persistent top-k estimates maintained by warm-started power iteration.
struct SpectralState {
    std::size_t k = 0;
    std::vector<SingularTriple> triples;
    std::size_t stale_counter = 0;
};

struct PowerIterationResult {
    double sigma = 0.0;
    Vector u;
    Vector v;
    bool converged = false;
    std::size_t iterations = 0;
    double residual = 0.0;  // last relative change in the sigma estimate
};

struct PowerIterationOptions {
    std::size_t max_iters = 200;
    double tol = 1e-8;
    std::uint64_t seed = 1;  // used only when no warm start is given
};

// Brute-force full SVD by one-sided Jacobi. Independent of the power-iteration
// path so it can act as its oracle.
SvdResult svd_oracle(const Matrix& m);

PowerIterationResult power_iteration(const LinearOperator& op,
                                     const std::optional<Vector>& warm_start,
                                     const PowerIterationOptions& opts);

// Top-k triples via power iteration with deflation of sigma_i u_i v_i^T.
SpectralState deflated_topk(const LinearOperator& op, std::size_t k,
                            const PowerIterationOptions& opts);

}  // namespace lotos
