#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "lotos/numerics.hpp"

using namespace lotos;

namespace {

// Independent oracle for the oracle: eigendecomposition of the Gram matrix
// A^T A by cyclic Jacobi rotations; singular values are the root eigenvalues.
Vector gram_singular_values(const Matrix& a) {
    const std::size_t n = a.cols;
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < a.rows; ++r) s += a(r, i) * a(r, j);
            g(i, j) = s;
        }
    for (std::size_t sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += g(p, q) * g(p, q);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(g(p, q)) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * g(p, q), g(q, q) - g(p, p));
                const double c = std::cos(theta), s = std::sin(theta);
                for (std::size_t i = 0; i < n; ++i) {
                    const double gip = g(i, p), giq = g(i, q);
                    g(i, p) = c * gip - s * giq;
                    g(i, q) = s * gip + c * giq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double gpi = g(p, i), gqi = g(q, i);
                    g(p, i) = c * gpi - s * gqi;
                    g(q, i) = s * gpi + c * gqi;
                }
            }
    }
    Vector ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = std::sqrt(std::max(g(i, i), 0.0));
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

Matrix seeded_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    return Matrix::random_gaussian(r, c, rng);
}

}  // namespace

TEST_CASE("svd_oracle on diagonal and zero matrices") {
    auto d = svd_oracle(Matrix::diagonal({3.0, 1.0}));
    CHECK(d.singular_values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(d.singular_values[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(d.left(0)[0]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(d.right(0)[0]) == doctest::Approx(1.0).epsilon(1e-12));

    auto z = svd_oracle(Matrix(2, 2));
    CHECK(z.singular_values[0] == 0.0);
    CHECK(z.singular_values[1] == 0.0);
    CHECK(norm2(z.left(0)) == doctest::Approx(1.0));
    CHECK(norm2(z.right(1)) == doctest::Approx(1.0));
}

TEST_CASE("svd_oracle cross-checked against Gram eigendecomposition") {
    for (std::uint64_t seed : {5u, 6u, 7u}) {
        const Matrix m = seeded_matrix(5, 5, seed);
        const auto svd = svd_oracle(m);
        const auto ref = gram_singular_values(m);
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(svd.singular_values[i] ==
                  doctest::Approx(ref[i]).epsilon(1e-10));
    }
}

TEST_CASE("svd_oracle reconstruction and unit vectors") {
    const Matrix m = seeded_matrix(6, 4, 11);
    const auto svd = svd_oracle(m);
    const std::size_t k = svd.singular_values.size();
    Matrix rec(m.rows, m.cols);
    for (std::size_t i = 0; i < k; ++i) {
        CHECK(norm2(svd.left(i)) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(norm2(svd.right(i)) == doctest::Approx(1.0).epsilon(1e-10));
        const auto u = svd.left(i);
        const auto v = svd.right(i);
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t c = 0; c < m.cols; ++c)
                rec(r, c) += svd.singular_values[i] * u[r] * v[c];
    }
    double diff = 0.0;
    for (std::size_t idx = 0; idx < m.data.size(); ++idx)
        diff += (rec.data[idx] - m.data[idx]) * (rec.data[idx] - m.data[idx]);
    CHECK(std::sqrt(diff) / m.frobenius_norm() < 1e-8);
}

TEST_CASE("svd_oracle transpose invariance") {
    for (std::uint64_t seed : {21u, 22u, 23u, 24u}) {
        const Matrix m = seeded_matrix(7, 4, seed);
        const auto a = svd_oracle(m).singular_values;
        const auto b = svd_oracle(m.transposed()).singular_values;
        for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
    }
}

TEST_CASE("svd_oracle rejects non-finite input") {
    Matrix m(2, 2);
    m(0, 0) = std::nan("");
    CHECK_THROWS_AS(svd_oracle(m), InvalidInput);
}

TEST_CASE("power_iteration on diag(3,1)") {
    const auto op = LinearOperator::from_matrix(Matrix::diagonal({3.0, 1.0}));
    auto r = power_iteration(op, std::nullopt, {.max_iters = 200, .tol = 1e-8});
    CHECK(r.converged);
    CHECK(r.sigma == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(std::abs(r.v[0]) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("power_iteration on a rank-1 operator") {
    // u v^T with |u| = 2, |v| = 1 has spectral norm 2
    Matrix m(3, 2);
    const Vector u = {2.0, 0.0, 0.0};
    const Vector v = {0.6, 0.8};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) m(i, j) = u[i] * v[j];
    auto r = power_iteration(LinearOperator::from_matrix(m), std::nullopt,
                             {.max_iters = 200, .tol = 1e-10});
    CHECK(r.sigma == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("power_iteration matches the oracle on random matrices") {
    for (std::uint64_t seed : {31u, 32u, 33u, 34u, 35u}) {
        const Matrix m = seeded_matrix(8, 8, seed);
        const auto oracle = svd_oracle(m);
        auto r = power_iteration(LinearOperator::from_matrix(m), std::nullopt,
                                 {.max_iters = 2000, .tol = 1e-10});
        CHECK(r.sigma == doctest::Approx(oracle.singular_values[0]).epsilon(1e-6));
        // never overestimates beyond tolerance
        CHECK(r.sigma <= oracle.singular_values[0] * (1.0 + 1e-6));
    }
}

TEST_CASE("power_iteration warm start is the attractor") {
    const Matrix m = seeded_matrix(8, 8, 77);
    auto cold = power_iteration(LinearOperator::from_matrix(m), std::nullopt,
                                {.max_iters = 2000, .tol = 1e-10});
    auto warm = power_iteration(LinearOperator::from_matrix(m), cold.v,
                                {.max_iters = 2000, .tol = 1e-10});
    CHECK(warm.iterations <= 3);
    CHECK(warm.sigma == doctest::Approx(cold.sigma).epsilon(1e-9));
}

TEST_CASE("power_iteration reports non-convergence with the last estimate") {
    const Matrix m = seeded_matrix(12, 12, 99);
    auto r = power_iteration(LinearOperator::from_matrix(m), std::nullopt,
                             {.max_iters = 1, .tol = 1e-14});
    CHECK_FALSE(r.converged);
    CHECK(r.sigma > 0.0);
    CHECK(r.iterations == 1);
}

TEST_CASE("deflated_topk on diag(3,2,1)") {
    const auto op = LinearOperator::from_matrix(Matrix::diagonal({3.0, 2.0, 1.0}));
    auto s = deflated_topk(op, 2, {.max_iters = 500, .tol = 1e-10});
    REQUIRE(s.triples.size() == 2);
    CHECK(s.triples[0].sigma == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(s.triples[1].sigma == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(std::abs(s.triples[0].v[0]) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(s.triples[1].v[1]) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("deflated_topk with k=1 reduces to power_iteration") {
    const Matrix m = seeded_matrix(6, 6, 42);
    const auto op = LinearOperator::from_matrix(m);
    auto s = deflated_topk(op, 1, {.max_iters = 1000, .tol = 1e-10, .seed = 1});
    auto p = power_iteration(op, std::nullopt, {.max_iters = 1000, .tol = 1e-10, .seed = 1});
    CHECK(s.triples[0].sigma == doctest::Approx(p.sigma).epsilon(1e-12));
}

TEST_CASE("deflated_topk matches the oracle and keeps right vectors orthogonal") {
    for (std::uint64_t seed : {51u, 52u, 53u}) {
        const Matrix m = seeded_matrix(10, 10, seed);
        const auto oracle = svd_oracle(m);
        auto s = deflated_topk(LinearOperator::from_matrix(m), 3,
                               {.max_iters = 5000, .tol = 1e-11});
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(s.triples[i].sigma ==
                  doctest::Approx(oracle.singular_values[i]).epsilon(1e-6));
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i + 1; j < 3; ++j)
                CHECK(std::abs(dot(s.triples[i].v, s.triples[j].v)) < 1e-6);
    }
}

TEST_CASE("rng determinism: same seed, same stream") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(12345), d(54321);
    bool differs = false;
    for (int i = 0; i < 10; ++i) differs |= (c.next_u64() != d.next_u64());
    CHECK(differs);
}

TEST_CASE("power_iteration determinism with fixed seed") {
    const Matrix m = seeded_matrix(9, 9, 13);
    auto r1 = power_iteration(LinearOperator::from_matrix(m), std::nullopt,
                              {.max_iters = 300, .tol = 1e-9, .seed = 7});
    auto r2 = power_iteration(LinearOperator::from_matrix(m), std::nullopt,
                              {.max_iters = 300, .tol = 1e-9, .seed = 7});
    CHECK(r1.sigma == r2.sigma);
    CHECK(r1.v == r2.v);
}
