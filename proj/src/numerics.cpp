#include "lotos/numerics.hpp"

#include <algorithm>
#include <numeric>

namespace lotos {

namespace {

// Gram-Schmidt completion for left vectors attached to zero singular values.
Vector orthonormal_complement(const std::vector<Vector>& basis, std::size_t dim,
                              std::size_t hint) {
    for (std::size_t attempt = 0; attempt < dim; ++attempt) {
        Vector cand(dim, 0.0);
        cand[(hint + attempt) % dim] = 1.0;
        for (const auto& b : basis) axpy(-dot(b, cand), b, cand);
        const double n = norm2(cand);
        if (n > 1e-8) {
            scale(cand, 1.0 / n);
            return cand;
        }
    }
    throw Error("orthonormal_complement: no direction found");
}

}  // namespace

SvdResult svd_oracle(const Matrix& input) {
    if (!input.finite()) throw InvalidInput("svd_oracle: non-finite input");
    if (input.rows == 0 || input.cols == 0) throw InvalidInput("svd_oracle: empty matrix");

    // one-sided Jacobi wants rows >= cols; work on the transpose otherwise
    const bool flipped = input.rows < input.cols;
    Matrix a = flipped ? input.transposed() : input;
    const std::size_t m = a.rows, n = a.cols;

    Matrix v = Matrix::identity(n);

    const double scale_ref = std::max(a.frobenius_norm(), 1e-300);
    const double tol = 1e-15 * scale_ref * scale_ref;
    const std::size_t max_sweeps = 60;

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double x = a(i, p), y = a(i, q);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if (std::abs(apq) <= 1e-14 * std::sqrt(app * aqq) + tol) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < m; ++i) {
                    const double x = a(i, p), y = a(i, q);
                    a(i, p) = c * x - s * y;
                    a(i, q) = s * x + c * y;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = v(i, p), y = v(i, q);
                    v(i, p) = c * x - s * y;
                    v(i, q) = s * x + c * y;
                }
            }
        }
        if (!rotated) break;
    }

    // singular values = column norms, left vectors = normalized columns
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Vector sigmas(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += a(i, j) * a(i, j);
        sigmas[j] = std::sqrt(s);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigmas[x] > sigmas[y]; });

    Matrix u_mat(m, n);
    Matrix v_mat(n, n);
    Vector sorted_sigma(n);
    std::vector<Vector> filled_lefts;
    for (std::size_t idx = 0; idx < n; ++idx) {
        const std::size_t j = order[idx];
        sorted_sigma[idx] = sigmas[j];
        Vector uj(m, 0.0);
        if (sigmas[j] > scale_ref * 1e-290 && sigmas[j] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) uj[i] = a(i, j) / sigmas[j];
        } else {
            sorted_sigma[idx] = 0.0;
            uj = orthonormal_complement(filled_lefts, m, idx);
        }
        filled_lefts.push_back(uj);
        for (std::size_t i = 0; i < m; ++i) u_mat(i, idx) = uj[i];
        for (std::size_t i = 0; i < n; ++i) v_mat(i, idx) = v(i, j);
    }

    SvdResult result;
    result.singular_values = std::move(sorted_sigma);
    if (flipped) {
        result.left_vectors = std::move(v_mat);
        result.right_vectors = std::move(u_mat);
    } else {
        result.left_vectors = std::move(u_mat);
        result.right_vectors = std::move(v_mat);
    }
    return result;
}

PowerIterationResult power_iteration(const LinearOperator& op,
                                     const std::optional<Vector>& warm_start,
                                     const PowerIterationOptions& opts) {
    if (opts.tol <= 0.0) throw InvalidInput("power_iteration: tol must be positive");
    if (op.in_dim == 0 || op.out_dim == 0) throw InvalidInput("power_iteration: empty operator");

    PowerIterationResult res;
    Vector v;
    if (warm_start && warm_start->size() == op.in_dim && norm2(*warm_start) > 0.0) {
        v = *warm_start;
    } else {
        Rng rng(opts.seed);
        v = rng.unit_vector(op.in_dim);
    }
    scale(v, 1.0 / norm2(v));

    double sigma_prev = -1.0;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
        Vector u = op.apply(v);
        const double sigma = norm2(u);
        res.iterations = it + 1;
        if (sigma == 0.0) {
            // operator annihilates v; top value is zero along this direction
            res.sigma = 0.0;
            res.u = Vector(op.out_dim, 0.0);
            res.u[0] = 1.0;
            res.v = v;
            res.converged = true;
            res.residual = 0.0;
            return res;
        }
        scale(u, 1.0 / sigma);
        Vector w = op.apply_adjoint(u);
        const double wn = norm2(w);
        if (wn > 0.0) {
            v = std::move(w);
            scale(v, 1.0 / wn);
        }
        res.sigma = sigma;
        res.u = std::move(u);
        res.v = v;
        const double rel = std::abs(sigma - sigma_prev) / std::max(sigma, 1e-300);
        res.residual = rel;
        if (sigma_prev >= 0.0 && rel < opts.tol) {
            // one confirmation pass so sigma reflects the final v
            Vector confirm = op.apply(v);
            res.sigma = norm2(confirm);
            if (res.sigma > 0.0) {
                scale(confirm, 1.0 / res.sigma);
                res.u = std::move(confirm);
            }
            res.converged = true;
            return res;
        }
        sigma_prev = sigma;
    }
    res.converged = false;
    return res;
}

SpectralState deflated_topk(const LinearOperator& op, std::size_t k,
                            const PowerIterationOptions& opts) {
    if (k > std::min(op.in_dim, op.out_dim))
        throw InvalidInput("deflated_topk: k exceeds operator dimensions");

    SpectralState state;
    state.k = k;
    for (std::size_t i = 0; i < k; ++i) {
        // deflate the already-found triples out of the operator action
        const auto& found = state.triples;
        LinearOperator deflated{
            op.in_dim, op.out_dim,
            [&op, &found](const Vector& x) {
                Vector y = op.apply(x);
                for (const auto& t : found) axpy(-t.sigma * dot(t.v, x), t.u, y);
                return y;
            },
            [&op, &found](const Vector& y) {
                Vector x = op.apply_adjoint(y);
                for (const auto& t : found) axpy(-t.sigma * dot(t.u, y), t.v, x);
                return x;
            }};
        PowerIterationOptions o = opts;
        o.seed = opts.seed + i;
        auto r = power_iteration(deflated, std::nullopt, o);
        // re-orthogonalize against previous right vectors to curb drift
        for (const auto& t : state.triples) axpy(-dot(t.v, r.v), t.v, r.v);
        const double vn = norm2(r.v);
        if (vn > 0.0) scale(r.v, 1.0 / vn);
        state.triples.push_back({r.sigma, std::move(r.u), std::move(r.v)});
    }
    return state;
}

}  // namespace lotos
