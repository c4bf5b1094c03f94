#include "lotos/spectral.hpp"

#include <algorithm>
#include <numeric>

namespace lotos {

Vector autocorrelation_coeffs(const ConvFilter& filter) {
    const std::size_t T = filter.length();
    if (T == 0) throw InvalidInput("autocorrelation_coeffs: empty filter");
    Vector c(T, 0.0);
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t t = 0; t + i < T; ++t) c[i] += filter.taps[t] * filter.taps[t + i];
    return c;
}

CirculantSpectrum circulant_spectrum(const ConvFilter& filter, std::size_t n) {
    if (filter.length() > n) throw InvalidInput("circulant_spectrum: filter longer than input");
    CirculantSpectrum spec;
    spec.n = n;
    spec.coeffs = autocorrelation_coeffs(filter);
    spec.values.assign(n, 0.0);
    const std::size_t T = filter.length();
    for (std::size_t j = 0; j < n; ++j) {
        double s = spec.coeffs[0];
        for (std::size_t i = 1; i < T; ++i) {
            // reduce the angle to its minimal representative so conjugate
            // indices j and n-j produce bitwise-equal values
            std::size_t m = (j * i) % n;
            m = std::min(m, n - m);
            s += 2.0 * spec.coeffs[i] * std::cos(2.0 * M_PI * static_cast<double>(m) / n);
        }
        if (s < 0.0 && s >= -1e-12) s = 0.0;
        spec.values[j] = s;
    }
    return spec;
}

std::vector<std::size_t> CirculantSpectrum::sorted_fourier_indices() const {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });
    return order;
}

Vector CirculantSpectrum::sorted_singular_values() const {
    Vector out(n);
    const auto order = sorted_fourier_indices();
    for (std::size_t r = 0; r < n; ++r) out[r] = std::sqrt(std::max(values[order[r]], 0.0));
    return out;
}

double lemma_gap_bound(const ConvFilter& filter, std::size_t n, std::size_t p) {
    const double c0 = dot(filter.taps, filter.taps);
    const double T = static_cast<double>(filter.length());
    return M_PI * c0 * T * T * static_cast<double>(p) / static_cast<double>(n);
}

double corollary_gap_bound(const ConvFilter& filter, std::size_t n, std::size_t j, std::size_t p) {
    if (j < 1 || j + p > n) throw InvalidInput("corollary_gap_bound: index out of range");
    const double c0 = dot(filter.taps, filter.taps);
    const double T = static_cast<double>(filter.length());
    return M_PI * c0 * T * T * static_cast<double>(p + 1) / static_cast<double>(n);
}

double theorem_cross_bound(double eps, const ConvFilter& filter, std::size_t n, std::size_t p) {
    if (eps < 0.0) throw InvalidInput("theorem_cross_bound: eps must be non-negative");
    const double c0 = dot(filter.taps, filter.taps);
    const double T = static_cast<double>(filter.length());
    return std::sqrt(eps * eps + M_PI * c0 * T * T * static_cast<double>(p) / static_cast<double>(n));
}

Vector fourier_singular_vector(std::size_t j, std::size_t n) {
    if (j >= n) throw InvalidInput("fourier_singular_vector: index out of range");
    Vector v(n);
    if (j == 0) {
        const double a = 1.0 / std::sqrt(static_cast<double>(n));
        std::fill(v.begin(), v.end(), a);
    } else if (n % 2 == 0 && j == n / 2) {
        const double a = 1.0 / std::sqrt(static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) v[i] = (i % 2 == 0) ? a : -a;
    } else {
        const double a = std::sqrt(2.0 / static_cast<double>(n));
        if (j < n - j) {
            for (std::size_t i = 0; i < n; ++i)
                v[i] = a * std::cos(2.0 * M_PI * static_cast<double>(j * i) / n);
        } else {
            const std::size_t freq = n - j;
            for (std::size_t i = 0; i < n; ++i)
                v[i] = a * std::sin(2.0 * M_PI * static_cast<double>(freq * i) / n);
        }
    }
    return v;
}

bool BoundReport::all_hold() const {
    auto ok = [](const std::vector<BoundCheck>& cs) {
        return std::all_of(cs.begin(), cs.end(), [](const BoundCheck& c) { return c.holds; });
    };
    return ok(theorem_checks) && ok(lemma_checks) && ok(corollary_checks);
}

BoundReport verify_circulant_bounds(const ConvFilter& filter_a, const ConvFilter& filter_b,
                                    std::size_t n) {
    if (filter_a.length() > n || filter_b.length() > n)
        throw InvalidInput("verify_circulant_bounds: filter longer than input");

    BoundReport report;
    report.filter_norm_sq = dot(filter_a.taps, filter_a.taps);
    report.taps = filter_a.length();
    report.n = n;

    const Layer a_layer = Conv1dCircular{filter_a, n, std::nullopt};
    const Matrix a = materialize_operator(a_layer);

    // B's singular vectors, ordered by its sorted spectrum
    const auto spec_b = circulant_spectrum(filter_b, n);
    const auto order_b = spec_b.sorted_fourier_indices();

    const double slack = 1e-9;
    Vector av1;
    for (std::size_t rank = 0; rank < n; ++rank) {
        const Vector vp = fourier_singular_vector(order_b[rank], n);
        const double measured = norm2(a.apply(vp));
        if (rank == 0) report.eps = measured;
        BoundCheck check;
        check.p = rank + 1;
        check.measured = measured;
        check.bound = theorem_cross_bound(report.eps, filter_a, n, rank + 1);
        check.holds = measured <= check.bound + slack;
        report.theorem_checks.push_back(check);
    }

    // gap bounds on A's own sorted spectrum
    const auto spec_a = circulant_spectrum(filter_a, n);
    Vector sorted_sq(n);
    {
        const auto order_a = spec_a.sorted_fourier_indices();
        for (std::size_t r = 0; r < n; ++r) sorted_sq[r] = std::max(spec_a.values[order_a[r]], 0.0);
    }
    for (std::size_t p = 1; p <= n; ++p) {
        BoundCheck check;
        check.p = p;
        check.measured = sorted_sq[0] - sorted_sq[p - 1];
        check.bound = lemma_gap_bound(filter_a, n, p);
        check.holds = check.measured <= check.bound + slack;
        report.lemma_checks.push_back(check);
    }
    for (std::size_t p = 0; p < n; ++p) {
        // worst starting rank j for this offset
        BoundCheck check;
        check.p = p;
        check.bound = corollary_gap_bound(filter_a, n, 1, p);
        double worst = 0.0;
        for (std::size_t j = 1; j + p <= n; ++j)
            worst = std::max(worst, sorted_sq[j - 1] - sorted_sq[j + p - 1]);
        check.measured = worst;
        check.holds = worst <= check.bound + slack;
        report.corollary_checks.push_back(check);
    }
    return report;
}

ClipReport clip_spectral_norm(Layer& layer, double C, const ClipOptions& opts,
                              SpectralState* state) {
    if (C <= 0.0) throw InvalidInput("clip_spectral_norm: C must be positive");

    ClipReport report;
    // The compliance decision must be a pure function of the layer parameters,
    // otherwise a second clip of an already-clipped layer can measure sigma
    // differently near clustered singular values and re-apply surgery. A cold
    // seeded power iteration gives that; the threshold sits slightly inside
    // C(1+tol) to absorb the residual estimate error near ties.
    const double decide_limit = C * (1.0 + 0.99 * opts.tol);
    PowerIterationOptions decide = opts.power;
    decide.tol = std::min(decide.tol, 1e-10);
    decide.max_iters = std::max<std::size_t>(decide.max_iters, 5000);

    for (std::size_t round = 0; round <= opts.max_rounds; ++round) {
        auto top = power_iteration(as_operator(layer), std::nullopt, decide);
        if (round == 0) report.sigma_before = top.sigma;
        report.sigma_after = top.sigma;
        report.rounds = round;
        if (top.sigma <= decide_limit) {
            report.converged = true;
            break;
        }
        if (round == opts.max_rounds) break;  // non-convergence: report carries the estimate
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            // W <- W + (C - sigma) u v^T: moves only the top direction
            const double delta = C - top.sigma;
            for (std::size_t i = 0; i < d->weights.rows; ++i)
                for (std::size_t j = 0; j < d->weights.cols; ++j)
                    d->weights(i, j) += delta * top.u[i] * top.v[j];
        } else if (auto* c = std::get_if<Conv1dCircular>(&layer)) {
            // rescaling shifts the whole circulant spectrum exactly
            if (top.sigma > 0.0) scale(c->filter.taps, C / top.sigma);
        } else {
            auto& c2 = std::get<Conv2dLayer>(layer);
            if (top.sigma > 0.0) scale(c2.kernel, C / top.sigma);
        }
    }

    if (state) {
        // refresh only the top triple; deeper triples go stale until the next
        // full re-convergence by the owner
        std::optional<Vector> warm;
        if (!state->triples.empty() && state->triples[0].v.size() == layer_in_dim(layer))
            warm = state->triples[0].v;
        auto top = power_iteration(as_operator(layer), warm, opts.power);
        state->k = std::max<std::size_t>(state->k, 1);
        if (state->triples.empty())
            state->triples.push_back({top.sigma, top.u, top.v});
        else
            state->triples[0] = {top.sigma, top.u, top.v};
    }
    return report;
}

}  // namespace lotos
