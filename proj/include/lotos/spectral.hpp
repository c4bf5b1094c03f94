#pragma once

#include "lotos/layers.hpp"

namespace lotos {

// Squared singular values of the circulant operator of a circular 1-D
// convolution, indexed by Fourier index j (unsorted).
struct CirculantSpectrum {
    std::size_t n = 0;
    Vector coeffs;  // autocorrelation coefficients c_0 .. c_{T-1}
    Vector values;  // s_j^2 for j = 0 .. n-1

    // sorted descending, ties broken by ascending Fourier index
    Vector sorted_singular_values() const;
    std::vector<std::size_t> sorted_fourier_indices() const;
};

// c_i = sum_t f_t f_{t+i}
Vector autocorrelation_coeffs(const ConvFilter& filter);

// s_j^2 = c_0 + 2 sum_{i>=1} c_i cos(2 pi j i / n); tiny negative round-off
// (> -1e-12) clamped to zero.
CirculantSpectrum circulant_spectrum(const ConvFilter& filter, std::size_t n);

// sigma_1^2 - sigma_p^2 <= pi |f|^2 T^2 p / n
double lemma_gap_bound(const ConvFilter& filter, std::size_t n, std::size_t p);

// sigma_j^2 - sigma_{j+p}^2 <= pi |f|^2 T^2 (p+1) / n
double corollary_gap_bound(const ConvFilter& filter, std::size_t n, std::size_t j, std::size_t p);

// sqrt(eps^2 + pi |f|^2 T^2 p / n)
double theorem_cross_bound(double eps, const ConvFilter& filter, std::size_t n, std::size_t p);

// Real orthonormal singular vector of a length-n circulant for Fourier index j
// (cosine branch for j < n-j, sine branch for j > n-j, constant / alternating
// at j = 0 and j = n/2).
Vector fourier_singular_vector(std::size_t j, std::size_t n);

struct BoundCheck {
    std::size_t p = 0;        // 1-based rank into B's sorted vectors, or gap offset
    double measured = 0.0;
    double bound = 0.0;
    bool holds = false;
};

struct BoundReport {
    double filter_norm_sq = 0.0;  // |f|_2^2 of filter_a
    std::size_t taps = 0;         // T of filter_a
    std::size_t n = 0;
    double eps = 0.0;  // |A v_1'|_2
    std::vector<BoundCheck> theorem_checks;    // |A v_p'| vs cross bound, all p
    std::vector<BoundCheck> lemma_checks;      // sigma_1^2 - sigma_p^2 vs bound, all p
    std::vector<BoundCheck> corollary_checks;  // worst-case over j for each offset p
    bool all_hold() const;
};

// Feeds filter_b's sorted singular vectors through filter_a's operator and
// checks the cross bound at every rank; also checks the gap bounds on
// filter_a's own sorted spectrum.
BoundReport verify_circulant_bounds(const ConvFilter& filter_a, const ConvFilter& filter_b,
                                    std::size_t n);

struct ClipReport {
    double sigma_before = 0.0;
    double sigma_after = 0.0;
    std::size_t rounds = 0;
    bool converged = false;
};

struct ClipOptions {
    double tol = 1e-2;
    std::size_t max_rounds = 50;
    PowerIterationOptions power;
};

// Projects the layer's spectral norm to at most C(1+tol). Dense layers get a
// rank-1 correction along the top pair; conv layers get a uniform rescale of
// the filter (a rank-1 update is not representable in T taps, and rescaling
// scales the whole circulant spectrum exactly). Layers already below C are
// left untouched. `state` carries the warm-started top estimate across calls.
ClipReport clip_spectral_norm(Layer& layer, double C, const ClipOptions& opts,
                              SpectralState* state = nullptr);

}  // namespace lotos
