#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lotos {

using Vector = std::vector<double>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct MalformedFile : Error { using Error::Error; };
struct UnsupportedVersion : Error { using Error::Error; };

// Deterministic counter-based RNG. Same seed -> same stream on every platform;
// distributions below are implemented on raw bits so the stream never depends
// on the standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {
        // scramble so that small seeds do not produce correlated early output
        for (int i = 0; i < 4; ++i) next_u64();
    }

    std::uint64_t next_u64() {
        // xorshift64* generator
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545f4914f6cdd1dull;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one value per call, the pair partner is cached
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw InvalidInput("Rng::below: n must be positive");
        // rejection sampling to stay unbiased
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = 0;
        do { x = next_u64(); } while (x >= limit);
        return x % n;
    }

    Vector unit_vector(std::size_t dim) {
        Vector v(dim);
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (auto& x : v) {
                x = gaussian();
                norm2 += x * x;
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) x *= inv;
        return v;
    }

    // derive an independent stream (seed splitting for parallel users)
    Rng split(std::uint64_t salt) { return Rng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ull)); }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeError("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline void scale(Vector& v, double t) {
    for (auto& x : v) x *= t;
}

inline void axpy(double a, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw ShapeError("axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace lotos
