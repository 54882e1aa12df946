#pragma once
// Scalar normal-distribution functions, bivariate normal orthant
// probabilities, closed-form linear-Gaussian segment integrals, adaptive
// Gauss-Kronrod quadrature and bracketed root finding.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "trialopt/errors.hpp"

namespace trialopt::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Infinite integration limits are replaced by +-kTruncation before a
// numerical quadrature runs; normal tail mass beyond 8 is below 1e-15.
inline constexpr double kTruncation = 8.0;

struct Interval {
    double lo = -kInf;
    double hi = kInf;

    Interval() = default;
    Interval(double lo_, double hi_);

    bool empty() const noexcept { return !(lo < hi); }
    bool contains(double x) const noexcept { return lo <= x && x < hi; }
    Interval truncated(double bound = kTruncation) const;

    friend bool operator==(const Interval&, const Interval&) = default;
};

double std_normal_pdf(double x);
double std_normal_cdf(double x);
// Upper tail 1 - Phi(x), accurate for large x.
double std_normal_sf(double x);
// Phi^{-1}(p); throws DomainError unless 0 < p < 1.
double std_normal_quantile(double p);

// Phi(hi) - Phi(lo) without cancellation in either tail.
double std_normal_mass(double lo, double hi);

// P(Z1 > h, Z2 > k) for a standard bivariate normal with correlation rho.
// Infinite h or k are allowed.
double bivariate_upper_orthant(double h, double k, double rho);

// Integral over iv of (c0 + c1 z) phi(z) dz, in closed form. Infinite
// endpoints are handled exactly.
double linear_gaussian_segment(double c0, double c1, const Interval& iv);

// ---------------------------------------------------------------------------
// Adaptive quadrature

struct QuadratureOptions {
    double abs_tol = 1e-9;
    int max_subdivisions = 2000;
};

namespace detail {

// 15-point Kronrod rule with its embedded 7-point Gauss rule, on [-1, 1].
// Nodes are listed for x >= 0; index 0 is the centre.
struct GaussKronrod15 {
    static const std::array<double, 8>& nodes();
    static const std::array<double, 8>& kronrod_weights();
    // Gauss weights for the even-indexed Kronrod nodes (centre at index 0).
    static const std::array<double, 4>& gauss_weights();
};

template <std::size_t N>
struct Segment {
    double a, b;
    std::array<double, N> value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

template <std::size_t N, class F>
Segment<N> gk15(const F& f, double a, double b) {
    const auto& x = GaussKronrod15::nodes();
    const auto& wk = GaussKronrod15::kronrod_weights();
    const auto& wg = GaussKronrod15::gauss_weights();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    std::array<double, N> kron{}, gauss{};
    const std::array<double, N> fc = f(c);
    for (std::size_t j = 0; j < N; ++j) {
        kron[j] = wk[0] * fc[j];
        gauss[j] = wg[0] * fc[j];
    }
    for (std::size_t i = 1; i < 8; ++i) {
        const std::array<double, N> f1 = f(c - h * x[i]);
        const std::array<double, N> f2 = f(c + h * x[i]);
        for (std::size_t j = 0; j < N; ++j) {
            const double s = f1[j] + f2[j];
            kron[j] += wk[i] * s;
            if (i % 2 == 0) gauss[j] += wg[i / 2] * s;
        }
    }
    Segment<N> seg{a, b, {}, 0.0};
    for (std::size_t j = 0; j < N; ++j) {
        seg.value[j] = kron[j] * h;
        seg.error = std::max(seg.error, std::abs((kron[j] - gauss[j]) * h));
    }
    return seg;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration of a vector-valued integrand
// f: double -> std::array<double, N>. All components share one subdivision
// and the error criterion is the max-norm over components.
//
// Breakpoints strictly inside iv split the initial partition so that kinks
// and jumps of piecewise integrands never sit inside a panel. Infinite ends
// are truncated at +-kTruncation. Throws NumericError carrying the best
// estimate (first component) if the subdivision budget runs out.
template <std::size_t N, class F>
std::array<double, N> integrate_vector(const F& f, Interval iv, std::span<const double> breakpoints,
                                       const QuadratureOptions& opts = {}) {
    iv = iv.truncated();
    std::array<double, N> total{};
    if (iv.empty()) return total;

    std::vector<double> cuts{iv.lo};
    for (double bp : breakpoints) {
        if (std::isfinite(bp) && bp > iv.lo && bp < iv.hi) cuts.push_back(bp);
    }
    cuts.push_back(iv.hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<detail::Segment<N>> heap;
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto seg = detail::gk15<N>(f, cuts[i], cuts[i + 1]);
        error += seg.error;
        heap.push(seg);
    }

    int splits = 0;
    while (error > opts.abs_tol) {
        if (splits >= opts.max_subdivisions) {
            std::array<double, N> best{};
            while (!heap.empty()) {
                for (std::size_t j = 0; j < N; ++j) best[j] += heap.top().value[j];
                heap.pop();
            }
            throw NumericError("integrate: subdivision budget exhausted", best[0], error);
        }
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Panel cannot be split further in double precision; accept it.
            error -= worst.error;
            worst.error = 0.0;
            heap.push(worst);
            continue;
        }
        auto left = detail::gk15<N>(f, worst.a, mid);
        auto right = detail::gk15<N>(f, mid, worst.b);
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++splits;
    }

    while (!heap.empty()) {
        for (std::size_t j = 0; j < N; ++j) total[j] += heap.top().value[j];
        heap.pop();
    }
    return total;
}

// Scalar convenience wrapper around integrate_vector.
double integrate_1d(const std::function<double(double)>& f, const Interval& iv, double abs_tol,
                    std::span<const double> breakpoints = {});

// ---------------------------------------------------------------------------
// Root finding

// Bracketed bisection with secant steps. Returns x with |g(x)| <= tol or a
// final bracket no wider than tol. Throws DomainError when g(lo) and g(hi)
// have the same strict sign.
double find_root(const std::function<double(double)>& g, const Interval& bracket, double tol);

}  // namespace trialopt::numerics
