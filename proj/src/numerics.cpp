#include "trialopt/numerics.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <numbers>

namespace trialopt::numerics {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
        throw DomainError("interval: requires lo <= hi");
    }
}

Interval Interval::truncated(double bound) const {
    Interval out;
    out.lo = std::clamp(lo, -bound, bound);
    out.hi = std::clamp(hi, -bound, bound);
    return out;
}

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double std_normal_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double std_normal_mass(double lo, double hi) {
    if (!(lo < hi)) return 0.0;
    if (lo >= 0.0) return std_normal_sf(lo) - std_normal_sf(hi);
    if (hi <= 0.0) return std_normal_cdf(hi) - std_normal_cdf(lo);
    return 1.0 - std_normal_cdf(lo) - std_normal_sf(hi);
}

// Genz's BVNU: Drezner-Wesolowsky style Gauss-Legendre integration of the
// Plackett derivative for |rho| < 0.925, and a tail expansion around
// |rho| = 1 otherwise. Double-precision accuracy across the whole domain.
double bivariate_upper_orthant(double h, double k, double rho) {
    if (std::isnan(h) || std::isnan(k) || !(std::abs(rho) <= 1.0)) {
        throw DomainError("bivariate_upper_orthant: requires |rho| <= 1");
    }
    if (h == kInf || k == kInf) return 0.0;
    if (h == -kInf) return k == -kInf ? 1.0 : std_normal_sf(k);
    if (k == -kInf) return std_normal_sf(h);

    // Half of the symmetric Gauss-Legendre rule, nodes on (0, 1).
    static constexpr std::array<double, 3> w6 = {0.1713244923791705, 0.3607615730481384,
                                                 0.4679139345726904};
    static constexpr std::array<double, 3> x6 = {0.9324695142031522, 0.6612093864662647,
                                                 0.2386191860831970};
    static constexpr std::array<double, 6> w12 = {0.04717533638651177, 0.1069393259953183,
                                                  0.1600783285433464,  0.2031674267230659,
                                                  0.2334925365383547,  0.2491470458134029};
    static constexpr std::array<double, 6> x12 = {0.9815606342467191, 0.9041172563704750,
                                                  0.7699026741943050, 0.5873179542866171,
                                                  0.3678314989981802, 0.1252334085114692};
    static constexpr std::array<double, 10> w20 = {
        0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
        0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
        0.1491729864726037,  0.1527533871307259};
    static constexpr std::array<double, 10> x20 = {
        0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
        0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
        0.2277858511416451, 0.07652652113349733};

    std::span<const double> w, x;
    if (std::abs(rho) < 0.3) {
        w = w6;
        x = x6;
    } else if (std::abs(rho) < 0.75) {
        w = w12;
        x = x12;
    } else {
        w = w20;
        x = x20;
    }

    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(rho) < 0.925) {
        const double hs = 0.5 * (h * h + k * k);
        const double asr = 0.5 * std::asin(rho);
        for (std::size_t i = 0; i < w.size(); ++i) {
            for (double node : {1.0 - x[i], 1.0 + x[i]}) {
                const double sn = std::sin(asr * node);
                bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        bvn = bvn * asr / kTwoPi + std_normal_sf(h) * std_normal_sf(k);
        return std::clamp(bvn, 0.0, 1.0);
    }

    if (rho < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(rho) < 1.0) {
        const double as = (1.0 - rho) * (1.0 + rho);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 80.0;
        double asr = -0.5 * (bs / as + hk);
        if (asr > -100.0) {
            bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
        }
        if (hk > -100.0) {
            const double b = std::sqrt(bs);
            const double sp = std::sqrt(kTwoPi) * std_normal_cdf(-b / a);
            bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
        }
        a *= 0.5;
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            for (double node : {1.0 - x[i], 1.0 + x[i]}) {
                const double xs = (a * node) * (a * node);
                asr = -0.5 * (bs / xs + hk);
                if (asr <= -100.0) continue;
                const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                const double rs = std::sqrt(1.0 - xs);
                const double ep = std::exp(-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
                sum += w[i] * std::exp(asr) * (sp - ep);
            }
        }
        bvn = (a * sum - bvn) / kTwoPi;
    }
    if (rho > 0.0) {
        bvn += std_normal_sf(std::max(h, k));
    } else if (h >= k) {
        bvn = -bvn;
    } else {
        const double l = h < 0.0 ? std_normal_cdf(k) - std_normal_cdf(h)
                                 : std_normal_sf(h) - std_normal_sf(k);
        bvn = l - bvn;
    }
    return std::clamp(bvn, 0.0, 1.0);
}

double linear_gaussian_segment(double c0, double c1, const Interval& iv) {
    if (iv.empty()) return 0.0;
    const double mass = std_normal_mass(iv.lo, iv.hi);
    const double pdf_lo = std::isfinite(iv.lo) ? std_normal_pdf(iv.lo) : 0.0;
    const double pdf_hi = std::isfinite(iv.hi) ? std_normal_pdf(iv.hi) : 0.0;
    return c0 * mass + c1 * (pdf_lo - pdf_hi);
}

namespace detail {

const std::array<double, 8>& GaussKronrod15::nodes() {
    return boost::math::quadrature::gauss_kronrod<double, 15>::abscissa();
}

const std::array<double, 8>& GaussKronrod15::kronrod_weights() {
    return boost::math::quadrature::gauss_kronrod<double, 15>::weights();
}

const std::array<double, 4>& GaussKronrod15::gauss_weights() {
    return boost::math::quadrature::gauss<double, 7>::weights();
}

}  // namespace detail

double integrate_1d(const std::function<double(double)>& f, const Interval& iv, double abs_tol,
                    std::span<const double> breakpoints) {
    auto wrapped = [&f](double x) { return std::array<double, 1>{f(x)}; };
    QuadratureOptions opts;
    opts.abs_tol = abs_tol;
    return integrate_vector<1>(wrapped, iv, breakpoints, opts)[0];
}

double find_root(const std::function<double(double)>& g, const Interval& bracket, double tol) {
    double a = bracket.lo;
    double b = bracket.hi;
    if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("find_root: bracket must be finite");
    double fa = g(a);
    double fb = g(b);
    if (std::abs(fa) <= tol) return a;
    if (std::abs(fb) <= tol) return b;
    if ((fa > 0.0) == (fb > 0.0)) throw DomainError("find_root: no sign change over bracket");

    bool use_secant = true;
    for (int iter = 0; iter < 400; ++iter) {
        const double width = b - a;
        if (width <= tol) break;
        double x = 0.5 * (a + b);
        if (use_secant) {
            const double s = b - fb * (b - a) / (fb - fa);
            // Keep secant proposals well inside the bracket.
            if (s > a + 0.01 * width && s < b - 0.01 * width) x = s;
        }
        const double fx = g(x);
        if (std::abs(fx) <= tol) return x;
        if ((fx > 0.0) == (fa > 0.0)) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        // Fall back to bisection whenever a step fails to halve the bracket.
        use_secant = (b - a) <= 0.5 * width;
    }
    return std::abs(fa) <= std::abs(fb) ? a : b;
}

}  // namespace trialopt::numerics
