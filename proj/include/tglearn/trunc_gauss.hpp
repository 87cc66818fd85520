#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace tglearn {

// Bound sentinels standing in for -inf / +inf. Values this large are
// indistinguishable from an untruncated Gaussian for the parameter ranges
// that occur in heuristic learning (|mu|, sigma, |x| all << 1e5).
inline constexpr double kNoLowerBound = -1e5;
inline constexpr double kNoUpperBound = 1e5;

// Offset subtracted from a lower bound to open it: support (l, u] realized
// as [l - eps, u].
inline constexpr double kOpenBoundEps = 0.1;

namespace detail {

inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// erfcx(x) = exp(x^2) * erfc(x).
// The direct product is accurate until exp(x^2) overflows; past that the
// divergent asymptotic series truncated at its smallest term gives full
// double precision (first omitted term < 1e-18 for x >= 12).
inline double erfcx(double x) {
    if (std::isnan(x)) return x;
    if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
    if (x < 12.0) return std::exp(x * x) * std::erfc(x);
    const double ix2 = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n <= 15; ++n) {
        term *= -static_cast<double>(2 * n - 1) * ix2;
        sum += term;
        if (std::abs(term) < 1e-20 * sum) break;
    }
    return sum / (x * kSqrtPi);
}

}  // namespace detail

// Taylor expansion of F1(x, x+eps) around eps = 0, used when the direct
// quotient degenerates to 0/0.
inline double p1_taylor(double x, double eps) {
    using detail::kSqrtPi;
    const double e2 = eps * eps;
    return kSqrtPi * (x + 0.5 * eps - x * e2 / 6.0 - eps * e2 / 12.0 +
                      x * (x * x + 1.0) * e2 * e2 / 90.0);
}

// Taylor expansion of F2(x, x+eps) around eps = 0.
inline double p2_taylor(double x, double eps) {
    using detail::kSqrtPi;
    const double e2 = eps * eps;
    return kSqrtPi * (x * x - 0.5 + x * eps + (1.0 - x * x) * e2 / 3.0 -
                      x * eps * e2 / 3.0);
}

// F1(x,y) = (exp(-x^2) - exp(-y^2)) / (erf(y) - erf(x)), evaluated without
// catastrophic cancellation. Branches: symmetry swap so |x| <= |y| (making
// delta = exp(x^2-y^2) <= 1), Taylor for nearly equal arguments, erfcx forms
// when both arguments share a sign, direct quotient otherwise (no
// cancellation when the erf arguments straddle zero).
inline double f1_stable(double x, double y) {
    if (std::abs(x) > std::abs(y)) return f1_stable(y, x);
    if (std::abs(x - y) < 1e-7) return p1_taylor(x, y - x);
    const double d = x * x - y * y;
    const double one_minus_delta = -std::expm1(d);
    const double delta = std::exp(d);
    using detail::erfcx;
    if (x <= 0.0 && y <= 0.0)
        return one_minus_delta / (delta * erfcx(-y) - erfcx(-x));
    if (x >= 0.0 && y >= 0.0)
        return one_minus_delta / (erfcx(x) - delta * erfcx(y));
    return one_minus_delta * std::exp(-x * x) / (std::erf(y) - std::erf(x));
}

// F2(x,y) = (x exp(-x^2) - y exp(-y^2)) / (erf(y) - erf(x)), same branch
// scheme as f1_stable. Shows up in the sigma derivative of the NLL.
inline double f2_stable(double x, double y) {
    if (std::abs(x) > std::abs(y)) return f2_stable(y, x);
    if (std::abs(x - y) < 1e-7) return p2_taylor(x, y - x);
    const double d = x * x - y * y;
    const double delta = std::exp(d);
    const double num = (x - y) - y * std::expm1(d);  // x - delta*y
    using detail::erfcx;
    if (x <= 0.0 && y <= 0.0)
        return num / (delta * erfcx(-y) - erfcx(-x));
    if (x >= 0.0 && y >= 0.0)
        return num / (erfcx(x) - delta * erfcx(y));
    return num * std::exp(-x * x) / (std::erf(y) - std::erf(x));
}

/// Gaussian restricted and renormalized to [l, u]. mu and sigma are the
/// parameters of the distribution *before* truncation; mu need not lie
/// inside the support and is not the mean.
struct TruncatedGaussian {
    double mu;
    double sigma;
    double l;
    double u;

    double alpha() const { return (l - mu) / sigma; }
    double beta() const { return (u - mu) / sigma; }
    bool in_support(double x) const { return x >= l && x <= u; }
};

/// Builds a TruncatedGaussian. Missing bounds become the +-1e5 sentinels.
/// open_lower shifts a present lower bound down by kOpenBoundEps so that
/// x == lower keeps positive density.
inline TruncatedGaussian make_truncated_gaussian(
    double mu, double sigma,
    std::optional<double> lower = std::nullopt,
    std::optional<double> upper = std::nullopt,
    bool open_lower = false) {
    if (std::isnan(mu) || std::isnan(sigma))
        throw std::invalid_argument("truncated gaussian: NaN parameter");
    if (!(sigma > 0.0))
        throw std::invalid_argument("truncated gaussian: sigma must be positive");
    if (lower && std::isnan(*lower))
        throw std::invalid_argument("truncated gaussian: NaN lower bound");
    if (upper && std::isnan(*upper))
        throw std::invalid_argument("truncated gaussian: NaN upper bound");
    if (lower && upper && !(*lower < *upper))
        throw std::invalid_argument("truncated gaussian: lower >= upper");
    double l = lower ? *lower : kNoLowerBound;
    if (lower && open_lower) l -= kOpenBoundEps;
    const double u = upper ? *upper : kNoUpperBound;
    if (!(l < u))
        throw std::invalid_argument("truncated gaussian: empty support");
    return TruncatedGaussian{mu, sigma, l, u};
}

/// E[x] via the stable reformulation mu + sqrt(2/pi) F1(alpha/sqrt2,
/// beta/sqrt2) sigma. Always lies in [l, u].
inline double mean(const TruncatedGaussian& d) {
    const double a = d.alpha() / detail::kSqrt2;
    const double b = d.beta() / detail::kSqrt2;
    const double m = d.mu + d.sigma * std::sqrt(2.0 / M_PI) * f1_stable(a, b);
    // The formula keeps the mean inside the support up to rounding; clamp
    // the last ulp so callers can rely on l <= mean <= u exactly.
    return std::min(std::max(m, d.l), d.u);
}

/// log(Phi(beta) - Phi(alpha)) <= 0, selecting the branch by the signs of
/// alpha and beta. Same-sign branches route the difference through the
/// stable mean offset instead of subtracting nearly equal CDF values.
inline double log_partition(const TruncatedGaussian& d) {
    const double alpha = d.alpha();
    const double beta = d.beta();
    const double a = alpha / detail::kSqrt2;
    const double b = beta / detail::kSqrt2;
    if (alpha >= 0.0 && beta >= 0.0) {
        const double r = std::sqrt(2.0 / M_PI) * f1_stable(a, b);
        return -std::log(r) - detail::kLogSqrt2Pi - 0.5 * alpha * alpha +
               std::log(-std::expm1(0.5 * (alpha * alpha - beta * beta)));
    }
    if (alpha <= 0.0 && beta <= 0.0) {
        const double r = -std::sqrt(2.0 / M_PI) * f1_stable(a, b);
        return -std::log(r) - detail::kLogSqrt2Pi - 0.5 * beta * beta +
               std::log(-std::expm1(0.5 * (beta * beta - alpha * alpha)));
    }
    return -M_LN2 + std::log(std::erf(b) - std::erf(a));
}

/// log density at x, or nullopt when x lies outside [l, u]. The tagged
/// out-of-support result forces callers to notice bad data instead of
/// averaging a silent -inf into a loss.
inline std::optional<double> log_prob(const TruncatedGaussian& d, double x) {
    if (!d.in_support(x)) return std::nullopt;
    const double xi = (x - d.mu) / d.sigma;
    return -std::log(d.sigma) - detail::kLogSqrt2Pi - 0.5 * xi * xi -
           log_partition(d);
}

struct NllGrad {
    double d_mu;
    double d_sigma;
};

/// Partial derivatives of -log p(x) with respect to mu and sigma:
///   d/dmu    = (mu - x)/sigma^2 + sqrt(2/pi) F1(a,b) / sigma
///   d/dsigma = (1 - xi^2)/sigma + (2/sqrt(pi)) F2(a,b) / sigma
/// with a = alpha/sqrt2, b = beta/sqrt2. nullopt when x is out of support.
inline std::optional<NllGrad> nll_grad(const TruncatedGaussian& d, double x) {
    if (!d.in_support(x)) return std::nullopt;
    const double a = d.alpha() / detail::kSqrt2;
    const double b = d.beta() / detail::kSqrt2;
    const double xi = (x - d.mu) / d.sigma;
    const double d_mu =
        (d.mu - x) / (d.sigma * d.sigma) +
        std::sqrt(2.0 / M_PI) * f1_stable(a, b) / d.sigma;
    const double d_sigma =
        (1.0 - xi * xi) / d.sigma +
        (2.0 / detail::kSqrtPi) * f2_stable(a, b) / d.sigma;
    return NllGrad{d_mu, d_sigma};
}

}  // namespace tglearn
