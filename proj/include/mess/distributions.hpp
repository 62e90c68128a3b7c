#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mess/errors.hpp"
#include "mess/rng.hpp"

namespace mess {

/// Parameters of the generalized inverse Gaussian density
///   f(x) proportional to x^(zeta-1) exp(-(chi/x + varrho x)/2),  x > 0.
struct GigParams {
    double zeta;
    double chi;
    double varrho;

    void validate() const {
        if (!std::isfinite(zeta) || !std::isfinite(chi) || !std::isfinite(varrho))
            throw std::invalid_argument("gig: non-finite parameter");
        if (chi < 0.0 || varrho < 0.0) throw std::invalid_argument("gig: negative chi or varrho");
        if (chi == 0.0 && varrho == 0.0)
            throw std::invalid_argument("gig: chi and varrho cannot both be zero");
        if (chi == 0.0 && zeta <= 0.0)
            throw std::invalid_argument("gig: chi = 0 requires zeta > 0");
        if (varrho == 0.0 && zeta >= 0.0)
            throw std::invalid_argument("gig: varrho = 0 requires zeta < 0");
    }
};

/// Gamma draw in shape-rate form (mean shape/rate), Marsaglia-Tsang method.
inline double sample_gamma(double shape, double rate, RngStream& rng) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw std::invalid_argument("gamma: shape and rate must be positive");
    if (shape < 1.0) {
        // boost to shape+1, then apply the power correction
        const double u = rng.uniform_pos();
        return sample_gamma(shape + 1.0, rate, rng) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_pos();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v / rate;
    }
}

/// Inverse-Gamma draw (mean scale/(shape-1) for shape > 1), as the
/// reciprocal of a Gamma(shape, scale) draw.
inline double sample_inverse_gamma(double shape, double scale, RngStream& rng) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("inverse gamma: shape and scale must be positive");
    return 1.0 / sample_gamma(shape, scale, rng);
}

inline int sample_bernoulli(double p, RngStream& rng) {
    if (!(p >= 0.0) || !(p <= 1.0)) throw std::invalid_argument("bernoulli: p outside [0,1]");
    return rng.uniform() < p ? 1 : 0;
}

namespace detail {

// Two-parameter standard form h(z) = z^(lam-1) exp(-omega (z + 1/z)/2) with
// lam >= 0, omega > 0, used by the three Hoermann-Leydold samplers below.
struct GigStd {
    double lam;
    double omega;

    double log_h(double z) const {
        return (lam - 1.0) * std::log(z) - 0.5 * omega * (z + 1.0 / z);
    }
    // log h(x) - log h(ref), written so that the omega terms cancel before
    // they are evaluated; safe for very large omega where the absolute
    // log-densities would drown the difference.
    double log_h_diff(double x, double ref) const {
        return (lam - 1.0) * std::log(x / ref) -
               0.5 * omega * (x - ref) * (1.0 - 1.0 / (x * ref));
    }
    double mode() const {
        if (lam >= 1.0) return (std::sqrt((lam - 1.0) * (lam - 1.0) + omega * omega) + lam - 1.0) / omega;
        return omega / (std::sqrt((1.0 - lam) * (1.0 - lam) + omega * omega) + 1.0 - lam);
    }
};

// Ratio-of-uniforms with mode shift; the workhorse for omega > 1 or lam > 1.
inline double gig_rou_shift(const GigStd& g, RngStream& rng) {
    const double m = g.mode();

    // stationary points of (x - m)^2 h(x): roots of
    // x^3 + a x^2 + b x + m = 0 via the trigonometric Cardano form
    const double a = -(2.0 * (g.lam + 1.0) / g.omega + m);
    const double b = 2.0 * (g.lam - 1.0) * m / g.omega - 1.0;
    const double c1 = a / 3.0;
    const double p3 = b / 3.0 - c1 * c1;                       // p/3 of the depressed cubic
    const double q = 2.0 * c1 * c1 * c1 - c1 * b + m;          // q of the depressed cubic
    const double s = std::sqrt(std::max(-p3, 0.0));
    double cosarg = -q / (2.0 * s * s * s);
    cosarg = std::max(-1.0, std::min(1.0, cosarg));
    const double theta = std::acos(cosarg) / 3.0;
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    double x_minus = 2.0 * s * std::cos(theta + 2.0 * kTwoPi / 3.0) - c1;
    double x_plus = 2.0 * s * std::cos(theta) - c1;
    x_plus = std::max(x_plus, x_minus);
    x_minus = std::max(x_minus, std::numeric_limits<double>::min());

    const double u_lo = (x_minus - m) * std::exp(0.5 * g.log_h_diff(x_minus, m));
    const double u_hi = (x_plus - m) * std::exp(0.5 * g.log_h_diff(x_plus, m));
    for (;;) {
        const double u = u_lo + rng.uniform() * (u_hi - u_lo);
        const double v = rng.uniform_pos();
        const double x = u / v + m;
        if (x <= 0.0) continue;
        if (2.0 * std::log(v) <= g.log_h_diff(x, m)) return x;
    }
}

// Composition-rejection for the non-T-concave corner:
// lam < 1 and omega <= min(1/2, 2/3 sqrt(1 - lam)).
inline double gig_three_piece(const GigStd& g, RngStream& rng) {
    const double lam = g.lam;
    const double omega = g.omega;
    const double m = g.mode();
    const double x0 = omega / (1.0 - lam);
    const double k = 2.0 / omega;
    const double xs = std::max(x0, k);

    const double c1 = std::exp(g.log_h(m));
    const double area1 = c1 * x0;
    double c2 = 0.0, area2 = 0.0, x0_pow = 0.0;
    if (x0 < k) {
        c2 = std::exp(-omega);
        if (lam > 0.0) {
            x0_pow = std::pow(x0, lam);
            area2 = c2 * (std::pow(k, lam) - x0_pow) / lam;
        } else {
            area2 = c2 * std::log(k / x0);
        }
    }
    const double c3 = std::pow(xs, lam - 1.0);
    const double area3 = c3 * k * std::exp(-0.5 * omega * xs);
    const double total = area1 + area2 + area3;

    for (;;) {
        const double u = rng.uniform_pos();
        double v = rng.uniform() * total;
        double x, envelope;
        if (v <= area1) {
            x = x0 * v / area1;
            envelope = c1;
        } else if (v <= area1 + area2) {
            v -= area1;
            x = (lam > 0.0) ? std::pow(x0_pow + v * lam / c2, 1.0 / lam) : x0 * std::exp(v / c2);
            envelope = c2 * std::pow(x, lam - 1.0);
        } else {
            v -= area1 + area2;
            const double arg = std::exp(-0.5 * omega * xs) - v * omega / (2.0 * c3);
            if (!(arg > 0.0)) continue;
            x = -k * std::log(arg);
            envelope = c3 * std::exp(-0.5 * omega * x);
        }
        if (!(x > 0.0) || !std::isfinite(x)) continue;
        if (std::log(u * envelope) <= g.log_h(x)) return x;
    }
}

// Plain ratio-of-uniforms for the remaining band (lam <= 1, moderate omega).
inline double gig_rou(const GigStd& g, RngStream& rng) {
    const double m = g.mode();
    const double xp =
        (1.0 + g.lam + std::sqrt((1.0 + g.lam) * (1.0 + g.lam) + g.omega * g.omega)) / g.omega;
    const double log_u_max = std::log(xp) + 0.5 * g.log_h_diff(xp, m);
    for (;;) {
        const double u = rng.uniform_pos();
        const double v = rng.uniform_pos();
        const double x = std::exp(std::log(u) + log_u_max - std::log(v));
        if (2.0 * std::log(v) <= g.log_h_diff(x, m)) return x;
    }
}

}  // namespace detail

/// One draw from GIG(zeta, chi, varrho). Boundary cases dispatch to the
/// exact Gamma (chi = 0) and inverse-Gamma (varrho = 0) samplers; the
/// interior uses the Hoermann-Leydold region decomposition.
inline double sample_gig(const GigParams& p, RngStream& rng) {
    p.validate();
    if (p.chi == 0.0) return sample_gamma(p.zeta, 0.5 * p.varrho, rng);
    if (p.varrho == 0.0) return sample_inverse_gamma(-p.zeta, 0.5 * p.chi, rng);

    const double alpha = std::sqrt(p.chi / p.varrho);
    const double omega = std::sqrt(p.chi * p.varrho);
    if (omega < 1e-280) {
        // chi * varrho underflows; the draw is indistinguishable from the
        // dominating boundary family
        if (p.zeta > 0.0) return sample_gamma(p.zeta, 0.5 * p.varrho, rng);
        if (p.zeta < 0.0) return sample_inverse_gamma(-p.zeta, 0.5 * p.chi, rng);
        throw numerical_error("gig: zeta = 0 with vanishing chi * varrho");
    }
    const detail::GigStd g{std::abs(p.zeta), omega};

    double z;
    if (omega > 1.0 || g.lam > 1.0)
        z = detail::gig_rou_shift(g, rng);
    else if (omega <= std::min(0.5, (2.0 / 3.0) * std::sqrt(1.0 - g.lam)))
        z = detail::gig_three_piece(g, rng);
    else
        z = detail::gig_rou(g, rng);

    if (p.zeta < 0.0) z = 1.0 / z;
    return alpha * z;
}

/// Draw from the Gaussian with precision matrix P and mean P^{-1} b via one
/// Cholesky factorization and two triangular solves. If the factorization
/// fails, a diagonal jitter of 1e-10 * mean(diag(P)) is added and escalated
/// tenfold up to 1e-6 * mean(diag(P)) before giving up.
inline Eigen::VectorXd sample_mvn_precision(const Eigen::Ref<const Eigen::VectorXd>& b,
                                            const Eigen::Ref<const Eigen::MatrixXd>& P,
                                            RngStream& rng) {
    const Eigen::Index k = P.rows();
    if (P.cols() != k || b.size() != k)
        throw std::invalid_argument("mvn: dimension mismatch between b and P");

    Eigen::LLT<Eigen::MatrixXd> llt(P);
    if (llt.info() != Eigen::Success) {
        const double base = 1e-10 * P.diagonal().mean();
        double jitter = base;
        for (int attempt = 0; attempt < 5 && llt.info() != Eigen::Success; ++attempt) {
            Eigen::MatrixXd Pj = P;
            Pj.diagonal().array() += jitter;
            llt.compute(Pj);
            jitter *= 10.0;
        }
        if (llt.info() != Eigen::Success)
            throw numerical_error("mvn: precision matrix not positive definite after jitter");
    }
    Eigen::VectorXd draw = llt.solve(b);
    Eigen::VectorXd z(k);
    for (Eigen::Index i = 0; i < k; ++i) z[i] = rng.normal();
    draw += llt.matrixU().solve(z);
    return draw;
}

}  // namespace mess
