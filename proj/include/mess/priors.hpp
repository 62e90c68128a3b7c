#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

#include "mess/distributions.hpp"
#include "mess/rng.hpp"

namespace mess {

enum class PriorKind { None, Ssvs, Ng, Dl };

/// Which prior variance the normal-gamma state implies for a coefficient:
/// the sampled local scale psi_r itself, or 2 psi_r / lambda^2.
enum class NgVarianceMode { Psi, TwoPsiOverLambda2 };

struct PriorConfig {
    PriorKind kind = PriorKind::None;

    double ng_theta = 0.1;
    double ng_d0 = 0.01;
    double ng_d1 = 0.01;
    NgVarianceMode ng_variance = NgVarianceMode::Psi;

    double dl_a = 0.5;
    bool dl_a_auto = true;  // a = 1/K, resolved against the shrunk block size

    double ssvs_omega = 0.5;
    double ssvs_spike_mult = 0.01;
    double ssvs_slab_mult = 100.0;

    double none_variance = 1000.0;

    /// Apply the shrinkage prior to the intercept as well (the simulation
    /// design draws a nonzero intercept from the slab, so it is shrunk by
    /// default); when false the intercept keeps the diffuse none_variance.
    bool shrink_intercept = true;

    void validate() const {
        if (!(ng_theta > 0.0) || !(ng_d0 > 0.0) || !(ng_d1 > 0.0))
            throw std::invalid_argument("prior config: ng hyperparameters must be positive");
        if (!dl_a_auto && (!(dl_a > 0.0) || dl_a > 1.0))
            throw std::invalid_argument("prior config: dl_a must lie in (0, 1]");
        if (!(ssvs_omega > 0.0) || !(ssvs_omega < 1.0))
            throw std::invalid_argument("prior config: ssvs_omega must lie in (0, 1)");
        if (!(ssvs_spike_mult > 0.0) || !(ssvs_slab_mult > 0.0))
            throw std::invalid_argument("prior config: ssvs multipliers must be positive");
        if (ssvs_spike_mult >= ssvs_slab_mult)
            throw std::invalid_argument("prior config: spike multiplier must be below slab");
        if (!(none_variance > 0.0))
            throw std::invalid_argument("prior config: none_variance must be positive");
    }

    double resolved_dl_a(Eigen::Index k_shrunk) const {
        return dl_a_auto ? 1.0 / static_cast<double>(k_shrunk) : dl_a;
    }

    /// Number of leading design columns exempt from shrinkage.
    Eigen::Index shrink_offset() const { return shrink_intercept ? 0 : 1; }

    std::string label() const {
        std::ostringstream os;
        switch (kind) {
            case PriorKind::None: return "None";
            case PriorKind::Ssvs: return "SSVS";
            case PriorKind::Ng:
                os << "NG (θ = " << ng_theta << ")";
                return os.str();
            case PriorKind::Dl:
                if (dl_a_auto) return "DL (a = 1/K)";
                os << "DL (a = " << dl_a << ")";
                return os.str();
        }
        return "?";
    }

    std::string kind_name() const {
        switch (kind) {
            case PriorKind::None: return "none";
            case PriorKind::Ssvs: return "ssvs";
            case PriorKind::Ng: return "ng";
            case PriorKind::Dl: return "dl";
        }
        return "?";
    }
};

inline PriorKind prior_kind_from_name(const std::string& name) {
    if (name == "none") return PriorKind::None;
    if (name == "ssvs") return PriorKind::Ssvs;
    if (name == "ng") return PriorKind::Ng;
    if (name == "dl") return PriorKind::Dl;
    throw std::invalid_argument("unknown prior kind: " + name);
}

// ---------------------------------------------------------------------------
// Normal-Gamma

struct NgState {
    Eigen::VectorXd psi;  // local scales
    double lambda2 = 1.0; // global scale
};

inline NgState init_ng_state(Eigen::Index k) {
    return NgState{Eigen::VectorXd::Ones(k), 1.0};
}

/// Conditional posterior of one local scale. Coefficients at machine zero
/// are clamped (chi >= 1e-16) to keep the draw well defined.
inline GigParams ng_psi_posterior(double beta_r, double theta, double lambda2) {
    const double chi = std::max(beta_r * beta_r, 1e-16);
    return GigParams{theta - 0.5, chi, theta * lambda2};
}

/// Shape and rate of the conditional posterior of the global scale.
inline std::pair<double, double> ng_lambda2_posterior(double psi_sum, Eigen::Index k,
                                                      const PriorConfig& cfg) {
    return {cfg.ng_d0 + cfg.ng_theta * static_cast<double>(k),
            cfg.ng_d1 + 0.5 * cfg.ng_theta * psi_sum};
}

/// One sweep of the normal-gamma block: redraw every psi_r given beta_r and
/// the current global scale, then redraw lambda^2 given the new psi.
inline NgState ng_update(const Eigen::Ref<const Eigen::VectorXd>& beta, const NgState& state,
                         const PriorConfig& cfg, RngStream& rng) {
    const Eigen::Index k = beta.size();
    if (state.psi.size() != k) throw std::invalid_argument("ng_update: state size mismatch");
    NgState out = state;
    for (Eigen::Index r = 0; r < k; ++r)
        out.psi[r] = sample_gig(ng_psi_posterior(beta[r], cfg.ng_theta, state.lambda2), rng);
    const auto [shape, rate] = ng_lambda2_posterior(out.psi.sum(), k, cfg);
    out.lambda2 = sample_gamma(shape, rate, rng);
    return out;
}

inline Eigen::VectorXd ng_prior_diag(const NgState& state, const PriorConfig& cfg) {
    if (cfg.ng_variance == NgVarianceMode::TwoPsiOverLambda2)
        return (2.0 / state.lambda2) * state.psi;
    return state.psi;
}

// ---------------------------------------------------------------------------
// Dirichlet-Laplace

struct DlState {
    Eigen::VectorXd varphi;  // local scales
    Eigen::VectorXd phi;     // simplex weights
    double tau = 1.0;        // global scale
};

inline DlState init_dl_state(Eigen::Index k) {
    return DlState{Eigen::VectorXd::Ones(k),
                   Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k)), 1.0};
}

/// One sweep of the Dirichlet-Laplace block: local scales varphi_r via the
/// reciprocal GIG(-1/2, 1, mu_r^{-2}) draw, the global tau from
/// GIG(1-K, 2 sum |beta_r|/phi_r, 1), and the simplex weights by normalizing
/// independent GIG(a-1, 2|beta_r|, 1) auxiliaries.
inline DlState dl_update(const Eigen::Ref<const Eigen::VectorXd>& beta, const DlState& state,
                         const PriorConfig& cfg, RngStream& rng) {
    const Eigen::Index k = beta.size();
    if (state.phi.size() != k) throw std::invalid_argument("dl_update: state size mismatch");
    const double a = cfg.resolved_dl_a(k);
    DlState out = state;

    // |beta_r| floored at 1e-10 wherever it enters a GIG argument
    Eigen::VectorXd babs(k);
    for (Eigen::Index r = 0; r < k; ++r) babs[r] = std::max(std::abs(beta[r]), 1e-10);

    for (Eigen::Index r = 0; r < k; ++r) {
        const double mu = std::max(state.phi[r] * state.tau / babs[r], 1e-100);
        const double tilde = sample_gig(GigParams{-0.5, 1.0, 1.0 / (mu * mu)}, rng);
        out.varphi[r] = 1.0 / tilde;
    }

    const double chi_tau = 2.0 * (babs.array() / state.phi.array()).sum();
    out.tau = sample_gig(GigParams{1.0 - static_cast<double>(k), chi_tau, 1.0}, rng);

    for (Eigen::Index r = 0; r < k; ++r)
        out.phi[r] = sample_gig(GigParams{a - 1.0, 2.0 * babs[r], 1.0}, rng);
    out.phi.array() = out.phi.array().max(1e-12);
    out.phi /= out.phi.sum();
    return out;
}

inline Eigen::VectorXd dl_prior_diag(const DlState& state, const PriorConfig&) {
    return state.varphi.array() * state.phi.array().square() * (state.tau * state.tau);
}

// ---------------------------------------------------------------------------
// Stochastic search variable selection

struct SsvsState {
    Eigen::VectorXi delta;  // inclusion indicators
    Eigen::VectorXd s0;     // spike variances
    Eigen::VectorXd s1;     // slab variances
};

inline SsvsState init_ssvs_state(Eigen::VectorXd s0, Eigen::VectorXd s1) {
    if (s0.size() != s1.size()) throw std::invalid_argument("ssvs: scale size mismatch");
    for (Eigen::Index r = 0; r < s0.size(); ++r)
        if (!(s0[r] > 0.0) || !(s0[r] < s1[r]))
            throw std::invalid_argument("ssvs: requires 0 < s0_r < s1_r");
    SsvsState st;
    st.delta = Eigen::VectorXi::Ones(s0.size());
    st.s0 = std::move(s0);
    st.s1 = std::move(s1);
    return st;
}

/// Spike/slab variances from the posterior covariance diagonal of an
/// unshrunk preliminary run (the semi-automatic scaling).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> ssvs_calibrate(
    const Eigen::Ref<const Eigen::MatrixXd>& beta_draws, const PriorConfig& cfg) {
    const Eigen::Index t = beta_draws.rows();
    if (t < 2) throw std::invalid_argument("ssvs calibration: needs at least 2 draws");
    const Eigen::RowVectorXd mean = beta_draws.colwise().mean();
    Eigen::VectorXd diag =
        (beta_draws.rowwise() - mean).array().square().colwise().sum().transpose() /
        static_cast<double>(t - 1);
    for (Eigen::Index r = 0; r < diag.size(); ++r)
        if (!(diag[r] > 0.0) || !std::isfinite(diag[r]))
            throw numerical_error("ssvs calibration: degenerate posterior variance at column " +
                                  std::to_string(r));
    return {cfg.ssvs_spike_mult * diag, cfg.ssvs_slab_mult * diag};
}

/// Inclusion probability in log space; the Gaussian kernels underflow in
/// linear space for moderate |beta_r| / s.
inline double ssvs_inclusion_prob(double beta_r, double s0, double s1, double omega) {
    const double b2 = beta_r * beta_r;
    const double log_u1 = -std::log(s1) - b2 / (2.0 * s1) + std::log(omega);
    const double log_u0 = -std::log(s0) - b2 / (2.0 * s0) + std::log1p(-omega);
    return 1.0 / (1.0 + std::exp(log_u0 - log_u1));
}

inline SsvsState ssvs_update(const Eigen::Ref<const Eigen::VectorXd>& beta, const SsvsState& state,
                             const PriorConfig& cfg, RngStream& rng) {
    const Eigen::Index k = beta.size();
    if (state.delta.size() != k) throw std::invalid_argument("ssvs_update: state size mismatch");
    SsvsState out = state;
    for (Eigen::Index r = 0; r < k; ++r) {
        const double p = ssvs_inclusion_prob(beta[r], state.s0[r], state.s1[r], cfg.ssvs_omega);
        out.delta[r] = sample_bernoulli(p, rng);
    }
    return out;
}

inline Eigen::VectorXd ssvs_prior_diag(const SsvsState& state) {
    Eigen::VectorXd diag(state.delta.size());
    for (Eigen::Index r = 0; r < diag.size(); ++r)
        diag[r] = state.delta[r] ? state.s1[r] : state.s0[r];
    return diag;
}

// ---------------------------------------------------------------------------
// No shrinkage

inline Eigen::VectorXd none_prior_diag(Eigen::Index k, const PriorConfig& cfg) {
    return Eigen::VectorXd::Constant(k, cfg.none_variance);
}

// ---------------------------------------------------------------------------
// Dispatch over the prior state

using PriorState = std::variant<std::monostate, SsvsState, NgState, DlState>;

/// Fresh state for the shrunk block (k_full minus the exempt columns).
/// SSVS states must be built from calibrated scales via init_ssvs_state.
inline PriorState init_prior_state(const PriorConfig& cfg, Eigen::Index k_full) {
    const Eigen::Index k = k_full - cfg.shrink_offset();
    switch (cfg.kind) {
        case PriorKind::None: return std::monostate{};
        case PriorKind::Ng: return init_ng_state(k);
        case PriorKind::Dl: return init_dl_state(k);
        case PriorKind::Ssvs:
            throw std::invalid_argument("ssvs state requires calibrated scales");
    }
    return std::monostate{};
}

inline void update_prior_state(PriorState& state, const Eigen::Ref<const Eigen::VectorXd>& beta,
                               const PriorConfig& cfg, RngStream& rng) {
    const Eigen::Index off = cfg.shrink_offset();
    const auto block = beta.segment(off, beta.size() - off);
    if (auto* ng = std::get_if<NgState>(&state))
        *ng = ng_update(block, *ng, cfg, rng);
    else if (auto* dl = std::get_if<DlState>(&state))
        *dl = dl_update(block, *dl, cfg, rng);
    else if (auto* ssvs = std::get_if<SsvsState>(&state))
        *ssvs = ssvs_update(block, *ssvs, cfg, rng);
}

/// Full-length prior variance diagonal for the coefficient draw; exempt
/// leading columns receive the diffuse none_variance.
inline Eigen::VectorXd full_prior_diag(const PriorState& state, const PriorConfig& cfg,
                                       Eigen::Index k_full) {
    const Eigen::Index off = cfg.shrink_offset();
    Eigen::VectorXd diag(k_full);
    diag.head(off).setConstant(cfg.none_variance);
    if (std::holds_alternative<std::monostate>(state)) {
        diag.tail(k_full - off) = none_prior_diag(k_full - off, cfg);
    } else if (const auto* ng = std::get_if<NgState>(&state)) {
        diag.tail(k_full - off) = ng_prior_diag(*ng, cfg);
    } else if (const auto* dl = std::get_if<DlState>(&state)) {
        diag.tail(k_full - off) = dl_prior_diag(*dl, cfg);
    } else if (const auto* ssvs = std::get_if<SsvsState>(&state)) {
        diag.tail(k_full - off) = ssvs_prior_diag(*ssvs);
    }
    return diag;
}

}  // namespace mess
