#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mess/distributions.hpp"
#include "mess/errors.hpp"
#include "mess/priors.hpp"
#include "mess/rng.hpp"
#include "mess/spatial.hpp"

namespace mess {

/// Response, design matrix (intercept in the first column) and spatial
/// weights; immutable while a chain runs.
struct ModelData {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    SpatialWeights W;
    std::vector<std::string> column_names;
    bool durbin = false;

    Eigen::Index n() const { return y.size(); }
    Eigen::Index k() const { return X.cols(); }

    void validate() const {
        if (X.rows() != y.size()) throw std::invalid_argument("model data: X rows != y length");
        if (W.n() != static_cast<std::size_t>(y.size()))
            throw std::invalid_argument("model data: weight matrix size != y length");
        if (X.cols() < 1 || (X.col(0).array() != 1.0).any())
            throw std::invalid_argument("model data: first design column must be the constant 1");
        if (!y.allFinite() || !X.allFinite())
            throw std::invalid_argument("model data: non-finite entries");
        if (!column_names.empty() && column_names.size() != static_cast<std::size_t>(X.cols()))
            throw std::invalid_argument("model data: column name count mismatch");
    }
};

struct SamplerConfig {
    int n_iter = 2000;
    int n_burn = 1000;
    int thin = 1;
    double rho_prior_var = 10.0;  // c in rho ~ N(0, c)
    double sigma_a = 0.01;
    double sigma_b = 0.01;
    double initial_proposal_sd = 0.1;
    double target_accept_low = 0.2;
    double target_accept_high = 0.4;
    int tune_every = 50;
    double tune_factor = 1.1;
    std::uint64_t seed = 20260101;

    void validate() const {
        if (n_iter <= 0 || n_burn < 0 || n_burn >= n_iter)
            throw std::invalid_argument("sampler config: need 0 <= n_burn < n_iter");
        if (thin < 1) throw std::invalid_argument("sampler config: thin must be >= 1");
        if (!(rho_prior_var > 0.0))
            throw std::invalid_argument("sampler config: rho_prior_var must be positive");
        if (!(sigma_a > 0.0) || !(sigma_b > 0.0))
            throw std::invalid_argument("sampler config: sigma hyperparameters must be positive");
        if (!(initial_proposal_sd > 0.0))
            throw std::invalid_argument("sampler config: proposal sd must be positive");
        if (!(target_accept_low > 0.0) || !(target_accept_high < 1.0) ||
            target_accept_low >= target_accept_high)
            throw std::invalid_argument("sampler config: bad acceptance window");
        if (tune_every <= 0 || !(tune_factor > 1.0))
            throw std::invalid_argument("sampler config: bad tuning parameters");
    }

    int n_kept() const { return (n_iter - n_burn + thin - 1) / thin; }
};

struct ProposalTuner {
    double sd = 0.1;
    int accepts = 0;
    int proposals = 0;
};

struct ChainState {
    Eigen::VectorXd beta;
    double sigma2 = 1.0;
    double rho = 0.0;
    PriorState prior_state;
    ProposalTuner tuner;
};

struct PosteriorDraws {
    Eigen::MatrixXd beta_draws;   // kept draws x K
    Eigen::VectorXd sigma2_draws;
    Eigen::VectorXd rho_draws;
    double accept_rate = 0.0;
    double wall_seconds = 0.0;
    std::vector<std::pair<int, double>> proposal_sd_path;  // (iteration, sd) at each change
    double final_proposal_sd = 0.0;
    SamplerConfig sampler_config;
    PriorConfig prior_config;
    std::vector<std::string> column_names;
};

// ---------------------------------------------------------------------------
// Conditional blocks, usable standalone

/// eps = exp(rho W) y - X beta.
inline Eigen::VectorXd residuals(const ModelData& data,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta, double rho) {
    return mess_apply(data.W, rho, data.y) - data.X * beta;
}

/// Inverse-Gamma draw with shape a + N/2 and scale b + eps'eps / 2.
inline double draw_sigma2(const Eigen::Ref<const Eigen::VectorXd>& eps, const SamplerConfig& cfg,
                          RngStream& rng) {
    const double shape = cfg.sigma_a + 0.5 * static_cast<double>(eps.size());
    const double scale = cfg.sigma_b + 0.5 * eps.squaredNorm();
    return sample_inverse_gamma(shape, scale, rng);
}

/// Coefficient draw in precision form: P = diag(prior)^{-1} + X'X / sigma2,
/// linear term X' (exp(rho W) y) / sigma2, prior mean zero.
inline Eigen::VectorXd draw_beta(const ModelData& data, double rho, double sigma2,
                                 const Eigen::Ref<const Eigen::VectorXd>& prior_diag,
                                 RngStream& rng) {
    const Eigen::MatrixXd P = data.X.transpose() * data.X / sigma2 +
                              Eigen::MatrixXd(prior_diag.cwiseInverse().asDiagonal());
    const Eigen::VectorXd b = data.X.transpose() * mess_apply(data.W, rho, data.y) / sigma2;
    return sample_mvn_precision(b, P, rng);
}

/// Mean of the conditional coefficient posterior (no draw).
inline Eigen::VectorXd beta_posterior_mean(const ModelData& data, double rho, double sigma2,
                                           const Eigen::Ref<const Eigen::VectorXd>& prior_diag) {
    const Eigen::MatrixXd P = data.X.transpose() * data.X / sigma2 +
                              Eigen::MatrixXd(prior_diag.cwiseInverse().asDiagonal());
    const Eigen::VectorXd b = data.X.transpose() * mess_apply(data.W, rho, data.y) / sigma2;
    return P.llt().solve(b);
}

/// Log conditional posterior of rho up to a constant. The matrix exponential
/// has unit determinant for zero-diagonal W, so only the residual quadratic
/// form and the Gaussian prior remain.
inline double log_post_rho(const ModelData& data, const Eigen::Ref<const Eigen::VectorXd>& beta,
                           double sigma2, double rho, const SamplerConfig& cfg) {
    const Eigen::VectorXd eps = residuals(data, beta, rho);
    return -0.5 * eps.squaredNorm() / sigma2 - 0.5 * rho * rho / cfg.rho_prior_var;
}

/// One random-walk Metropolis step for rho; on rejection the previous value
/// is retained. Returns the new value and whether the proposal was accepted.
inline std::pair<double, bool> mh_step_rho(ChainState& state, const ModelData& data,
                                           const SamplerConfig& cfg, RngStream& rng) {
    const double prop = state.rho + state.tuner.sd * rng.normal();
    const double lp_cur = log_post_rho(data, state.beta, state.sigma2, state.rho, cfg);
    const double lp_prop = log_post_rho(data, state.beta, state.sigma2, prop, cfg);
    const double log_u = std::log(rng.uniform_pos());
    const bool accepted = log_u <= lp_prop - lp_cur;
    state.tuner.proposals += 1;
    if (accepted) {
        state.rho = prop;
        state.tuner.accepts += 1;
    }
    return {state.rho, accepted};
}

/// Proposal-sd adjustment: every tune_every proposals during the tuning
/// phase, shrink below the target window and grow above it; frozen once the
/// phase ends.
inline ProposalTuner tune_proposal(ProposalTuner tuner, const SamplerConfig& cfg,
                                   bool in_tuning_phase) {
    if (!in_tuning_phase || tuner.proposals < cfg.tune_every) return tuner;
    const double rate = static_cast<double>(tuner.accepts) / tuner.proposals;
    if (rate < cfg.target_accept_low)
        tuner.sd /= cfg.tune_factor;
    else if (rate > cfg.target_accept_high)
        tuner.sd *= cfg.tune_factor;
    tuner.accepts = 0;
    tuner.proposals = 0;
    return tuner;
}

// ---------------------------------------------------------------------------

/// Metropolis-within-Gibbs chain. Each sweep draws sigma2, the prior block,
/// beta and rho, in that order; exp(rho W) y is cached and refreshed only
/// when a rho proposal is accepted, and X'X is computed once.
class MessSampler {
  public:
    MessSampler(ModelData data, PriorConfig prior_cfg, SamplerConfig cfg, PriorState init_state)
        : data_(std::move(data)),
          prior_cfg_(prior_cfg),
          cfg_(cfg),
          rng_(cfg.seed) {
        cfg_.validate();
        prior_cfg_.validate();
        data_.validate();
        state_.beta = Eigen::VectorXd::Zero(data_.k());
        state_.sigma2 = 1.0;
        state_.rho = 0.0;
        state_.prior_state = std::move(init_state);
        state_.tuner.sd = cfg_.initial_proposal_sd;
        xtx_ = data_.X.transpose() * data_.X;
        refresh_filter_cache();
    }

    const ChainState& state() const { return state_; }
    ChainState& state() { return state_; }
    const ModelData& data() const { return data_; }
    int iteration() const { return iter_; }
    RngStream& rng() { return rng_; }

    /// Observe the update order; tags are "sigma2", "prior", "beta", "rho".
    void set_trace(std::function<void(std::string_view)> hook) { trace_ = std::move(hook); }

    /// Replace the response vector (keeps all parameters); used by
    /// simulator-in-the-loop checks.
    void set_response(Eigen::VectorXd y) {
        if (y.size() != data_.y.size()) throw std::invalid_argument("set_response: length mismatch");
        data_.y = std::move(y);
        refresh_filter_cache();
    }

    void sweep() {
        const Eigen::Index n = data_.n();

        Eigen::VectorXd eps = sy_ - data_.X * state_.beta;
        state_.sigma2 = sample_inverse_gamma(cfg_.sigma_a + 0.5 * static_cast<double>(n),
                                             cfg_.sigma_b + 0.5 * eps.squaredNorm(), rng_);
        if (trace_) trace_("sigma2");

        update_prior_state(state_.prior_state, state_.beta, prior_cfg_, rng_);
        if (trace_) trace_("prior");

        const Eigen::VectorXd diag = full_prior_diag(state_.prior_state, prior_cfg_, data_.k());
        Eigen::MatrixXd P = xtx_ / state_.sigma2;
        P.diagonal() += diag.cwiseInverse();
        state_.beta = sample_mvn_precision(xt_sy_ / state_.sigma2, P, rng_);
        if (trace_) trace_("beta");

        step_rho();
        if (trace_) trace_("rho");

        const bool tuning = iter_ < cfg_.n_burn / 2;
        const double sd_before = state_.tuner.sd;
        state_.tuner = tune_proposal(state_.tuner, cfg_, tuning);
        if (state_.tuner.sd != sd_before) sd_path_.emplace_back(iter_, state_.tuner.sd);

        if (!state_.beta.allFinite() || !std::isfinite(state_.sigma2) || state_.sigma2 <= 0.0 ||
            !std::isfinite(state_.rho))
            throw numerical_error("chain aborted: non-finite state at iteration " +
                                  std::to_string(iter_));
        ++iter_;
    }

    PosteriorDraws run() {
        const auto t0 = std::chrono::steady_clock::now();
        PosteriorDraws out;
        const int kept = cfg_.n_kept();
        out.beta_draws.resize(kept, data_.k());
        out.sigma2_draws.resize(kept);
        out.rho_draws.resize(kept);
        sd_path_.assign(1, {0, state_.tuner.sd});

        int row = 0;
        for (int it = 0; it < cfg_.n_iter; ++it) {
            sweep();
            if (it >= cfg_.n_burn && (it - cfg_.n_burn) % cfg_.thin == 0) {
                out.beta_draws.row(row) = state_.beta.transpose();
                out.sigma2_draws[row] = state_.sigma2;
                out.rho_draws[row] = state_.rho;
                ++row;
            }
        }

        out.accept_rate = proposals_total_ > 0
                              ? static_cast<double>(accepts_total_) / proposals_total_
                              : 0.0;
        out.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.proposal_sd_path = sd_path_;
        out.final_proposal_sd = state_.tuner.sd;
        out.sampler_config = cfg_;
        out.prior_config = prior_cfg_;
        out.column_names = data_.column_names;
        return out;
    }

  private:
    void refresh_filter_cache() {
        sy_ = mess_apply(data_.W, state_.rho, data_.y);
        xt_sy_ = data_.X.transpose() * sy_;
    }

    void step_rho() {
        const double prop = state_.rho + state_.tuner.sd * rng_.normal();
        const double lp_cur = log_post_quadratic(sy_) -
                              0.5 * state_.rho * state_.rho / cfg_.rho_prior_var;
        Eigen::VectorXd sy_prop = mess_apply(data_.W, prop, data_.y);
        const double lp_prop =
            log_post_quadratic(sy_prop) - 0.5 * prop * prop / cfg_.rho_prior_var;
        state_.tuner.proposals += 1;
        proposals_total_ += 1;
        if (std::log(rng_.uniform_pos()) <= lp_prop - lp_cur) {
            state_.rho = prop;
            sy_ = std::move(sy_prop);
            xt_sy_ = data_.X.transpose() * sy_;
            state_.tuner.accepts += 1;
            accepts_total_ += 1;
        }
    }

    double log_post_quadratic(const Eigen::VectorXd& sy) const {
        return -0.5 * (sy - data_.X * state_.beta).squaredNorm() / state_.sigma2;
    }

    ModelData data_;
    PriorConfig prior_cfg_;
    SamplerConfig cfg_;
    ChainState state_;
    RngStream rng_;
    Eigen::MatrixXd xtx_;
    Eigen::VectorXd sy_;
    Eigen::VectorXd xt_sy_;
    std::vector<std::pair<int, double>> sd_path_;
    int iter_ = 0;
    int accepts_total_ = 0;
    int proposals_total_ = 0;
    std::function<void(std::string_view)> trace_;
};

/// Spike/slab scales from an unshrunk preliminary chain (500 kept draws
/// after 500 burn-in by default), sliced to the shrunk block.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> run_ssvs_calibration(
    const ModelData& data, const PriorConfig& prior_cfg, const SamplerConfig& cfg) {
    SamplerConfig pre_cfg = cfg;
    pre_cfg.n_iter = 1000;
    pre_cfg.n_burn = 500;
    pre_cfg.thin = 1;
    pre_cfg.seed = RngStream::derive_seed(cfg.seed, 0x5516u);
    PriorConfig none_cfg = prior_cfg;
    none_cfg.kind = PriorKind::None;
    MessSampler pre(data, none_cfg, pre_cfg, init_prior_state(none_cfg, data.k()));
    const PosteriorDraws draws = pre.run();
    const Eigen::Index off = prior_cfg.shrink_offset();
    auto [s0, s1] = ssvs_calibrate(draws.beta_draws.rightCols(data.k() - off), prior_cfg);
    return {std::move(s0), std::move(s1)};
}

/// Full chain. SSVS requires calibrated scales (run_ssvs_calibration) since
/// its state cannot be initialized otherwise.
inline PosteriorDraws run_mcmc(
    const ModelData& data, const PriorConfig& prior_cfg, const SamplerConfig& cfg,
    const std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& ssvs_scales = std::nullopt) {
    PriorState init;
    if (prior_cfg.kind == PriorKind::Ssvs) {
        if (!ssvs_scales)
            throw std::invalid_argument("run_mcmc: ssvs prior requires calibrated scales");
        init = init_ssvs_state(ssvs_scales->first, ssvs_scales->second);
    } else {
        init = init_prior_state(prior_cfg, data.k());
    }
    MessSampler sampler(data, prior_cfg, cfg, std::move(init));
    return sampler.run();
}

// ---------------------------------------------------------------------------
// Posterior summaries

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool significant = false;
};

struct SummaryTable {
    std::vector<ParameterSummary> rows;  // coefficients, then sigma2, then rho
    double cred_level = 0.8;
    double rho_median = 0.0;
    double sar_xi = 0.0;  // 1 - exp(median rho)
    double accept_rate = 0.0;
    double wall_seconds = 0.0;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline ParameterSummary summarize_column(std::string name, const Eigen::VectorXd& draws,
                                         double cred_level) {
    ParameterSummary s;
    s.name = std::move(name);
    const Eigen::Index t = draws.size();
    s.mean = draws.mean();
    s.sd = t > 1 ? std::sqrt((draws.array() - s.mean).square().sum() / static_cast<double>(t - 1))
                 : 0.0;
    std::vector<double> sorted(draws.data(), draws.data() + t);
    std::sort(sorted.begin(), sorted.end());
    const double tail = 0.5 * (1.0 - cred_level);
    s.median = quantile_sorted(sorted, 0.5);
    s.ci_lo = quantile_sorted(sorted, tail);
    s.ci_hi = quantile_sorted(sorted, 1.0 - tail);
    s.significant = s.ci_lo > 0.0 || s.ci_hi < 0.0;
    return s;
}

}  // namespace detail

/// Per-parameter mean, median, sd and an equal-tailed credible interval;
/// parameters whose interval excludes zero are flagged. The implied
/// conventional spatial coefficient is reported from the rho median.
inline SummaryTable summarize(const PosteriorDraws& draws, double cred_level = 0.8) {
    if (!(cred_level > 0.0) || !(cred_level < 1.0))
        throw std::invalid_argument("summarize: cred_level must lie in (0, 1)");
    SummaryTable table;
    table.cred_level = cred_level;
    const Eigen::Index k = draws.beta_draws.cols();
    table.rows.reserve(static_cast<std::size_t>(k) + 2);
    for (Eigen::Index c = 0; c < k; ++c) {
        std::string name = c < static_cast<Eigen::Index>(draws.column_names.size())
                               ? draws.column_names[c]
                               : "beta" + std::to_string(c);
        table.rows.push_back(
            detail::summarize_column(std::move(name), draws.beta_draws.col(c), cred_level));
    }
    table.rows.push_back(detail::summarize_column("sigma2", draws.sigma2_draws, cred_level));
    table.rows.push_back(detail::summarize_column("rho", draws.rho_draws, cred_level));
    table.rho_median = table.rows.back().median;
    table.sar_xi = sar_equivalent(table.rho_median);
    table.accept_rate = draws.accept_rate;
    table.wall_seconds = draws.wall_seconds;
    return table;
}

}  // namespace mess
