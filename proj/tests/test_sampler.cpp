#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "mess/sampler.hpp"
#include "mess/simstudy.hpp"
#include "oracles.hpp"

using mess::ModelData;
using mess::PriorConfig;
using mess::PriorKind;
using mess::RngStream;
using mess::SamplerConfig;

namespace {

ModelData small_dataset(int n, int k, std::uint64_t seed) {
    mess::DgpConfig dgp;
    dgp.n = n;
    dgp.k = k;
    dgp.q = std::max(0, std::min(k - 1, 2));
    dgp.knn = std::min(5, n - 1);
    RngStream rng(seed);
    return mess::generate_dataset(dgp, rng).data;
}

}  // namespace

TEST_CASE("residuals") {
    const ModelData data = small_dataset(30, 4, 11);

    // rho = 0, beta = 0 gives y back exactly
    REQUIRE(mess::residuals(data, Eigen::VectorXd::Zero(4), 0.0) == data.y);

    // least-squares fit leaves residuals orthogonal to the design
    const double rho = 0.8;
    const Eigen::VectorXd sy = mess::mess_apply(data.W, rho, data.y);
    const Eigen::VectorXd ls = (data.X.transpose() * data.X)
                                   .ldlt()
                                   .solve(data.X.transpose() * sy);
    const Eigen::VectorXd eps = mess::residuals(data, ls, rho);
    REQUIRE((data.X.transpose() * eps).lpNorm<Eigen::Infinity>() < 1e-8);

    // dense hand computation on a 5-observation model
    const ModelData tiny = small_dataset(5, 2, 12);
    const Eigen::MatrixXd Wd = tiny.W.dense();
    Eigen::VectorXd beta(2);
    beta << 0.3, -1.1;
    const Eigen::VectorXd want = oracle::dense_expm(0.6 * Wd) * tiny.y - tiny.X * beta;
    REQUIRE((mess::residuals(tiny, beta, 0.6) - want).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("draw_sigma2 matches the analytic inverse-gamma means") {
    SamplerConfig cfg;
    RngStream rng(21);
    const int n = 100;

    // zero residuals: IG(50.01, 0.01), mean 0.01 / 49.01
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    double acc = 0.0;
    const int draws = 50000;
    for (int i = 0; i < draws; ++i) acc += mess::draw_sigma2(zero, cfg, rng);
    REQUIRE(std::abs(acc / draws - 0.01 / 49.01) / (0.01 / 49.01) < 0.02);

    // eps'eps = 100: IG(50.01, 50.01), mean 50.01 / 49.01
    const Eigen::VectorXd unit = Eigen::VectorXd::Ones(n);  // squared norm 100
    acc = 0.0;
    for (int i = 0; i < draws; ++i) acc += mess::draw_sigma2(unit, cfg, rng);
    REQUIRE(std::abs(acc / draws - 50.01 / 49.01) / (50.01 / 49.01) < 0.02);

    // doubling N with eps'eps = N keeps the mean near 1 and halves the variance
    std::vector<double> v1(draws), v2(draws);
    const Eigen::VectorXd e1 = Eigen::VectorXd::Ones(100), e2 = Eigen::VectorXd::Ones(200);
    for (int i = 0; i < draws; ++i) v1[i] = mess::draw_sigma2(e1, cfg, rng);
    for (int i = 0; i < draws; ++i) v2[i] = mess::draw_sigma2(e2, cfg, rng);
    REQUIRE(std::abs(oracle::sample_mean(v1) - 1.0) < 0.02);
    REQUIRE(std::abs(oracle::sample_mean(v2) - 1.0) < 0.02);
    REQUIRE(oracle::sample_var(v2) / oracle::sample_var(v1) == Catch::Approx(0.5).margin(0.1));
}

TEST_CASE("draw_beta limits and dense oracle") {
    const ModelData data = small_dataset(60, 3, 31);
    RngStream rng(32);

    // flat-prior limit reduces to ordinary least squares
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, 1e12);
    const Eigen::VectorXd ols =
        (data.X.transpose() * data.X).ldlt().solve(data.X.transpose() * data.y);
    REQUIRE((mess::beta_posterior_mean(data, 0.0, 1.0, flat) - ols).lpNorm<Eigen::Infinity>() <
            1e-6);

    // dogmatic prior collapses the draw to zero
    const Eigen::VectorXd tight = Eigen::VectorXd::Constant(3, 1e-12);
    REQUIRE(mess::draw_beta(data, 0.0, 1.0, tight, rng).lpNorm<Eigen::Infinity>() < 1e-4);

    // dense-oracle check of mean over repeated draws
    Eigen::VectorXd prior(3);
    prior << 0.5, 2.0, 10.0;
    const double sigma2 = 1.7, rho = -0.4;
    Eigen::MatrixXd P = data.X.transpose() * data.X / sigma2;
    P += Eigen::MatrixXd(prior.cwiseInverse().asDiagonal());
    const Eigen::VectorXd b =
        data.X.transpose() * mess::mess_apply(data.W, rho, data.y) / sigma2;
    const Eigen::VectorXd want = P.ldlt().solve(b);

    const int n = 20000;
    Eigen::MatrixXd draws(n, 3);
    for (int i = 0; i < n; ++i)
        draws.row(i) = mess::draw_beta(data, rho, sigma2, prior, rng).transpose();
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    for (int j = 0; j < 3; ++j) {
        const double sd = std::sqrt((draws.col(j).array() - mean[j]).square().sum() / (n - 1));
        REQUIRE(std::abs(mean[j] - want[j]) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("log_post_rho against a dense computation") {
    const ModelData data = small_dataset(10, 3, 41);
    SamplerConfig cfg;
    Eigen::VectorXd beta(3);
    beta << 0.2, -0.7, 1.0;
    const double sigma2 = 0.9;

    REQUIRE(mess::log_post_rho(data, beta, sigma2, 0.3, cfg) ==
            mess::log_post_rho(data, beta, sigma2, 0.3, cfg));

    const Eigen::MatrixXd Wd = data.W.dense();
    auto dense_lp = [&](double rho) {
        const Eigen::VectorXd eps = oracle::dense_expm(rho * Wd) * data.y - data.X * beta;
        return -0.5 * eps.squaredNorm() / sigma2 - 0.5 * rho * rho / cfg.rho_prior_var;
    };
    for (const auto [r1, r2] : std::vector<std::pair<double, double>>{
             {0.5, -0.5}, {1.5, 0.1}, {-2.0, 2.0}}) {
        const double got = mess::log_post_rho(data, beta, sigma2, r1, cfg) -
                           mess::log_post_rho(data, beta, sigma2, r2, cfg);
        REQUIRE(got == Catch::Approx(dense_lp(r1) - dense_lp(r2)).margin(1e-7));
    }

    // with a symmetric proposal the acceptance ratio is just the posterior
    // difference; swapping the roles negates it exactly
    const double fwd = mess::log_post_rho(data, beta, sigma2, 0.8, cfg) -
                       mess::log_post_rho(data, beta, sigma2, -0.3, cfg);
    const double bwd = mess::log_post_rho(data, beta, sigma2, -0.3, cfg) -
                       mess::log_post_rho(data, beta, sigma2, 0.8, cfg);
    REQUIRE(fwd == -bwd);

    // prior-only limit: y = X beta exactly at rho = 0
    ModelData fit = data;
    fit.y = fit.X * beta;
    REQUIRE(mess::log_post_rho(fit, beta, 1.0, 0.0, cfg) == 0.0);
}

TEST_CASE("mh_step_rho endpoint behavior") {
    const ModelData data = small_dataset(12, 2, 51);
    SamplerConfig cfg;
    RngStream rng(52);

    mess::ChainState st;
    st.beta = Eigen::VectorXd::Zero(2);
    st.sigma2 = 1.0;
    st.rho = 0.4;
    st.tuner.sd = 0.0;  // proposal equals the current value; ratio is one
    for (int i = 0; i < 100; ++i) {
        const auto [rho, accepted] = mess::mh_step_rho(st, data, cfg, rng);
        REQUIRE(accepted);
        REQUIRE(rho == 0.4);
    }

    // a minus-infinity log ratio is always rejected: tiny sigma2 makes any
    // residual increase catastrophic
    mess::ChainState st2;
    st2.beta = (data.X.transpose() * data.X).ldlt().solve(data.X.transpose() * data.y);
    st2.sigma2 = 1e-300;
    st2.rho = 0.0;
    st2.tuner.sd = 0.5;
    for (int i = 0; i < 100; ++i) {
        const auto [rho, accepted] = mess::mh_step_rho(st2, data, cfg, rng);
        REQUIRE_FALSE(accepted);
        REQUIRE(rho == 0.0);
    }
}

TEST_CASE("mh_step_rho long-run acceptance matches an independent kernel") {
    const ModelData data = small_dataset(10, 3, 61);
    SamplerConfig cfg;
    Eigen::VectorXd beta(3);
    beta << 0.1, 0.4, -0.2;
    const double sigma2 = 1.2, sd = 0.6;

    // independent reference: dense filter, own loop, own stream
    const Eigen::MatrixXd Wd = data.W.dense();
    auto lp = [&](double rho) {
        const Eigen::VectorXd eps = oracle::dense_expm(rho * Wd) * data.y - data.X * beta;
        return -0.5 * eps.squaredNorm() / sigma2 - 0.5 * rho * rho / cfg.rho_prior_var;
    };
    RngStream ref_rng(62);
    double rho_ref = 0.0;
    long ref_accepts = 0;
    const int steps = 100000;
    for (int i = 0; i < steps; ++i) {
        const double prop = rho_ref + sd * ref_rng.normal();
        if (std::log(ref_rng.uniform_pos()) <= lp(prop) - lp(rho_ref)) {
            rho_ref = prop;
            ++ref_accepts;
        }
    }

    mess::ChainState st;
    st.beta = beta;
    st.sigma2 = sigma2;
    st.rho = 0.0;
    st.tuner.sd = sd;
    RngStream rng(63);
    long accepts = 0;
    for (int i = 0; i < steps; ++i)
        if (mess::mh_step_rho(st, data, cfg, rng).second) ++accepts;

    const double rate = static_cast<double>(accepts) / steps;
    const double ref_rate = static_cast<double>(ref_accepts) / steps;
    CAPTURE(rate, ref_rate);
    REQUIRE(std::abs(rate - ref_rate) < 0.02);
}

TEST_CASE("tune_proposal applies the window rule and freezes afterwards") {
    SamplerConfig cfg;  // window 50, factor 1.1, targets [0.2, 0.4]
    mess::ProposalTuner t{1.0, 5, 50};
    t = mess::tune_proposal(t, cfg, true);
    REQUIRE(t.sd == Catch::Approx(1.0 / 1.1));
    REQUIRE(t.proposals == 0);
    REQUIRE(t.accepts == 0);

    t = {1.0, 15, 50};
    t = mess::tune_proposal(t, cfg, true);
    REQUIRE(t.sd == 1.0);  // 0.3 sits inside the window

    t = {1.0, 45, 50};
    t = mess::tune_proposal(t, cfg, true);
    REQUIRE(t.sd == Catch::Approx(1.1));

    t = {1.0, 45, 50};
    t = mess::tune_proposal(t, cfg, false);  // outside the tuning phase
    REQUIRE(t.sd == 1.0);
    REQUIRE(t.proposals == 50);

    t = {1.0, 10, 49};
    t = mess::tune_proposal(t, cfg, true);  // window not yet full
    REQUIRE(t.sd == 1.0);
}

TEST_CASE("conjugate reduction: dogmatic rho and flat prior reproduce the closed form") {
    const int n = 100, k = 5;
    const ModelData data = small_dataset(n, k, 71);

    PriorConfig prior;
    prior.kind = PriorKind::None;
    prior.none_variance = 1e12;
    SamplerConfig cfg;
    cfg.n_iter = 6000;
    cfg.n_burn = 1000;
    cfg.rho_prior_var = 1e-300;  // pins rho at its zero start
    cfg.seed = 72;
    const mess::PosteriorDraws draws = mess::run_mcmc(data, prior, cfg);

    REQUIRE((draws.rho_draws.array() == 0.0).all());

    const Eigen::VectorXd ols =
        (data.X.transpose() * data.X).ldlt().solve(data.X.transpose() * data.y);
    const double ssr = (data.y - data.X * ols).squaredNorm();
    const double sigma2_mean = (cfg.sigma_b + 0.5 * ssr) /
                               (cfg.sigma_a + 0.5 * (n - k) - 1.0);
    const Eigen::MatrixXd cov_want =
        sigma2_mean * (data.X.transpose() * data.X).inverse();

    for (int j = 0; j < k; ++j) {
        const double se = oracle::batch_se(draws.beta_draws.col(j));
        REQUIRE(std::abs(draws.beta_draws.col(j).mean() - ols[j]) < 3.0 * se);
    }
    const double sig_se = oracle::batch_se(draws.sigma2_draws);
    REQUIRE(std::abs(draws.sigma2_draws.mean() - sigma2_mean) < 3.0 * sig_se);

    const Eigen::RowVectorXd mean = draws.beta_draws.colwise().mean();
    const Eigen::MatrixXd centered = draws.beta_draws.rowwise() - mean;
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / (draws.beta_draws.rows() - 1);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double scale = std::sqrt(cov_want(i, i) * cov_want(j, j));
            REQUIRE(std::abs(cov(i, j) - cov_want(i, j)) < 0.15 * scale);
        }
}

TEST_CASE("sweep order matches the posted routine") {
    const ModelData data = small_dataset(20, 3, 81);
    PriorConfig prior;
    prior.kind = PriorKind::Ng;
    SamplerConfig cfg;
    cfg.seed = 82;
    mess::MessSampler sampler(data, prior, cfg, mess::init_prior_state(prior, 3));
    std::vector<std::string> tags;
    sampler.set_trace([&](std::string_view tag) { tags.emplace_back(tag); });
    for (int i = 0; i < 3; ++i) sampler.sweep();
    REQUIRE(tags == std::vector<std::string>{"sigma2", "prior", "beta", "rho", "sigma2", "prior",
                                             "beta", "rho", "sigma2", "prior", "beta", "rho"});
}

TEST_CASE("thinning bookkeeping") {
    const ModelData data = small_dataset(20, 3, 91);
    PriorConfig prior;
    SamplerConfig cfg;
    cfg.n_iter = 12000;
    cfg.n_burn = 3000;
    cfg.thin = 3;
    cfg.seed = 92;
    const mess::PosteriorDraws draws = mess::run_mcmc(data, prior, cfg);
    REQUIRE(draws.beta_draws.rows() == 3000);
    REQUIRE(draws.sigma2_draws.size() == 3000);
    REQUIRE(draws.rho_draws.size() == 3000);
}

TEST_CASE("chains are deterministic given the seed") {
    const ModelData data = small_dataset(40, 6, 101);
    for (const PriorKind kind : {PriorKind::None, PriorKind::Ng, PriorKind::Dl}) {
        PriorConfig prior;
        prior.kind = kind;
        SamplerConfig cfg;
        cfg.n_iter = 400;
        cfg.n_burn = 200;
        cfg.seed = 102;
        const mess::PosteriorDraws a = mess::run_mcmc(data, prior, cfg);
        const mess::PosteriorDraws b = mess::run_mcmc(data, prior, cfg);
        REQUIRE(a.beta_draws == b.beta_draws);
        REQUIRE(a.sigma2_draws == b.sigma2_draws);
        REQUIRE(a.rho_draws == b.rho_draws);
        REQUIRE(a.accept_rate == b.accept_rate);
    }
}

TEST_CASE("every retained draw is finite with a positive variance") {
    const ModelData data = small_dataset(50, 8, 111);
    SamplerConfig cfg;
    cfg.n_iter = 600;
    cfg.n_burn = 300;
    cfg.seed = 112;
    for (const PriorKind kind :
         {PriorKind::None, PriorKind::Ssvs, PriorKind::Ng, PriorKind::Dl}) {
        PriorConfig prior;
        prior.kind = kind;
        std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> scales;
        if (kind == PriorKind::Ssvs) scales = mess::run_ssvs_calibration(data, prior, cfg);
        const mess::PosteriorDraws draws = mess::run_mcmc(data, prior, cfg, scales);
        REQUIRE(draws.beta_draws.allFinite());
        REQUIRE(draws.rho_draws.allFinite());
        REQUIRE((draws.sigma2_draws.array() > 0.0).all());
    }
}

TEST_CASE("ssvs requires calibrated scales") {
    const ModelData data = small_dataset(20, 3, 121);
    PriorConfig prior;
    prior.kind = PriorKind::Ssvs;
    SamplerConfig cfg;
    REQUIRE_THROWS_AS(mess::run_mcmc(data, prior, cfg), std::invalid_argument);
}

TEST_CASE("a shrinkage fit recovers the spatial filter") {
    mess::DgpConfig dgp;
    dgp.k = 50;
    dgp.q = 10;
    RngStream rng(131);
    const mess::SyntheticDataset ds = mess::generate_dataset(dgp, rng);
    PriorConfig prior;
    prior.kind = PriorKind::Ng;
    SamplerConfig cfg;
    cfg.seed = 132;
    const mess::PosteriorDraws draws = mess::run_mcmc(ds.data, prior, cfg);
    const mess::SummaryTable summary = mess::summarize(draws);

    Eigen::VectorXd beta_med(ds.data.k());
    for (Eigen::Index c = 0; c < ds.data.k(); ++c) beta_med[c] = summary.rows[c].median;
    REQUIRE(mess::rmse_point(beta_med, ds.beta_true) < 0.05);
    REQUIRE(std::abs(summary.rho_median - ds.rho_true) < 0.1);
}

TEST_CASE("summarize") {
    mess::PosteriorDraws draws;
    draws.beta_draws = Eigen::MatrixXd::Constant(100, 1, 3.0);
    draws.sigma2_draws = Eigen::VectorXd::Ones(100);
    draws.rho_draws = Eigen::VectorXd::Zero(100);
    draws.column_names = {"const"};
    const mess::SummaryTable constant = mess::summarize(draws);
    REQUIRE(constant.rows[0].mean == 3.0);
    REQUIRE(constant.rows[0].median == 3.0);
    REQUIRE(constant.rows[0].sd == 0.0);
    REQUIRE(constant.rows[0].significant);
    REQUIRE(constant.sar_xi == 0.0);

    // symmetric +-1 draws straddle zero
    for (int i = 0; i < 100; ++i) draws.beta_draws(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
    const mess::SummaryTable sym = mess::summarize(draws);
    REQUIRE_FALSE(sym.rows[0].significant);
    REQUIRE(sym.rows[0].ci_lo < 0.0);
    REQUIRE(sym.rows[0].ci_hi > 0.0);

    // standard-normal sample: the 80 percent interval sits near +-1.2816
    RngStream rng(141);
    draws.beta_draws.resize(1000, 1);
    for (int i = 0; i < 1000; ++i) draws.beta_draws(i, 0) = rng.normal();
    draws.sigma2_draws = Eigen::VectorXd::Ones(1000);
    draws.rho_draws = Eigen::VectorXd::Zero(1000);
    const mess::SummaryTable normal = mess::summarize(draws, 0.8);
    REQUIRE(normal.rows[0].ci_lo == Catch::Approx(-1.2816).margin(0.12));
    REQUIRE(normal.rows[0].ci_hi == Catch::Approx(1.2816).margin(0.12));

    REQUIRE_THROWS_AS(mess::summarize(draws, 1.5), std::invalid_argument);
}
