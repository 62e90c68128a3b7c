#include <CLI11.hpp>
#include <string>
#include <vector>

#include "mess/cli.hpp"

namespace {

// Shared sampler/prior flag bundle for subcommands that run chains.
struct ChainFlags {
    std::string prior = "none";
    double ng_theta = 0.1;
    std::string dl_a = "auto";
    std::string ng_variance = "psi";
    double ssvs_omega = 0.5;
    double none_variance = 1000.0;
    bool no_shrink_intercept = false;
    int iters = 2000;
    int burn = 1000;
    int thin = 1;
    double rho_prior_var = 10.0;
    double proposal_sd = 0.1;
    std::uint64_t seed = 20260101;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--prior", prior, "shrinkage prior")
            ->check(CLI::IsMember({"none", "ssvs", "ng", "dl"}));
        cmd->add_option("--ng-theta", ng_theta, "normal-gamma theta");
        cmd->add_option("--dl-a", dl_a, "dirichlet-laplace a (number or 'auto' for 1/K)");
        cmd->add_option("--ng-variance", ng_variance,
                        "normal-gamma prior variance: psi or scaled (2 psi / lambda^2)")
            ->check(CLI::IsMember({"psi", "scaled"}));
        cmd->add_option("--ssvs-omega", ssvs_omega, "prior inclusion probability");
        cmd->add_option("--none-variance", none_variance, "diffuse prior variance");
        cmd->add_flag("--no-shrink-intercept", no_shrink_intercept,
                      "exempt the intercept from shrinkage");
        cmd->add_option("--iters", iters, "total MCMC iterations");
        cmd->add_option("--burn", burn, "burn-in iterations");
        cmd->add_option("--thin", thin, "keep every thin-th draw");
        cmd->add_option("--rho-prior-var", rho_prior_var, "variance c of the rho prior");
        cmd->add_option("--proposal-sd", proposal_sd, "initial MH proposal sd");
        cmd->add_option("--seed", seed, "RNG seed");
    }

    mess::PriorConfig prior_config() const {
        mess::PriorConfig p;
        p.kind = mess::prior_kind_from_name(prior);
        p.ng_theta = ng_theta;
        p.ng_variance = ng_variance == "scaled" ? mess::NgVarianceMode::TwoPsiOverLambda2
                                                : mess::NgVarianceMode::Psi;
        if (dl_a == "auto") {
            p.dl_a_auto = true;
        } else {
            p.dl_a_auto = false;
            p.dl_a = std::stod(dl_a);
        }
        p.ssvs_omega = ssvs_omega;
        p.none_variance = none_variance;
        p.shrink_intercept = !no_shrink_intercept;
        return p;
    }

    mess::SamplerConfig sampler_config() const {
        mess::SamplerConfig s;
        s.n_iter = iters;
        s.n_burn = burn;
        s.thin = thin;
        s.rho_prior_var = rho_prior_var;
        s.initial_proposal_sd = proposal_sd;
        s.seed = seed;
        return s;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian matrix-exponential spatial regression with shrinkage priors"};
    app.require_subcommand(1);

    // fit -------------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "estimate a model from CSV inputs");
    fit->set_config("--config");
    ChainFlags fit_flags;
    fit_flags.add_options(fit);
    std::string fit_y, fit_x, fit_coords, fit_weights, fit_out = ".";
    int fit_knn = 5;
    bool fit_durbin = false;
    double fit_cred = 0.8;
    fit->add_option("--y", fit_y, "response CSV")->required();
    fit->add_option("--x", fit_x, "design CSV")->required();
    fit->add_option("--coords", fit_coords, "coordinates CSV (id,x,y)");
    fit->add_option("--weights", fit_weights, "weight triplets CSV (i,j,w)");
    fit->add_option("--knn", fit_knn, "nearest neighbors when building W from coordinates");
    fit->add_flag("--durbin", fit_durbin, "append spatial lags of the covariates");
    fit->add_option("--cred-level", fit_cred, "credible interval level");
    fit->add_option("--out-dir", fit_out, "output directory");

    // simulate --------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "draw one synthetic dataset");
    sim->set_config("--config");
    mess::SimulateConfig sim_cfg;
    sim->add_option("--n", sim_cfg.dgp.n, "observations");
    sim->add_option("--k", sim_cfg.dgp.k, "design columns including the intercept");
    sim->add_option("--q", sim_cfg.dgp.q, "nonzero slope coefficients");
    sim->add_option("--sigma2", sim_cfg.dgp.sigma2_true, "noise variance");
    sim->add_option("--rho-sd", sim_cfg.dgp.rho_sd, "sd of the spatial parameter draw");
    sim->add_option("--knn", sim_cfg.dgp.knn, "nearest neighbors for W");
    sim->add_option("--seed", sim_cfg.dgp.seed, "RNG seed");
    sim->add_option("--out-dir", sim_cfg.out_dir, "output directory");

    // study -----------------------------------------------------------------
    auto* study = app.add_subcommand("study", "replicated prior-comparison study");
    study->set_config("--config");
    ChainFlags study_flags;
    study_flags.add_options(study);
    mess::StudyConfig study_cfg;
    study->add_option("--replications", study_cfg.replications, "replications per scenario");
    study->add_option("--k-grid", study_cfg.k_grid, "scenario K values")->delimiter(',');
    study->add_option("--q-grid", study_cfg.q_grid, "scenario q values")->delimiter(',');
    std::vector<std::string> study_priors;
    study->add_option("--priors", study_priors, "priors to compare")->delimiter(',');
    study->add_option("--n", study_cfg.dgp.n, "observations per dataset");
    study->add_option("--knn", study_cfg.dgp.knn, "nearest neighbors for W");
    study->add_option("--threads", study_cfg.threads, "worker threads (0 = auto)");
    study->add_flag("--raw", study_cfg.write_raw, "persist per-replication metrics");
    study->add_option("--out-dir", study_cfg.out_dir, "output directory");

    // report ----------------------------------------------------------------
    auto* rep = app.add_subcommand("report", "re-render tables from study_report.csv");
    mess::ReportConfig rep_cfg;
    rep->add_option("--in", rep_cfg.in_path, "study_report.csv path")->required();
    rep->add_option("--out-dir", rep_cfg.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) {
            mess::FitConfig cfg;
            cfg.ingest.y_path = fit_y;
            cfg.ingest.x_path = fit_x;
            cfg.ingest.coords_path = fit_coords;
            cfg.ingest.weights_path = fit_weights;
            cfg.ingest.knn = fit_knn;
            cfg.ingest.durbin = fit_durbin;
            cfg.prior = fit_flags.prior_config();
            cfg.sampler = fit_flags.sampler_config();
            cfg.cred_level = fit_cred;
            cfg.out_dir = fit_out;
            cfg.config_echo = fit->config_to_str(true, true);
            return mess::cmd_fit(cfg);
        }
        if (sim->parsed()) {
            sim_cfg.config_echo = sim->config_to_str(true, true);
            return mess::cmd_simulate(sim_cfg);
        }
        if (study->parsed()) {
            study_cfg.sampler = study_flags.sampler_config();
            study_cfg.dgp.seed = study_flags.seed;
            for (const auto& name : study_priors) {
                ChainFlags f = study_flags;
                f.prior = name;
                study_cfg.priors.push_back(f.prior_config());
            }
            study_cfg.config_echo = study->config_to_str(true, true);
            return mess::cmd_study(study_cfg);
        }
        if (rep->parsed()) return mess::cmd_report(rep_cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
