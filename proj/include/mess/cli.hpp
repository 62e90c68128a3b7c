#pragma once

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mess/io.hpp"
#include "mess/report.hpp"
#include "mess/sampler.hpp"
#include "mess/simstudy.hpp"

namespace mess {

/// Replication parallelism: MESS_SHRINK_THREADS caps the worker count,
/// otherwise the hardware concurrency is used.
inline int default_thread_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("MESS_SHRINK_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

struct FitConfig {
    IngestOptions ingest;
    PriorConfig prior;
    SamplerConfig sampler;
    std::string out_dir = ".";
    double cred_level = 0.8;
    std::string config_echo;  // written verbatim to config_echo.txt when set
};

struct SimulateConfig {
    DgpConfig dgp;
    std::string out_dir = ".";
    std::string config_echo;
};

struct StudyConfig {
    std::vector<int> k_grid = {50, 100, 150, 200};
    std::vector<int> q_grid = {10, 20};
    std::vector<PriorConfig> priors;  // defaults to none, ssvs, ng, dl
    DgpConfig dgp;                    // n / knn / sigma2 / rho_sd template
    SamplerConfig sampler;
    int replications = 10;
    int threads = 0;  // 0 -> default_thread_count()
    bool write_raw = false;
    std::string out_dir = ".";
    std::string config_echo;
};

struct ReportConfig {
    std::string in_path;
    std::string out_dir = ".";
};

namespace detail {

inline void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw std::invalid_argument("output directory not writable: " + dir);
}

inline void write_config_echo(const std::string& dir, const std::string& echo) {
    if (!echo.empty()) mess::detail::write_file(dir + "/config_echo.txt", echo);
}

template <typename Fn>
int run_guarded(Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace detail

/// ingest -> optional Durbin expansion -> optional SSVS calibration ->
/// chain -> summary. Writes draws.csv, summary.json and fit_table.txt.
inline int cmd_fit(const FitConfig& cfg) {
    return detail::run_guarded([&]() {
        detail::ensure_out_dir(cfg.out_dir);
        detail::write_config_echo(cfg.out_dir, cfg.config_echo);
        cfg.prior.validate();
        cfg.sampler.validate();
        const ModelData data = ingest_csv(cfg.ingest);

        std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> scales;
        if (cfg.prior.kind == PriorKind::Ssvs)
            scales = run_ssvs_calibration(data, cfg.prior, cfg.sampler);

        const PosteriorDraws draws = run_mcmc(data, cfg.prior, cfg.sampler, scales);
        const SummaryTable summary = summarize(draws, cfg.cred_level);

        write_draws_csv(draws, cfg.out_dir + "/draws.csv");
        write_summary_json(summary, draws, cfg.out_dir + "/summary.json");
        const std::string table = fit_table(summary, cfg.prior.label());
        detail::write_file(cfg.out_dir + "/fit_table.txt", table);
        std::cout << table;
    });
}

/// Draw one synthetic dataset and emit y.csv, x.csv, coords.csv, truth.csv.
inline int cmd_simulate(const SimulateConfig& cfg) {
    return detail::run_guarded([&]() {
        detail::ensure_out_dir(cfg.out_dir);
        detail::write_config_echo(cfg.out_dir, cfg.config_echo);
        cfg.dgp.validate();
        RngStream rng(cfg.dgp.seed);
        const SyntheticDataset ds = generate_dataset(cfg.dgp, rng);
        write_dataset_csvs(ds, ds.coords, cfg.out_dir);
        std::cout << "wrote dataset: n=" << cfg.dgp.n << " k=" << cfg.dgp.k << " q=" << cfg.dgp.q
                  << " rho=" << ds.rho_true << '\n';
    });
}

/// Scenario grid study; writes study_report.csv, study_tables.txt and
/// optionally study_raw.csv.
inline int cmd_study(const StudyConfig& cfg) {
    return detail::run_guarded([&]() {
        detail::ensure_out_dir(cfg.out_dir);
        detail::write_config_echo(cfg.out_dir, cfg.config_echo);
        std::vector<PriorConfig> priors = cfg.priors;
        if (priors.empty()) {
            for (PriorKind kind :
                 {PriorKind::None, PriorKind::Ssvs, PriorKind::Ng, PriorKind::Dl}) {
                PriorConfig p;
                p.kind = kind;
                priors.push_back(p);
            }
        }
        std::vector<StudyScenario> scenarios;
        for (int k : cfg.k_grid)
            for (int q : cfg.q_grid) {
                StudyScenario s;
                s.dgp = cfg.dgp;
                s.dgp.k = k;
                s.dgp.q = q;
                s.priors = priors;
                scenarios.push_back(std::move(s));
            }
        const int threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
        const StudyReport report =
            run_study(scenarios, cfg.replications, cfg.dgp.seed, cfg.sampler, threads);
        write_study_csv(report, cfg.out_dir + "/study_report.csv");
        if (cfg.write_raw) write_study_raw_csv(report, cfg.out_dir + "/study_raw.csv");
        const std::string tables = report_tables(report, TableFormat::Text);
        detail::write_file(cfg.out_dir + "/study_tables.txt", tables);
        std::cout << tables;
    });
}

/// Re-render the text tables from a previously written study_report.csv.
inline int cmd_report(const ReportConfig& cfg) {
    return detail::run_guarded([&]() {
        detail::ensure_out_dir(cfg.out_dir);
        const StudyReport report = load_study_csv(cfg.in_path);
        const std::string tables = report_tables(report, TableFormat::Text);
        detail::write_file(cfg.out_dir + "/study_tables.txt", tables);
        std::cout << tables;
    });
}

}  // namespace mess
