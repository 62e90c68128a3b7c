#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mess/report.hpp"
#include "mess/sampler.hpp"
#include "mess/simstudy.hpp"
#include "mess/spatial.hpp"

namespace mess {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline double parse_cell(const std::string& cell, const std::string& file, std::size_t data_row,
                         const std::string& column) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (cell.empty() || end == begin || (end && *end != '\0'))
        throw std::invalid_argument(file + ": row " + std::to_string(data_row) + ", column '" +
                                    column + "': cannot parse '" + cell + "'");
    return v;
}

}  // namespace detail

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Comma-separated numeric file with a mandatory header row. Parse failures
/// name the offending 1-based data row and the column.
inline CsvTable read_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
    table.columns = detail::split_csv_line(line);
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++data_row;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != table.columns.size())
            throw std::invalid_argument(path + ": row " + std::to_string(data_row) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(table.columns.size()));
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            row[c] = detail::parse_cell(cells[c], path, data_row, table.columns[c]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Coordinates CSV with header id,x,y.
inline Coordinates load_coordinates(const std::string& path) {
    const CsvTable t = read_numeric_csv(path);
    if (t.columns.size() != 3 || t.columns[0] != "id" || t.columns[1] != "x" ||
        t.columns[2] != "y")
        throw std::invalid_argument(path + ": expected header id,x,y");
    Coordinates coords;
    coords.x.reserve(t.rows.size());
    coords.y.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        coords.x.push_back(row[1]);
        coords.y.push_back(row[2]);
    }
    return coords;
}

/// Weight matrix from CSV triplets i,j,w with 0-based indices; validated
/// against the row-stochastic zero-diagonal invariants on load.
inline SpatialWeights load_weights_csv(const std::string& path) {
    const CsvTable t = read_numeric_csv(path);
    if (t.columns.size() != 3 || t.columns[0] != "i" || t.columns[1] != "j" ||
        t.columns[2] != "w")
        throw std::invalid_argument(path + ": expected header i,j,w");
    std::size_t n = 0;
    for (const auto& row : t.rows) {
        if (row[0] < 0 || row[1] < 0)
            throw std::invalid_argument(path + ": negative index in weight triplet");
        n = std::max({n, static_cast<std::size_t>(row[0]) + 1,
                      static_cast<std::size_t>(row[1]) + 1});
    }
    std::vector<std::vector<SpatialWeights::Entry>> rows(n);
    for (const auto& row : t.rows)
        rows[static_cast<std::size_t>(row[0])].push_back(
            {static_cast<int>(row[1]), row[2]});
    SpatialWeights W(n, std::move(rows));
    W.validate();
    return W;
}

struct IngestOptions {
    std::string y_path;
    std::string x_path;
    std::string coords_path;   // either coordinates ...
    std::string weights_path;  // ... or a weight matrix
    int knn = 5;
    bool durbin = false;
};

/// Spatial-Durbin expansion: appends the spatial lags of all non-constant
/// columns, names prefixed "W ". The intercept is never lagged.
inline ModelData expand_durbin(const ModelData& data) {
    data.validate();
    const Eigen::Index k = data.k();
    ModelData out = data;
    out.durbin = true;
    if (k == 1) return out;
    out.X.resize(data.X.rows(), 2 * k - 1);
    out.X.leftCols(k) = data.X;
    out.X.rightCols(k - 1) = spatial_lag(data.W, data.X.rightCols(k - 1));
    out.column_names = data.column_names;
    for (Eigen::Index c = 1; c < k; ++c)
        out.column_names.push_back("W " + data.column_names[static_cast<std::size_t>(c)]);
    return out;
}

/// Build a validated ModelData from CSV inputs. An intercept column is
/// prepended unless the first design column is already the constant 1.
inline ModelData ingest_csv(const IngestOptions& opt) {
    if (opt.y_path.empty() || opt.x_path.empty())
        throw std::invalid_argument("ingest: y and x files are required");
    if (opt.coords_path.empty() == opt.weights_path.empty())
        throw std::invalid_argument("ingest: exactly one of coordinates or weights is required");

    const CsvTable yt = read_numeric_csv(opt.y_path);
    if (yt.columns.empty()) throw std::invalid_argument(opt.y_path + ": no columns");
    const Eigen::Index n = static_cast<Eigen::Index>(yt.rows.size());
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = yt.rows[static_cast<std::size_t>(i)][0];

    const CsvTable xt = read_numeric_csv(opt.x_path);
    if (static_cast<Eigen::Index>(xt.rows.size()) != n)
        throw std::invalid_argument("ingest: y and x row counts differ");
    const Eigen::Index p = static_cast<Eigen::Index>(xt.columns.size());
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < p; ++c) X(i, c) = xt.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];

    ModelData data;
    data.y = std::move(y);
    const bool has_intercept = n > 0 && (X.col(0).array() == 1.0).all();
    if (has_intercept) {
        data.X = std::move(X);
        data.column_names = xt.columns;
    } else {
        data.X.resize(n, p + 1);
        data.X.col(0).setOnes();
        data.X.rightCols(p) = X;
        data.column_names.reserve(static_cast<std::size_t>(p) + 1);
        data.column_names.emplace_back("const");
        for (const auto& name : xt.columns) data.column_names.push_back(name);
    }

    if (!opt.coords_path.empty()) {
        const Coordinates coords = load_coordinates(opt.coords_path);
        if (static_cast<Eigen::Index>(coords.size()) != n)
            throw std::invalid_argument("ingest: coordinate count differs from y");
        data.W = build_knn_weights(coords, opt.knn);
    } else {
        data.W = load_weights_csv(opt.weights_path);
        if (data.W.n() != static_cast<std::size_t>(n))
            throw std::invalid_argument("ingest: weight matrix size differs from y");
    }
    data.validate();
    return opt.durbin ? expand_durbin(data) : data;
}

// ---------------------------------------------------------------------------
// Writers. All floating-point output uses %.17g so that a rerun with the
// same seed is byte-identical and values round-trip exactly through strtod.

namespace detail {

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << content;
}

}  // namespace detail

inline void write_draws_csv(const PosteriorDraws& draws, const std::string& path) {
    std::ostringstream os;
    for (Eigen::Index c = 0; c < draws.beta_draws.cols(); ++c) {
        const auto& names = draws.column_names;
        os << (c < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(c)]
                                                           : "beta" + std::to_string(c))
           << ',';
    }
    os << "sigma2,rho\n";
    for (Eigen::Index r = 0; r < draws.beta_draws.rows(); ++r) {
        for (Eigen::Index c = 0; c < draws.beta_draws.cols(); ++c)
            os << detail::fmt_full(draws.beta_draws(r, c)) << ',';
        os << detail::fmt_full(draws.sigma2_draws[r]) << ',' << detail::fmt_full(draws.rho_draws[r])
           << '\n';
    }
    detail::write_file(path, os.str());
}

inline nlohmann::json prior_config_json(const PriorConfig& cfg) {
    return nlohmann::json{
        {"kind", cfg.kind_name()},
        {"ng_theta", cfg.ng_theta},
        {"ng_d0", cfg.ng_d0},
        {"ng_d1", cfg.ng_d1},
        {"ng_variance", cfg.ng_variance == NgVarianceMode::Psi ? "psi" : "scaled"},
        {"dl_a", cfg.dl_a},
        {"dl_a_auto", cfg.dl_a_auto},
        {"ssvs_omega", cfg.ssvs_omega},
        {"ssvs_spike_mult", cfg.ssvs_spike_mult},
        {"ssvs_slab_mult", cfg.ssvs_slab_mult},
        {"none_variance", cfg.none_variance},
        {"shrink_intercept", cfg.shrink_intercept}};
}

inline nlohmann::json sampler_config_json(const SamplerConfig& cfg) {
    return nlohmann::json{{"n_iter", cfg.n_iter},
                          {"n_burn", cfg.n_burn},
                          {"thin", cfg.thin},
                          {"rho_prior_var", cfg.rho_prior_var},
                          {"sigma_a", cfg.sigma_a},
                          {"sigma_b", cfg.sigma_b},
                          {"initial_proposal_sd", cfg.initial_proposal_sd},
                          {"target_accept_low", cfg.target_accept_low},
                          {"target_accept_high", cfg.target_accept_high},
                          {"tune_every", cfg.tune_every},
                          {"tune_factor", cfg.tune_factor},
                          {"seed", cfg.seed}};
}

inline void write_summary_json(const SummaryTable& summary, const PosteriorDraws& draws,
                               const std::string& path) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& row : summary.rows)
        params.push_back(nlohmann::json{{"name", row.name},
                                        {"mean", row.mean},
                                        {"median", row.median},
                                        {"sd", row.sd},
                                        {"ci_lo", row.ci_lo},
                                        {"ci_hi", row.ci_hi},
                                        {"significant", row.significant}});
    nlohmann::json sd_path = nlohmann::json::array();
    for (const auto& [it, sd] : draws.proposal_sd_path)
        sd_path.push_back(nlohmann::json::array({it, sd}));
    const nlohmann::json doc{{"cred_level", summary.cred_level},
                             {"acceptance_rate", draws.accept_rate},
                             {"runtime_seconds", draws.wall_seconds},
                             {"proposal_sd_path", sd_path},
                             {"final_proposal_sd", draws.final_proposal_sd},
                             {"rho_median", summary.rho_median},
                             {"sar_equivalent_xi", summary.sar_xi},
                             {"parameters", params},
                             {"prior_config", prior_config_json(draws.prior_config)},
                             {"sampler_config", sampler_config_json(draws.sampler_config)}};
    detail::write_file(path, doc.dump(2) + "\n");
}

/// Emit a synthetic dataset as y.csv, x.csv, coords.csv and truth.csv.
inline void write_dataset_csvs(const SyntheticDataset& ds, const Coordinates& coords,
                               const std::string& dir) {
    std::ostringstream ys;
    ys << "y\n";
    for (Eigen::Index i = 0; i < ds.data.y.size(); ++i)
        ys << detail::fmt_full(ds.data.y[i]) << '\n';
    detail::write_file(dir + "/y.csv", ys.str());

    std::ostringstream xs;
    for (std::size_t c = 0; c < ds.data.column_names.size(); ++c)
        xs << ds.data.column_names[c] << (c + 1 < ds.data.column_names.size() ? ',' : '\n');
    for (Eigen::Index i = 0; i < ds.data.X.rows(); ++i)
        for (Eigen::Index c = 0; c < ds.data.X.cols(); ++c)
            xs << detail::fmt_full(ds.data.X(i, c)) << (c + 1 < ds.data.X.cols() ? ',' : '\n');
    detail::write_file(dir + "/x.csv", xs.str());

    std::ostringstream cs;
    cs << "id,x,y\n";
    for (std::size_t i = 0; i < coords.size(); ++i)
        cs << i << ',' << detail::fmt_full(coords.x[i]) << ',' << detail::fmt_full(coords.y[i])
           << '\n';
    detail::write_file(dir + "/coords.csv", cs.str());

    std::ostringstream ts;
    ts << "parameter,value\n";
    for (Eigen::Index c = 0; c < ds.beta_true.size(); ++c)
        ts << "beta_" << c << ',' << detail::fmt_full(ds.beta_true[c]) << '\n';
    ts << "rho," << detail::fmt_full(ds.rho_true) << '\n';
    ts << "sigma2," << detail::fmt_full(ds.sigma2_true) << '\n';
    detail::write_file(dir + "/truth.csv", ts.str());
}

inline void write_study_csv(const StudyReport& report, const std::string& path) {
    detail::write_file(path, report_tables(report, TableFormat::Csv));
}

/// Per-replication raw metrics for audit; timing is deliberately excluded so
/// the file is reproducible.
inline void write_study_raw_csv(const StudyReport& report, const std::string& path) {
    std::ostringstream os;
    os << "scenario,replication,prior,rmse_beta,rmse_sigma2,rmse_rho,"
          "rmse_dr_beta,rmse_dr_sigma2,rmse_dr_rho,aborted,capped\n";
    for (const auto& r : report.raw) {
        os << r.scenario << ',' << r.replication << ',' << r.prior << ','
           << detail::fmt_full(r.rmse_beta) << ',' << detail::fmt_full(r.rmse_sigma2) << ','
           << detail::fmt_full(r.rmse_rho) << ',' << detail::fmt_full(r.rmse_dr_beta) << ','
           << detail::fmt_full(r.rmse_dr_sigma2) << ',' << detail::fmt_full(r.rmse_dr_rho) << ','
           << (r.aborted ? 1 : 0) << ',' << (r.capped ? 1 : 0) << '\n';
    }
    detail::write_file(path, os.str());
}

/// Rebuild a StudyReport (cells only) from the long-format CSV.
inline StudyReport load_study_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line) !=
                                       std::vector<std::string>{"k", "q", "prior", "metric",
                                                                "value", "is_min"})
        throw std::invalid_argument(path + ": expected header k,q,prior,metric,value,is_min");
    StudyReport report;
    std::map<std::tuple<int, int, std::string>, std::size_t> index;
    std::map<std::pair<int, int>, int> scenario_ids;
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++data_row;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 6)
            throw std::invalid_argument(path + ": row " + std::to_string(data_row) +
                                        ": expected 6 cells");
        const int k = static_cast<int>(detail::parse_cell(cells[0], path, data_row, "k"));
        const int q = static_cast<int>(detail::parse_cell(cells[1], path, data_row, "q"));
        const std::string& prior = cells[2];
        const std::string& metric = cells[3];
        const double value = detail::parse_cell(cells[4], path, data_row, "value");
        const auto key = std::make_tuple(k, q, prior);
        if (!index.count(key)) {
            index[key] = report.cells.size();
            const auto scen_key = std::make_pair(k, q);
            if (!scenario_ids.count(scen_key))
                scenario_ids[scen_key] = static_cast<int>(scenario_ids.size());
            StudyCell cell;
            cell.k = k;
            cell.q = q;
            cell.prior = prior;
            cell.scenario = scenario_ids[scen_key];
            report.cells.push_back(std::move(cell));
        }
        StudyCell& cell = report.cells[index[key]];
        if (metric == "rmse_beta") cell.rmse_beta = value;
        else if (metric == "rmse_sigma2") cell.rmse_sigma2 = value;
        else if (metric == "rmse_rho") cell.rmse_rho = value;
        else if (metric == "rmse_dr_beta") cell.rmse_dr_beta = value;
        else if (metric == "rmse_dr_sigma2") cell.rmse_dr_sigma2 = value;
        else if (metric == "rmse_dr_rho") cell.rmse_dr_rho = value;
        else if (metric == "failures") cell.failures = static_cast<int>(value);
        else if (metric == "reps_used") cell.reps_used = static_cast<int>(value);
        else throw std::invalid_argument(path + ": unknown metric '" + metric + "'");
    }
    // scenario ids follow (k, q) grouping order; relative time is not stored
    for (auto& cell : report.cells)
        cell.relative_time = std::numeric_limits<double>::quiet_NaN();
    return report;
}

}  // namespace mess
