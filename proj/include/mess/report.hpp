#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mess/sampler.hpp"
#include "mess/simstudy.hpp"

namespace mess {

enum class TableFormat { Text, Csv };

namespace detail {

inline std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

struct MetricRef {
    const char* name;
    double StudyCell::* field;
};

inline const std::vector<MetricRef>& study_metrics() {
    static const std::vector<MetricRef> m = {
        {"rmse_beta", &StudyCell::rmse_beta},       {"rmse_sigma2", &StudyCell::rmse_sigma2},
        {"rmse_rho", &StudyCell::rmse_rho},         {"rmse_dr_beta", &StudyCell::rmse_dr_beta},
        {"rmse_dr_sigma2", &StudyCell::rmse_dr_sigma2}, {"rmse_dr_rho", &StudyCell::rmse_dr_rho}};
    return m;
}

/// Minimum finite value of one metric among the priors of one scenario.
inline double scenario_min(const StudyReport& report, int scenario, double StudyCell::* field) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : report.cells)
        if (c.scenario == scenario && std::isfinite(c.*field)) best = std::min(best, c.*field);
    return best;
}

inline std::string render_value(double v, double cap, bool is_min) {
    if (!std::isfinite(v)) return "n/a";
    if (v > cap) return ">" + fmt4(cap).substr(0, fmt4(cap).find('.'));
    std::string s = fmt4(v);
    if (is_min) s = "*" + s + "*";
    return s;
}

}  // namespace detail

/// Scenario-by-prior error grid. The text form groups priors under each
/// (K, q) scenario with the per-scenario minima starred and values beyond
/// the sigma2 cap printed as ">10"; the CSV form is long format
/// (k,q,prior,metric,value,is_min). Timing appears only in the text table,
/// keeping the CSV reproducible byte for byte under a fixed seed.
inline std::string report_tables(const StudyReport& report, TableFormat format) {
    std::ostringstream os;
    if (format == TableFormat::Csv) {
        os << "k,q,prior,metric,value,is_min\n";
        for (const auto& c : report.cells) {
            for (const auto& m : detail::study_metrics()) {
                const double v = c.*(m.field);
                const bool is_min =
                    std::isfinite(v) && v == detail::scenario_min(report, c.scenario, m.field);
                os << c.k << ',' << c.q << ',' << c.prior << ',' << m.name << ','
                   << detail::fmt_full(v) << ',' << (is_min ? 1 : 0) << '\n';
            }
            os << c.k << ',' << c.q << ',' << c.prior << ",failures," << c.failures << ",0\n";
            os << c.k << ',' << c.q << ',' << c.prior << ",reps_used," << c.reps_used << ",0\n";
        }
        return os.str();
    }

    const std::size_t w = 12;
    auto header = [&](const char* title, const char* b, const char* s, const char* r) {
        os << title << '\n';
        os << detail::pad("scenario", 14) << detail::pad("prior", 7) << detail::pad(b, w)
           << detail::pad(s, w) << detail::pad(r, w) << detail::pad("time", w)
           << detail::pad("fail", 5) << '\n';
    };
    auto block = [&](bool draws) {
        int last_scenario = -1;
        for (const auto& c : report.cells) {
            std::string scen;
            if (c.scenario != last_scenario) {
                scen = "K=" + std::to_string(c.k) + ", q=" + std::to_string(c.q);
                last_scenario = c.scenario;
            }
            const double vb = draws ? c.rmse_dr_beta : c.rmse_beta;
            const double vs = draws ? c.rmse_dr_sigma2 : c.rmse_sigma2;
            const double vr = draws ? c.rmse_dr_rho : c.rmse_rho;
            auto fb = draws ? &StudyCell::rmse_dr_beta : &StudyCell::rmse_beta;
            auto fs = draws ? &StudyCell::rmse_dr_sigma2 : &StudyCell::rmse_sigma2;
            auto fr = draws ? &StudyCell::rmse_dr_rho : &StudyCell::rmse_rho;
            os << detail::pad(scen, 14) << detail::pad(c.prior, 7)
               << detail::pad(detail::render_value(
                                  vb, report.sigma2_cap,
                                  std::isfinite(vb) &&
                                      vb == detail::scenario_min(report, c.scenario, fb)),
                              w)
               << detail::pad(detail::render_value(
                                  vs, report.sigma2_cap,
                                  std::isfinite(vs) &&
                                      vs == detail::scenario_min(report, c.scenario, fs)),
                              w)
               << detail::pad(detail::render_value(
                                  vr, report.sigma2_cap,
                                  std::isfinite(vr) &&
                                      vr == detail::scenario_min(report, c.scenario, fr)),
                              w)
               << detail::pad(std::isfinite(c.relative_time) ? detail::fmt4(c.relative_time)
                                                             : "n/a",
                              w)
               << detail::pad(std::to_string(c.failures), 5) << '\n';
        }
    };
    header("Root mean squared errors, point estimates (medians)", "beta", "sigma2", "rho");
    block(false);
    os << '\n';
    header("Root mean squared errors, all retained draws", "beta", "sigma2", "rho");
    block(true);
    return os.str();
}

/// Coefficient table for a single fit: posterior mean, sd and a significance
/// star when the credible interval excludes zero, followed by sigma2, rho
/// and the implied conventional spatial coefficient.
inline std::string fit_table(const SummaryTable& summary, const std::string& prior_label) {
    std::ostringstream os;
    std::size_t name_w = 10;
    for (const auto& row : summary.rows) name_w = std::max(name_w, row.name.size() + 2);
    os << "Posterior summary, prior: " << prior_label << '\n';
    os << detail::pad("variable", name_w) << detail::pad("mean", 12) << detail::pad("sd", 12)
       << '\n';
    for (const auto& row : summary.rows) {
        os << detail::pad(row.name + (row.significant ? "*" : ""), name_w)
           << detail::pad(detail::fmt4(row.mean), 12) << detail::pad(detail::fmt4(row.sd), 12)
           << '\n';
    }
    const int pct = static_cast<int>(std::lround(summary.cred_level * 100));
    os << "* interval excludes zero at the " << pct << " percent credible level\n";
    os << "implied SAR coefficient 1 - exp(rho_median): " << detail::fmt4(summary.sar_xi) << '\n';
    os << "MH acceptance rate: " << detail::fmt4(summary.accept_rate) << '\n';
    return os.str();
}

}  // namespace mess
