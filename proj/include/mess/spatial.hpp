#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mess/errors.hpp"

namespace mess {

/// Planar observation locations, one (x, y) pair per observation.
struct Coordinates {
    std::vector<double> x;
    std::vector<double> y;

    std::size_t size() const { return x.size(); }
};

/// Sparse row-stochastic spatial weight matrix with zero diagonal.
/// Rows are stored as (neighbor index, weight) pairs; the structure is
/// immutable once validated and safe to share across threads.
class SpatialWeights {
  public:
    struct Entry {
        int col;
        double w;
    };

    SpatialWeights() = default;
    SpatialWeights(std::size_t n, std::vector<std::vector<Entry>> rows)
        : n_(n), rows_(std::move(rows)) {}

    std::size_t n() const { return n_; }
    const std::vector<Entry>& row(std::size_t i) const { return rows_[i]; }

    /// Checks zero diagonal, nonnegative weights and unit row sums.
    void validate(double tol = 1e-12) const {
        if (rows_.size() != n_) throw std::invalid_argument("weights: row count mismatch");
        for (std::size_t i = 0; i < n_; ++i) {
            double sum = 0.0;
            for (const auto& e : rows_[i]) {
                if (e.col < 0 || static_cast<std::size_t>(e.col) >= n_)
                    throw std::invalid_argument("weights: column index out of range in row " +
                                                std::to_string(i));
                if (static_cast<std::size_t>(e.col) == i && e.w != 0.0)
                    throw std::invalid_argument("weights: nonzero diagonal at row " +
                                                std::to_string(i));
                if (!(e.w >= 0.0))
                    throw std::invalid_argument("weights: negative or non-finite weight in row " +
                                                std::to_string(i));
                sum += e.w;
            }
            if (std::abs(sum - 1.0) > tol)
                throw std::invalid_argument("weights: row " + std::to_string(i) +
                                            " sums to " + std::to_string(sum) + ", expected 1");
        }
    }

    double trace() const {
        double tr = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (const auto& e : rows_[i])
                if (static_cast<std::size_t>(e.col) == i) tr += e.w;
        return tr;
    }

    /// y = W x via sparse row products.
    void multiply(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& out) const {
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (const auto& e : rows_[i]) acc += e.w * x[e.col];
            out[static_cast<Eigen::Index>(i)] = acc;
        }
    }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_),
                                                  static_cast<Eigen::Index>(n_));
        for (std::size_t i = 0; i < n_; ++i)
            for (const auto& e : rows_[i]) m(static_cast<Eigen::Index>(i), e.col) += e.w;
        return m;
    }

  private:
    std::size_t n_ = 0;
    std::vector<std::vector<Entry>> rows_;
};

/// Row-stochastic k-nearest-neighbor weights from planar coordinates,
/// Euclidean distance, weight 1/k on each neighbor. Equidistant candidates
/// are resolved by ascending observation index, so the result is
/// deterministic across platforms.
inline SpatialWeights build_knn_weights(const Coordinates& coords, int k) {
    const std::size_t n = coords.size();
    if (coords.y.size() != n) throw std::invalid_argument("knn: coordinate arrays differ in length");
    if (k <= 0) throw std::invalid_argument("knn: k must be positive");
    if (static_cast<std::size_t>(k) >= n)
        throw std::invalid_argument("knn: k must be smaller than the number of points");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(coords.x[i]) || !std::isfinite(coords.y[i]))
            throw std::invalid_argument("knn: non-finite coordinate at index " + std::to_string(i));

    const double w = 1.0 / static_cast<double>(k);
    std::vector<std::vector<SpatialWeights::Entry>> rows(n);
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dx = coords.x[i] - coords.x[j];
            const double dy = coords.y[i] - coords.y[j];
            cand.emplace_back(dx * dx + dy * dy, static_cast<int>(j));
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        rows[i].reserve(k);
        for (int m = 0; m < k; ++m) rows[i].push_back({cand[m].second, w});
        std::sort(rows[i].begin(), rows[i].end(),
                  [](const auto& a, const auto& b) { return a.col < b.col; });
    }
    SpatialWeights W(n, std::move(rows));
    W.validate();
    return W;
}

/// exp(rho W) v by truncated Taylor action on the vector; the matrix
/// exponential is never materialized. Terms are accumulated until the
/// max-norm of the current term drops below tol times the max-norm of the
/// running result. Row-stochastic W keeps the term norms below
/// |rho|^l / l!, so the series is benign for the |rho| range of interest.
inline Eigen::VectorXd mess_apply(const SpatialWeights& W, double rho,
                                  const Eigen::Ref<const Eigen::VectorXd>& v,
                                  double tol = 1e-12) {
    if (!(tol > 0.0)) throw std::invalid_argument("mess_apply: tol must be positive");
    if (static_cast<std::size_t>(v.size()) != W.n())
        throw std::invalid_argument("mess_apply: vector length does not match W");
    Eigen::VectorXd acc = v;
    if (rho == 0.0) return acc;

    constexpr int kMaxTerms = 200;
    // the term magnitude |rho|^l / l! peaks near l = |rho|; do not stop before
    const int min_terms = static_cast<int>(std::ceil(std::abs(rho)));
    Eigen::VectorXd term = v;
    Eigen::VectorXd scratch(v.size());
    for (int l = 1; l <= kMaxTerms; ++l) {
        W.multiply(term, scratch);
        term = (rho / static_cast<double>(l)) * scratch;
        acc += term;
        const double tn = term.lpNorm<Eigen::Infinity>();
        const double an = acc.lpNorm<Eigen::Infinity>();
        if (!std::isfinite(tn) || !std::isfinite(an))
            throw numerical_error("mess_apply: series overflow at rho = " + std::to_string(rho));
        if (l >= min_terms && tn <= tol * an) break;
    }
    return acc;
}

/// log det exp(rho W) = rho tr(W); identically zero for any conforming W.
inline double log_det_mess(const SpatialWeights& W, double rho) { return rho * W.trace(); }

/// W X, column by column.
inline Eigen::MatrixXd spatial_lag(const SpatialWeights& W,
                                   const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (static_cast<std::size_t>(X.rows()) != W.n())
        throw std::invalid_argument("spatial_lag: row count does not match W");
    Eigen::MatrixXd out(X.rows(), X.cols());
    Eigen::VectorXd col(X.rows());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        W.multiply(X.col(c), col);
        out.col(c) = col;
    }
    return out;
}

/// Implied conventional spatial autoregressive coefficient, xi = 1 - exp(rho).
/// Reporting convenience only; the two specifications are not exact substitutes.
inline double sar_equivalent(double rho) { return 1.0 - std::exp(rho); }

}  // namespace mess
