#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "mess/distributions.hpp"
#include "mess/rng.hpp"
#include "oracles.hpp"

using mess::GigParams;
using mess::RngStream;

TEST_CASE("rng determinism and stream independence") {
    RngStream a(1234), b(1234);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next() == b.next());

    RngStream c(1234);
    RngStream d = c.substream(1);
    RngStream e = c.substream(2);
    REQUIRE(d.next() != e.next());

    RngStream f(1234);
    f.jump();
    RngStream g(1234);
    REQUIRE(f.next() != g.next());

    // derive_seed is pure
    REQUIRE(RngStream::derive_seed(7, 1, 2, 3) == RngStream::derive_seed(7, 1, 2, 3));
    REQUIRE(RngStream::derive_seed(7, 1, 2, 3) != RngStream::derive_seed(7, 1, 2, 4));
}

TEST_CASE("uniform ranges and normal moments") {
    RngStream rng(99);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        const double v = rng.uniform_pos();
        REQUIRE(v > 0.0);
        REQUIRE(v <= 1.0);
    }
    REQUIRE(lo < 0.001);
    REQUIRE(hi > 0.999);

    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum2 += z * z;
    }
    REQUIRE(std::abs(sum / n) < 0.01);
    REQUIRE(std::abs(sum2 / n - 1.0) < 0.02);
}

namespace {

struct Moments {
    double mean;
    double var;
    double second;
    double se_mean;
    double se_second;
};

template <typename Draw>
Moments empirical(int n, Draw&& draw) {
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = draw();
    double m = 0.0;
    for (double x : xs) m += x;
    m /= n;
    double v = 0.0, s2 = 0.0, v4 = 0.0;
    for (double x : xs) {
        v += (x - m) * (x - m);
        s2 += x * x;
    }
    v /= n - 1;
    s2 /= n;
    for (double x : xs) v4 += (x * x - s2) * (x * x - s2);
    v4 /= n - 1;
    return {m, v, s2, std::sqrt(v / n), std::sqrt(v4 / n)};
}

}  // namespace

TEST_CASE("gamma moments against analytic values") {
    RngStream rng(2024);

    auto exp1 = empirical(100000, [&] { return mess::sample_gamma(1.0, 1.0, rng); });
    REQUIRE(std::abs(exp1.mean - 1.0) < 0.02);

    auto tiny = empirical(1000000, [&] { return mess::sample_gamma(0.01, 0.01, rng); });
    REQUIRE(std::abs(tiny.mean - 1.0) < 0.05);

    auto g52 = empirical(200000, [&] { return mess::sample_gamma(5.0, 2.0, rng); });
    REQUIRE(std::abs(g52.mean - 2.5) < 0.02);
    REQUIRE(std::abs(g52.var - 1.25) / 1.25 < 0.05);

    REQUIRE_THROWS_AS(mess::sample_gamma(0.0, 1.0, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(mess::sample_gamma(1.0, -1.0, rng), std::invalid_argument);
}

TEST_CASE("inverse gamma moments and reciprocal consistency") {
    RngStream rng(5150);

    auto ig32 = empirical(100000, [&] { return mess::sample_inverse_gamma(3.0, 2.0, rng); });
    REQUIRE(std::abs(ig32.mean - 1.0) < 0.02);  // scale/(shape-1)

    auto ig_tight = empirical(100000, [&] { return mess::sample_inverse_gamma(51.0, 50.0, rng); });
    REQUIRE(std::abs(ig_tight.mean - 1.0) < 0.01);

    // reciprocals of IG(3,2) draws are Gamma(3,2) draws
    auto recip = empirical(100000, [&] { return 1.0 / mess::sample_inverse_gamma(3.0, 2.0, rng); });
    REQUIRE(std::abs(recip.mean - 1.5) < 0.02);
    REQUIRE(std::abs(recip.var - 0.75) / 0.75 < 0.05);

    REQUIRE_THROWS_AS(mess::sample_inverse_gamma(-1.0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("bernoulli endpoints and frequency") {
    RngStream rng(31);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(mess::sample_bernoulli(0.0, rng) == 0);
        REQUIRE(mess::sample_bernoulli(1.0, rng) == 1);
    }
    int ones = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ones += mess::sample_bernoulli(0.5, rng);
    REQUIRE(std::abs(static_cast<double>(ones) / n - 0.5) < 0.01);
    REQUIRE_THROWS_AS(mess::sample_bernoulli(1.5, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(mess::sample_bernoulli(std::nan(""), rng), std::invalid_argument);
}

TEST_CASE("gig parameter validation") {
    RngStream rng(1);
    REQUIRE_THROWS_AS(mess::sample_gig({0.5, 0.0, 0.0}, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(mess::sample_gig({-0.5, 0.0, 1.0}, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(mess::sample_gig({0.5, 1.0, 0.0}, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(mess::sample_gig({0.5, -1.0, 1.0}, rng), std::invalid_argument);
}

TEST_CASE("gig boundary cases reduce to gamma and inverse gamma") {
    RngStream rng(808);
    // chi = 0: GIG(a, 0, 2b) is Gamma(a, b)
    const double a = 2.5, b = 1.5;
    auto bd = empirical(100000, [&] { return mess::sample_gig({a, 0.0, 2.0 * b}, rng); });
    REQUIRE(std::abs(bd.mean - a / b) / (a / b) < 0.02);

    // varrho = 0: GIG(-a, 2b, 0) is InvGamma(a, b); mean b/(a-1)
    auto inv = empirical(100000, [&] { return mess::sample_gig({-a, 2.0 * b, 0.0}, rng); });
    REQUIRE(std::abs(inv.mean - b / (a - 1.0)) / (b / (a - 1.0)) < 0.02);
}

TEST_CASE("gig mean against quadrature oracle") {
    RngStream rng(777);

    auto m1 = empirical(100000, [&] { return mess::sample_gig({1.5, 2.0, 3.0}, rng); });
    const double want1 = oracle::gig_moment(1.5, 2.0, 3.0, 1);
    REQUIRE(std::abs(m1.mean - want1) / want1 < 0.02);

    // the local-scale case: zeta=-1/2, chi=1, varrho=mu^-2 with mu=2
    auto m2 = empirical(100000, [&] { return mess::sample_gig({-0.5, 1.0, 0.25}, rng); });
    const double want2 = oracle::gig_moment(-0.5, 1.0, 0.25, 1);
    REQUIRE(std::abs(m2.mean - want2) / want2 < 0.02);
}

TEST_CASE("quadrature oracle agrees with the Bessel-function mean") {
    // E[X] = sqrt(chi/varrho) K_{zeta+1}(omega) / K_zeta(omega)
    for (const auto& [zeta, chi, varrho] :
         std::vector<std::array<double, 3>>{{0.7, 1.0, 2.0}, {-0.5, 2.0, 1.0}, {2.0, 3.0, 0.5}}) {
        const double omega = std::sqrt(chi * varrho);
        const double bessel = std::sqrt(chi / varrho) *
                              std::cyl_bessel_k(std::abs(zeta + 1.0), omega) /
                              std::cyl_bessel_k(std::abs(zeta), omega);
        const double quad = oracle::gig_moment(zeta, chi, varrho, 1);
        REQUIRE(std::abs(quad - bessel) / bessel < 1e-6);
    }
}

TEST_CASE("gig moment grid within three standard errors of quadrature") {
    RngStream rng(424242);
    const std::vector<std::array<double, 3>> grid = {
        {-1.0, 2.0, 1.0}, {-1.0, 0.5, 3.0},  {-0.5, 1.0, 0.25}, {-0.5, 2.0, 2.0},
        {0.1, 1e-4, 1.0}, {0.1, 1.0, 1.0},   {1.0, 2.0, 0.5},   {1.0, 1e-6, 2.0},
        {1.0, 3.0, 3.0},  {3.0, 1.0, 1.0},   {3.0, 5.0, 0.2},   {3.0, 0.01, 4.0},
        {-50.0, 600.0, 1.0}, {-0.5, 1.0, 2500.0}};
    for (const auto& [zeta, chi, varrho] : grid) {
        CAPTURE(zeta, chi, varrho);
        auto emp = empirical(100000, [&] {
            const double x = mess::sample_gig({zeta, chi, varrho}, rng);
            REQUIRE(x > 0.0);
            REQUIRE(std::isfinite(x));
            return x;
        });
        const double mean = oracle::gig_moment(zeta, chi, varrho, 1);
        const double second = oracle::gig_moment(zeta, chi, varrho, 2);
        REQUIRE(std::abs(emp.mean - mean) < 3.0 * emp.se_mean);
        REQUIRE(std::abs(emp.second - second) < 3.0 * emp.se_second);
    }
}

TEST_CASE("mvn precision: identity case") {
    RngStream rng(11);
    const int k = 5, n = 10000;
    Eigen::MatrixXd draws(n, k);
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(k, k);
    const Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < n; ++i) draws.row(i) = mess::sample_mvn_precision(b, P, rng).transpose();
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    const Eigen::MatrixXd centered = draws.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            REQUIRE(std::abs(cov(i, j) - (i == j ? 1.0 : 0.0)) < 0.05);
}

TEST_CASE("mvn precision: diagonal case has the right mean and variances") {
    RngStream rng(12);
    Eigen::MatrixXd P(2, 2);
    P << 4.0, 0.0, 0.0, 9.0;
    Eigen::VectorXd b(2);
    b << 4.0, 18.0;
    const int n = 100000;
    Eigen::MatrixXd draws(n, 2);
    for (int i = 0; i < n; ++i) draws.row(i) = mess::sample_mvn_precision(b, P, rng).transpose();
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    REQUIRE(std::abs(mean[0] - 1.0) < 0.03);
    REQUIRE(std::abs(mean[1] - 2.0) < 0.03);
    const double v0 = (draws.col(0).array() - mean[0]).square().sum() / (n - 1);
    const double v1 = (draws.col(1).array() - mean[1]).square().sum() / (n - 1);
    REQUIRE(std::abs(v0 - 0.25) / 0.25 < 0.03);
    REQUIRE(std::abs(v1 - 1.0 / 9.0) / (1.0 / 9.0) < 0.03);
}

TEST_CASE("mvn precision: random SPD mean matches the direct solve") {
    RngStream rng(13);
    const int k = 30, n = 20000;
    Eigen::MatrixXd A(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) A(i, j) = rng.normal();
    const Eigen::MatrixXd P = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(k, k);
    Eigen::VectorXd b(k);
    for (int i = 0; i < k; ++i) b[i] = rng.normal();
    const Eigen::VectorXd want = P.ldlt().solve(b);

    Eigen::MatrixXd draws(n, k);
    for (int i = 0; i < n; ++i) draws.row(i) = mess::sample_mvn_precision(b, P, rng).transpose();
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    for (int j = 0; j < k; ++j) {
        const double sd =
            std::sqrt((draws.col(j).array() - mean[j]).square().sum() / (n - 1));
        REQUIRE(std::abs(mean[j] - want[j]) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("mvn precision: jitter policy") {
    RngStream rng(14);
    // rank-deficient PSD matrix succeeds after jitter
    Eigen::VectorXd v(4);
    v << 1.0, 2.0, -1.0, 0.5;
    const Eigen::MatrixXd P = v * v.transpose();
    const Eigen::VectorXd draw = mess::sample_mvn_precision(Eigen::VectorXd::Zero(4), P, rng);
    REQUIRE(draw.allFinite());

    // indefinite matrix fails even with jitter
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
    bad(2, 2) = -1.0;
    REQUIRE_THROWS_AS(mess::sample_mvn_precision(Eigen::VectorXd::Zero(3), bad, rng),
                      mess::numerical_error);
}
