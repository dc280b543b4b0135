#include <doctest.h>

#include "helpers.hpp"
#include "tef/oracle.hpp"
#include "tef/sampling.hpp"

#include <cmath>
#include <sstream>

using namespace tef;
using namespace testutil;

namespace {

/// Per-column mean and standard error of f(samples).
struct Moments {
    Eigen::VectorXd mean;
    Eigen::VectorXd se;
};

Moments second_moments(const Eigen::MatrixXd& x) {
    const Index p = x.cols();
    Eigen::MatrixXd v(x.rows(), p * p);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) v.col(i * p + j) = x.col(i).cwiseProduct(x.col(j));
    Moments m;
    m.mean = v.colwise().mean();
    const Eigen::MatrixXd c = v.rowwise() - m.mean.transpose();
    m.se = (c.colwise().squaredNorm().transpose() / static_cast<double>(x.rows() - 1) /
            static_cast<double>(x.rows()))
               .cwiseSqrt();
    return m;
}

Eigen::VectorXd grid_second_moments(const GridMeasure& g) {
    const Index p = g.grid.dimension();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(p * p);
    for (Index c = 0; c < g.grid.size(); ++c) {
        const Eigen::VectorXd x = g.grid.center(c);
        for (Index i = 0; i < p; ++i)
            for (Index j = 0; j < p; ++j) m(i * p + j) += g.weights(c) * x(i) * x(j);
    }
    return m;
}

}  // namespace

TEST_CASE("build_grid weights") {
    SUBCASE("zero parameter is uniform over in-support cells") {
        const auto f = StatisticFamily::pairwise_quadratic(Support(SupportKind::Box, 2, 1.0));
        const GridMeasure g = build_grid(Eigen::MatrixXd::Zero(2, 2), f, 20);
        CHECK(g.weights.size() == 400);
        CHECK((g.weights.array() - 1.0 / 400).abs().maxCoeff() <= 1e-17);
        CHECK(std::abs(g.weights.sum() - 1.0) <= 1e-12);
    }
    SUBCASE("two cells, linear statistic") {
        const auto f = StatisticFamily::polynomial(Support(SupportKind::Box, 1, 1.0), 1);
        const double t = 0.7;
        const GridMeasure g = build_grid(Eigen::MatrixXd::Constant(1, 1, t), f, 2);
        CHECK(g.grid.center(0)(0) == -0.5);
        CHECK(g.grid.center(1)(0) == 0.5);
        const double z = std::exp(-t / 2) + std::exp(t / 2);
        CHECK(g.weights(0) == doctest::Approx(std::exp(-t / 2) / z).epsilon(1e-15));
        CHECK(g.weights(1) == doctest::Approx(std::exp(t / 2) / z).epsilon(1e-15));
    }
    SUBCASE("ball supports keep only cells with centers inside") {
        const auto f = StatisticFamily::pairwise_quadratic(Support(SupportKind::L1Ball, 2, 1.0));
        const GridMeasure g = build_grid(build_true_parameter(Recipe::Star, 2), f, 50);
        for (Index c = 0; c < g.grid.size(); ++c) CHECK(g.grid.support().contains(g.grid.center(c)));
        CHECK(g.weights.minCoeff() >= 0.0);
        CHECK(std::abs(g.weights.sum() - 1.0) <= 1e-12);
    }
    SUBCASE("errors") {
        const auto f = StatisticFamily::pairwise_quadratic(Support(SupportKind::Box, 2, 1.0));
        CHECK_THROWS_AS(build_grid(Eigen::MatrixXd::Zero(3, 3), f, 10), ShapeMismatch);
        CHECK_THROWS_AS(build_grid(Eigen::MatrixXd::Zero(2, 2), f, 1), std::invalid_argument);
        const auto big = StatisticFamily::pairwise_quadratic(Support(SupportKind::Box, 5, 1.0));
        CHECK_THROWS_AS(build_grid(Eigen::MatrixXd::Zero(5, 5), big, 100), GuardExceeded);
    }
}

TEST_CASE("grid sampler marginals match the grid weights") {
    const auto f = StatisticFamily::pairwise_quadratic(Support(SupportKind::L1Ball, 2, 1.0));
    const GridMeasure g = build_grid(build_true_parameter(Recipe::Star, 2), f, 100);
    const Index n = 1'000'000;
    const Dataset d = sample_grid(g, n, 11);
    for (int axis = 0; axis < 2; ++axis) {
        Eigen::VectorXd expected = Eigen::VectorXd::Zero(100), observed = Eigen::VectorXd::Zero(100);
        auto bin = [&](double x) {
            return std::clamp(static_cast<Index>(std::floor((x + 1.0) / 0.02)), Index(0), Index(99));
        };
        for (Index c = 0; c < g.grid.size(); ++c) expected(bin(g.grid.center(c)(axis))) += g.weights(c);
        for (Index t = 0; t < n; ++t) observed(bin(d.samples(t, axis))) += 1.0;
        // Per-bin 3 sigma bands. With 100 bins about 0.27 exceedances are expected by
        // chance, so more than 2 (probability < 3e-3) signals a sampler defect; the
        // marginal chi-square statistic checks the bands jointly.
        int outside = 0;
        double chi = 0.0;
        for (Index b = 0; b < 100; ++b) {
            const double mu = n * expected(b);
            const double sd = std::sqrt(n * expected(b) * (1 - expected(b)));
            if (std::abs(observed(b) - mu) > 3 * sd) ++outside;
            chi += (observed(b) - mu) * (observed(b) - mu) / mu;
        }
        CHECK(expected.minCoeff() > 0.0);
        CHECK(outside <= 2);
        // Frozen from tests/oracles/reference_constants.py.
        CHECK(chi < 148.23035916510173);
    }
}

TEST_CASE("grid sampler") {
    SUBCASE("uniform case passes chi-square goodness of fit") {
        const auto f = StatisticFamily::pairwise_quadratic(Support(SupportKind::Box, 2, 1.0));
        const GridMeasure g = build_grid(Eigen::MatrixXd::Zero(2, 2), f, 10);
        const Index n = 100'000;
        const Dataset d = sample_grid(g, n, 5);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(100);
        for (Index t = 0; t < n; ++t) {
            const Index i = static_cast<Index>(std::floor((d.samples(t, 0) + 1.0) / 0.2));
            const Index j = static_cast<Index>(std::floor((d.samples(t, 1) + 1.0) / 0.2));
            counts(i * 10 + j) += 1.0;
        }
        const double e = n / 100.0;
        const double stat = ((counts.array() - e).square() / e).sum();
        // Frozen from tests/oracles/reference_constants.py.
        CHECK(stat < 148.23035916510173);
    }
    SUBCASE("fixed seed is reproducible") {
        const auto f = StatisticFamily::pairwise_quadratic(Support(SupportKind::Box, 2, 1.0));
        const GridMeasure g = build_grid(0.3 * Eigen::MatrixXd::Identity(2, 2), f, 30);
        const Dataset a = sample_grid(g, 1000, 9);
        const Dataset b = sample_grid(g, 1000, 9);
        CHECK(a.samples == b.samples);
        // Prefixes agree: draw t depends only on (seed, t).
        CHECK(sample_grid(g, 10, 9).samples == a.samples.topRows(10));
        CHECK(sample_grid(g, 1000, 10).samples != a.samples);
    }
    SUBCASE("degenerate categorical") {
        const CellGrid grid(Support(SupportKind::Box, 2, 1.0), 4);
        GridMeasure g{grid, Eigen::VectorXd::Zero(grid.size()), 0.0, {}};
        g.weights(0) = 1.0;
        const Dataset d = sample_grid(g, 500, 3);
        for (Index t = 0; t < d.size(); ++t) CHECK(d.samples.row(t) == grid.center(0).transpose());
    }
    SUBCASE("errors") {
        const auto f = StatisticFamily::pairwise_quadratic(Support(SupportKind::Box, 2, 1.0));
        const GridMeasure g = build_grid(Eigen::MatrixXd::Zero(2, 2), f, 4);
        CHECK_THROWS_AS(sample_grid(g, 0, 1), std::invalid_argument);
    }
}

TEST_CASE("truncated gaussian sampler") {
    SUBCASE("diagonal p=1 is symmetric") {
        const Support box(SupportKind::Box, 1, 1.0);
        for (double t : {-0.5, 0.5}) {
            const auto s = sample_truncated_gaussian(Eigen::MatrixXd::Constant(1, 1, t), box, 20000, 2);
            CHECK(s.gaussian_proposal == (t < 0));
            const Eigen::VectorXd x = s.data.samples.col(0);
            const double mean = x.mean();
            const double sd = std::sqrt((x.array() - mean).square().sum() / (x.size() - 1));
            CHECK(std::abs(mean) <= 3 * sd / std::sqrt(static_cast<double>(x.size())));
            CHECK(x.cwiseAbs().maxCoeff() <= 1.0);
        }
    }
    SUBCASE("banded(3) second moments match grid quadrature") {
        const Support box(SupportKind::Box, 3, 1.0);
        const Eigen::MatrixXd theta = build_true_parameter(Recipe::Banded, 3);
        const auto s = sample_truncated_gaussian(theta, box, 100'000, 4);
        CHECK(s.gaussian_proposal);
        CHECK(s.acceptance_rate > 0.0);
        const auto f = StatisticFamily::pairwise_quadratic(box);
        const auto est = partition_estimate(theta, f, 100);
        const GridMeasure g = build_grid(theta, f, 100);
        const Eigen::VectorXd grid_m = grid_second_moments(g);
        const Eigen::VectorXd coarse_m = grid_second_moments(build_grid(theta, f, 50));
        const Moments emp = second_moments(s.data.samples);
        for (Index k = 0; k < grid_m.size(); ++k) {
            const double grid_err = std::abs(grid_m(k) - coarse_m(k));
            const double combined = std::sqrt(emp.se(k) * emp.se(k) + grid_err * grid_err);
            CHECK(std::abs(emp.mean(k) - grid_m(k)) <= 3 * combined);
        }
        CHECK(est.value > 0.0);
    }
    SUBCASE("proposal equal to target accepts almost everything") {
        const Support box(SupportKind::Box, 2, 1.0);
        const auto s =
            sample_truncated_gaussian(-50.0 * Eigen::MatrixXd::Identity(2, 2), box, 10000, 6);
        CHECK(s.gaussian_proposal);
        CHECK(s.acceptance_rate >= 0.99);
    }
    SUBCASE("agrees with the grid sampler on banded(3)") {
        const Support box(SupportKind::Box, 3, 1.0);
        const Eigen::MatrixXd theta = build_true_parameter(Recipe::Banded, 3);
        const auto f = StatisticFamily::pairwise_quadratic(box);
        const Index n = 100'000;
        const Dataset rej = sample_truncated_gaussian(theta, box, n, 8).data;
        const Dataset grd = sample_grid(build_grid(theta, f, 100), n, 8);
        const Moments a = second_moments(rej.samples), b = second_moments(grd.samples);
        for (Index k = 0; k < a.mean.size(); ++k)
            CHECK(std::abs(a.mean(k) - b.mean(k)) <= 4 * std::hypot(a.se(k), b.se(k)));
        for (Index j = 0; j < 3; ++j) {
            const double se = std::hypot(std::sqrt(a.mean(j * 3 + j) / n), std::sqrt(b.mean(j * 3 + j) / n));
            CHECK(std::abs(rej.samples.col(j).mean() - grd.samples.col(j).mean()) <= 4 * se);
        }
    }
    SUBCASE("uniform proposal is exact and reproducible") {
        const Support box(SupportKind::Box, 2, 1.0);
        const Eigen::MatrixXd theta = (Eigen::MatrixXd(2, 2) << 0.5, 0.2, 0.2, -0.1).finished();
        const auto s = sample_truncated_gaussian(theta, box, 50'000, 12);
        CHECK_FALSE(s.gaussian_proposal);
        CHECK(s.data.samples == sample_truncated_gaussian(theta, box, 50'000, 12).data.samples);
        const auto f = StatisticFamily::pairwise_quadratic(box);
        const Eigen::VectorXd grid_m = grid_second_moments(build_grid(theta, f, 200));
        const Moments emp = second_moments(s.data.samples);
        for (Index k = 0; k < grid_m.size(); ++k)
            CHECK(std::abs(emp.mean(k) - grid_m(k)) <= 3 * emp.se(k) + 1e-4);
    }
    SUBCASE("errors") {
        const Support box(SupportKind::Box, 3, 1.0);
        CHECK_THROWS_AS(sample_truncated_gaussian(20.0 * Eigen::MatrixXd::Identity(3, 3), box, 100, 1),
                        std::runtime_error);
        CHECK_THROWS_AS(sample_truncated_gaussian(Eigen::MatrixXd::Zero(2, 2), box, 100, 1),
                        ShapeMismatch);
        CHECK_THROWS_AS(sample_truncated_gaussian(Eigen::MatrixXd::Zero(3, 3),
                                                  Support(SupportKind::L2Ball, 3, 1.0), 100, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("true parameter recipes") {
    Eigen::MatrixXd star(4, 4);
    star << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0, 0, 0.5, 0, 0.5, 0, 0.5, 0, 0, 0.5;
    CHECK(build_true_parameter(Recipe::Star, 4) == star);
    Eigen::MatrixXd banded(3, 3);
    banded << -0.5, -0.3, -0.2, -0.3, -0.5, -0.3, -0.2, -0.3, -0.5;
    CHECK((build_true_parameter(Recipe::Banded, 3) - banded).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(build_true_parameter(Recipe::Banded, 6).cwiseAbs().maxCoeff() == 0.5);
    Eigen::MatrixXd rows(2, 2);
    rows << 1, 0.8, 0.5, 0.4;
    CHECK(build_true_parameter(Recipe::NuclearRows, 2) == rows);
    const Eigen::MatrixXd r4 = build_true_parameter(Recipe::NuclearRows, 4);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r4);
    CHECK(svd.singularValues()(1) <= 1e-15);
    CHECK(parse_recipe("banded") == Recipe::Banded);
    CHECK_THROWS_AS(parse_recipe("spiral"), ConfigError);
}

TEST_CASE("dataset CSV round trip") {
    std::mt19937_64 gen(3);
    Dataset d = uniform_dataset(Support(SupportKind::Box, 3, 1.0), 200, gen);
    d.samples(0, 0) = 1.0 / 3.0;
    d.samples(1, 1) = -std::nextafter(0.0, 1.0);
    d.provenance = "synthetic seed=3 sampler=test";
    std::stringstream ss;
    write_dataset_csv(ss, d);
    const std::string text = ss.str();
    CHECK(text.rfind("# synthetic seed=3 sampler=test\nx1,x2,x3\n", 0) == 0);
    const Dataset back = read_dataset_csv(ss);
    CHECK(back.samples == d.samples);
    CHECK(back.provenance == d.provenance);

    std::stringstream ragged("x1,x2\n0.1,0.2\n0.3\n");
    CHECK_THROWS_AS(read_dataset_csv(ragged), std::runtime_error);
}
