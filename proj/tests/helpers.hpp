#pragma once

#include "tef/loss.hpp"
#include "tef/model.hpp"
#include "tef/projection.hpp"

#include <random>

namespace testutil {

using namespace tef;

inline Eigen::VectorXd uniform_in(const Support& s, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(1e-12, 1.0 - 1e-12);
    Eigen::VectorXd draws(s.uniforms_per_point());
    for (Index i = 0; i < draws.size(); ++i) draws(i) = u(gen);
    return s.uniform_point(draws);
}

inline Dataset uniform_dataset(const Support& s, Index n, std::mt19937_64& gen) {
    Dataset d;
    d.samples.resize(n, s.dimension());
    for (Index t = 0; t < n; ++t) d.samples.row(t) = uniform_in(s, gen).transpose();
    d.provenance = "test uniform";
    return d;
}

inline Eigen::MatrixXd gaussian(Index r, Index c, std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return nd(gen); });
}

/// Uniform radius fraction times a random direction, scaled into the ball R <= radius.
inline Eigen::MatrixXd random_feasible(Index r, Index c, const ConstraintSpec& cs,
                                       std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd m = gaussian(r, c, gen);
    return m * (cs.radius * u(gen) / cs.value(m));
}

/// Largest entrywise relative error between the gradient and central differences.
inline double fd_gradient_error(const SurrogateLoss<double>& loss, const Eigen::MatrixXd& theta,
                                double h = 1e-5) {
    const Eigen::MatrixXd g = loss.gradient(theta);
    double worst = 0.0;
    for (Index e = 0; e < theta.size(); ++e) {
        Eigen::MatrixXd up = theta, dn = theta;
        up.reshaped()(e) += h;
        dn.reshaped()(e) -= h;
        const double fd = (loss.value(up) - loss.value(dn)) / (2 * h);
        const double ge = g.reshaped()(e);
        worst = std::max(worst, std::abs(fd - ge) / std::max(std::abs(ge), 1e-2));
    }
    return worst;
}

/// Four constraint settings with a family suited to each.
struct Setting {
    StatisticFamily family;
    ConstraintSpec constraint;
};

inline std::vector<Setting> constraint_settings() {
    const Support l1(SupportKind::L1Ball, 3, 1.0);
    const Support box(SupportKind::Box, 3, 1.0);
    const Support l2(SupportKind::L2Ball, 2, 1.0);
    const Support box2(SupportKind::Box, 2, 1.0);
    return {
        {centered_family(StatisticFamily::pairwise_quadratic(l1), {CenteringMethod::GridQuadrature, 0, 0, 60}),
         {NormKind::Frobenius, 2.0}},
        {centered_family(StatisticFamily::pairwise_quadratic(box), {CenteringMethod::ClosedForm}),
         {NormKind::Max, 0.5}},
        {centered_family(StatisticFamily::monomial_grid(l2, 3, 2), {CenteringMethod::GridQuadrature, 0, 0, 100}),
         {NormKind::Nuclear, 1.5}},
        {centered_family(StatisticFamily::trigonometric(box2, 2), {CenteringMethod::ClosedForm}),
         {NormKind::EntrywiseL1, 1.0}},
    };
}

}  // namespace testutil
