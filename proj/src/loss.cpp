#include "tef/loss.hpp"

namespace tef {

void validate_dataset(const Dataset& data, const Support& support) {
    if (data.size() == 0) throw std::invalid_argument("dataset is empty");
    if (data.dimension() != support.dimension())
        throw ShapeMismatch("dataset has " + std::to_string(data.dimension()) +
                            " columns, support dimension is " +
                            std::to_string(support.dimension()));
    for (Index t = 0; t < data.size(); ++t)
        if (!support.contains(data.samples.row(t).transpose()))
            throw OutOfSupport("sample " + std::to_string(t) + " lies outside the " +
                               to_string(support.kind()) + " support");
}

double smoothness_bound(const StatisticFamily& family, const ConstraintSpec& constraint,
                        double rbar) {
    const StatisticBounds b = statistic_bounds(family, constraint);
    return smoothness_bound(family.rows(), family.cols(), b.phi_max, b.d, rbar);
}

double bregman_score(const Eigen::MatrixXd& theta, const Eigen::VectorXd& x,
                     const StatisticFamily& family) {
    if (theta.rows() != family.rows() || theta.cols() != family.cols())
        throw ShapeMismatch("bregman_score: parameter shape does not match the family");
    const Eigen::MatrixXd phi = family.centered(x);
    const double a = tree_sum(phi.reshaped().cwiseProduct(theta.reshaped()));
    if (!(std::abs(a) <= kMaxExponent)) throw ExpOverflow("bregman_score: exp guard exceeded");
    return std::exp(-a) - 1.0;
}

double surrogate_likelihood_correction(const Eigen::MatrixXd& theta,
                                       const StatisticFamily& family, const CellGrid& grid) {
    if (!(grid.support() == family.support()))
        throw std::invalid_argument("surrogate likelihood: grid and family supports differ");
    const Eigen::MatrixXd d = family.design(grid.centers(), true, false);
    const Eigen::VectorXd eta = d * theta.reshaped();
    return tree_sum(eta) / static_cast<double>(eta.size());
}

double surrogate_likelihood(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                            const Dataset& data, const CellGrid& grid) {
    const auto loss = SurrogateLoss<double>::from_dataset(family, data);
    return loss.value(theta) + surrogate_likelihood_correction(theta, family, grid);
}

}  // namespace tef
