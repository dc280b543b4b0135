#include "tef/oracle.hpp"

#include <cmath>
#include <limits>

namespace tef {

namespace {

void require_same_support(const StatisticFamily& family, const CellGrid& grid, const char* who) {
    if (!(grid.support() == family.support()))
        throw std::invalid_argument(std::string(who) + ": grid and family supports differ");
}

void require_shape(const Eigen::MatrixXd& m, const StatisticFamily& family, const char* who) {
    if (m.rows() != family.rows() || m.cols() != family.cols())
        throw ShapeMismatch(std::string(who) + ": parameter shape does not match the family");
}

std::pair<Index, double> argmin_with_margin(const std::vector<double>& v) {
    Index best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[static_cast<std::size_t>(best)]) best = static_cast<Index>(i);
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (static_cast<Index>(i) != best) second = std::min(second, v[i]);
    return {best, second - v[static_cast<std::size_t>(best)]};
}

}  // namespace

QuadratureAccount quadrature_account(const CellGrid& grid, double tolerance_budget,
                                     std::string note) {
    return {grid.support(), grid.bins(), tolerance_budget, std::move(note)};
}

double log_partition_function(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                              const CellGrid& grid) {
    const GridMeasure m = build_grid(theta, family, grid);
    return m.log_normalizer + std::log(grid.cell_volume());
}

double partition_function(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                          const CellGrid& grid) {
    return std::exp(log_partition_function(theta, family, grid));
}

PartitionEstimate partition_estimate(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                                     int bins) {
    if (bins < 4) throw std::invalid_argument("partition_estimate: bins must be >= 4");
    const CellGrid fine(family.support(), bins);
    const CellGrid coarse(family.support(), bins / 2);
    PartitionEstimate out;
    out.log_value = log_partition_function(theta, family, fine);
    out.value = std::exp(out.log_value);
    const double coarse_value = partition_function(theta, family, coarse);
    out.account = quadrature_account(fine, 2.0 * std::abs(out.value - coarse_value),
                                     "midpoint rule; budget 2 |Z(bins) - Z(bins/2)|");
    return out;
}

SurrogateLoss<double> population_surrogate(const Eigen::MatrixXd& theta_star,
                                           const StatisticFamily& family, const CellGrid& grid) {
    require_shape(theta_star, family, "population_surrogate");
    require_same_support(family, grid, "population_surrogate");
    const GridMeasure m = build_grid(theta_star, family, grid);
    return SurrogateLoss<double>(family.design(grid.centers(), true, false), family.rows(),
                                 family.cols(), m.weights);
}

double population_loss(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& theta_star,
                       const StatisticFamily& family, const CellGrid& grid) {
    return population_surrogate(theta_star, family, grid).value(theta);
}

double population_loss_via_partition(const Eigen::MatrixXd& theta,
                                     const Eigen::MatrixXd& theta_star,
                                     const StatisticFamily& family, const CellGrid& grid) {
    require_shape(theta, family, "population_loss_via_partition");
    const double shift = tree_sum(theta.reshaped().cwiseProduct(family.centering().offsets.reshaped()));
    return std::exp(log_partition_function(theta_star - theta, family, grid) + shift -
                    log_partition_function(theta_star, family, grid));
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
    Eigen::VectorXd terms = Eigen::VectorXd::Zero(p.size());
    for (Index c = 0; c < p.size(); ++c) {
        if (p(c) < 0.0 || q(c) < 0.0)
            throw std::invalid_argument("kl_divergence: negative probability");
        if (p(c) == 0.0) continue;
        if (q(c) == 0.0) throw std::domain_error("kl_divergence: zero denominator cell");
        terms(c) = p(c) * std::log(p(c) / q(c));
    }
    return std::max(0.0, tree_sum(terms));
}

double kl_divergence(const GridMeasure& p, const GridMeasure& q) {
    if (!p.grid.same_as(q.grid))
        throw std::invalid_argument("kl_divergence: densities live on different grids");
    return kl_divergence(p.weights, q.weights);
}

GridLikelihood::GridLikelihood(const StatisticFamily& family, const CellGrid& grid,
                               const Eigen::MatrixXd& target_mean)
    : k1_(family.rows()),
      k2_(family.cols()),
      design_(family.design(grid.centers(), false, false)),
      target_(target_mean.reshaped()),
      log_volume_(std::log(grid.cell_volume())) {
    require_same_support(family, grid, "GridLikelihood");
    require_shape(target_mean, family, "GridLikelihood");
}

GridLikelihood GridLikelihood::from_dataset(const StatisticFamily& family, const CellGrid& grid,
                                            const Dataset& data) {
    validate_dataset(data, family.support());
    const Eigen::MatrixXd d = family.design(data.samples, false);
    Eigen::VectorXd mean(d.cols());
    for (Index j = 0; j < d.cols(); ++j) mean(j) = tree_sum(d.col(j)) / static_cast<double>(d.rows());
    return GridLikelihood(family, grid, mean.reshaped(family.rows(), family.cols()));
}

LossEvaluation<double> GridLikelihood::evaluate(const Eigen::MatrixXd& theta,
                                                bool with_gradient) const {
    if (theta.rows() != k1_ || theta.cols() != k2_)
        throw ShapeMismatch("GridLikelihood: parameter shape mismatch");
    const Eigen::VectorXd a = design_ * theta.reshaped();
    const double top = a.maxCoeff();
    const Eigen::VectorXd e = (a.array() - top).exp();
    const double total = tree_sum(e);
    LossEvaluation<double> out;
    out.value = -tree_sum(target_.cwiseProduct(theta.reshaped())) + top + std::log(total) + log_volume_;
    if (with_gradient) {
        const Eigen::VectorXd p = e / total;
        Eigen::VectorXd m(design_.cols());
        for (Index j = 0; j < design_.cols(); ++j) m(j) = tree_sum(design_.col(j).cwiseProduct(p));
        out.gradient = (m - target_).reshaped(k1_, k2_);
    }
    return out;
}

Eigen::MatrixXd GridLikelihood::moments(const Eigen::MatrixXd& theta) const {
    return *evaluate(theta, true).gradient + target_.reshaped(k1_, k2_);
}

FitResult grid_mle(const GridLikelihood& likelihood, const StatisticFamily& family,
                   const ConstraintSpec& constraint, const SolverConfig& config) {
    // The Hessian is a covariance of vec(Phi) on the grid, bounded by k phi_max^2.
    const StatisticBounds b = statistic_bounds(family, constraint);
    const double lipschitz = static_cast<double>(family.size()) * b.phi_max * b.phi_max;
    return minimize<double>(likelihood, family.rows(), family.cols(), constraint, config, lipschitz);
}

std::vector<Eigen::MatrixXd> parameter_mesh(const Eigen::MatrixXd& center,
                                            const StatisticFamily& family, double step,
                                            int half_width) {
    require_shape(center, family, "parameter_mesh");
    if (half_width < 0 || !(step > 0.0))
        throw std::invalid_argument("parameter_mesh: step must be > 0 and half_width >= 0");
    const auto basis = family.identifiable_basis();
    const int side = 2 * half_width + 1;
    const double count = std::pow(static_cast<double>(side), static_cast<double>(basis.size()));
    if (count > 1e6) throw GuardExceeded("parameter_mesh: more than 1e6 mesh points");
    std::vector<Eigen::MatrixXd> mesh;
    std::vector<int> o(basis.size(), -half_width);
    while (true) {
        Eigen::MatrixXd m = center;
        for (std::size_t i = 0; i < basis.size(); ++i) m += (step * o[i]) * basis[i];
        mesh.push_back(std::move(m));
        std::size_t i = 0;
        for (; i < o.size(); ++i) {
            if (++o[i] <= half_width) break;
            o[i] = -half_width;
        }
        if (i == o.size()) break;
    }
    return mesh;
}

KlEquivalenceReport kl_equivalence_check(const Eigen::MatrixXd& theta_star,
                                         const StatisticFamily& family, const CellGrid& grid,
                                         const std::vector<Eigen::MatrixXd>& mesh) {
    if (mesh.empty()) throw std::invalid_argument("kl_equivalence_check: empty mesh");
    const auto loss = population_surrogate(theta_star, family, grid);
    const GridMeasure uniform =
        build_grid(Eigen::MatrixXd::Zero(family.rows(), family.cols()), family, grid);

    KlEquivalenceReport r;
    r.account = quadrature_account(grid, family.centering().tolerance,
                                   "on-grid comparison; centering tolerance of the family");
    r.mesh_size = static_cast<Index>(mesh.size());
    std::vector<double> distance;
    for (const auto& theta : mesh) {
        r.losses.push_back(loss.value(theta));
        r.kls.push_back(kl_divergence(uniform, build_grid(theta_star - theta, family, grid)));
        distance.push_back((theta - theta_star).norm());
    }
    std::tie(r.loss_argmin, r.loss_margin) = argmin_with_margin(r.losses);
    std::tie(r.kl_argmin, r.kl_margin) = argmin_with_margin(r.kls);
    r.nearest = argmin_with_margin(distance).first;
    r.loss_minimizer = mesh[static_cast<std::size_t>(r.loss_argmin)];
    r.kl_minimizer = mesh[static_cast<std::size_t>(r.kl_argmin)];
    r.argmins_coincide = r.loss_argmin == r.kl_argmin;
    r.at_nearest = r.loss_argmin == r.nearest;
    r.strict = r.loss_margin > 0.0 && r.kl_margin > 0.0;
    r.pass = r.argmins_coincide && r.at_nearest;
    return r;
}

}  // namespace tef
