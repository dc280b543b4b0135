#pragma once

#include "tef/grid.hpp"
#include "tef/loss.hpp"
#include "tef/model.hpp"
#include "tef/norms.hpp"
#include "tef/sampling.hpp"
#include "tef/solver.hpp"

#include <string>
#include <vector>

namespace tef {

/// Which grid an oracle value came from and how far it can be trusted.
struct QuadratureAccount {
    Support support{SupportKind::Box, 1, 1.0};
    int bins = 0;
    /// Budget a dependent check may spend on discretization error.
    double tolerance_budget = 0.0;
    std::string note;
};

QuadratureAccount quadrature_account(const CellGrid& grid, double tolerance_budget,
                                     std::string note);

/// Riemann sum of exp(<<Theta, Phi(x)>>) over in-support cell centers times the
/// cell volume, with Phi uncentered.
struct PartitionEstimate {
    double value = 0.0;
    double log_value = 0.0;
    QuadratureAccount account;
};

double log_partition_function(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                              const CellGrid& grid);
double partition_function(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                          const CellGrid& grid);
/// Value at `bins`, with budget 2 |Z(bins) - Z(bins/2)| from the coarser grid.
PartitionEstimate partition_estimate(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                                     int bins);

/// The surrogate loss under the grid density of theta_star: cell masses are the
/// grid probabilities and design rows the centered statistic at cell centers.
SurrogateLoss<double> population_surrogate(const Eigen::MatrixXd& theta_star,
                                           const StatisticFamily& family, const CellGrid& grid);

double population_loss(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& theta_star,
                       const StatisticFamily& family, const CellGrid& grid);

/// Z(Theta* - Theta) exp(<<Theta, offsets>>) / Z(Theta*), which equals the
/// population loss on the grid.
double population_loss_via_partition(const Eigen::MatrixXd& theta,
                                     const Eigen::MatrixXd& theta_star,
                                     const StatisticFamily& family, const CellGrid& grid);

/// sum_c p_c log(p_c / q_c). Throws std::invalid_argument on a size mismatch
/// and std::domain_error when q_c = 0 < p_c.
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
/// Throws std::invalid_argument when the two measures live on different grids.
double kl_divergence(const GridMeasure& p, const GridMeasure& q);

/// Exact on-grid negative log-likelihood
/// -<<Theta, target>> + log sum_c exp(<<Theta, Phi(c)>>) + log(cell volume),
/// where target is the mean statistic of the data.
class GridLikelihood {
public:
    GridLikelihood(const StatisticFamily& family, const CellGrid& grid,
                   const Eigen::MatrixXd& target_mean);
    /// target = mean of Phi over the data.
    static GridLikelihood from_dataset(const StatisticFamily& family, const CellGrid& grid,
                                       const Dataset& data);

    [[nodiscard]] LossEvaluation<double> evaluate(const Eigen::MatrixXd& theta,
                                                  bool with_gradient = true) const;
    [[nodiscard]] double value(const Eigen::MatrixXd& theta) const {
        return evaluate(theta, false).value;
    }
    /// Grid mean of Phi under the density of theta.
    [[nodiscard]] Eigen::MatrixXd moments(const Eigen::MatrixXd& theta) const;

private:
    Index k1_;
    Index k2_;
    Eigen::MatrixXd design_;  // uncentered, one row per cell
    Eigen::VectorXd target_;
    double log_volume_;
};

/// Projected-gradient minimizer of the on-grid negative log-likelihood.
FitResult grid_mle(const GridLikelihood& likelihood, const StatisticFamily& family,
                   const ConstraintSpec& constraint, const SolverConfig& config);

/// Theta* + step * sum_m o_m B_m over o in {-half_width..half_width}^M, with B_m
/// the family's identifiable basis.
std::vector<Eigen::MatrixXd> parameter_mesh(const Eigen::MatrixXd& center,
                                            const StatisticFamily& family, double step,
                                            int half_width);

struct KlEquivalenceReport {
    QuadratureAccount account;
    Index mesh_size = 0;
    Index loss_argmin = -1;
    Index kl_argmin = -1;
    Index nearest = -1;
    /// Gap between the best and second-best population loss on the mesh.
    double loss_margin = 0.0;
    double kl_margin = 0.0;
    Eigen::MatrixXd loss_minimizer;
    Eigen::MatrixXd kl_minimizer;
    bool argmins_coincide = false;
    bool at_nearest = false;
    bool strict = false;
    bool pass = false;
    std::vector<double> losses;
    std::vector<double> kls;
};

/// Compares argmin population loss with argmin D(U_X || f(.; Theta* - Theta))
/// over the mesh, both on `grid`.
KlEquivalenceReport kl_equivalence_check(const Eigen::MatrixXd& theta_star,
                                         const StatisticFamily& family, const CellGrid& grid,
                                         const std::vector<Eigen::MatrixXd>& mesh);

}  // namespace tef
