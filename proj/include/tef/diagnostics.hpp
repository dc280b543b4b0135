#pragma once

#include "tef/grid.hpp"
#include "tef/loss.hpp"
#include "tef/model.hpp"
#include "tef/norms.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tef {

/// Where lambda_min comes from: the grid density of Theta* or a dataset.
struct ConstantsSource {
    std::optional<Eigen::MatrixXd> theta_star;
    std::optional<CellGrid> grid;
    std::optional<Dataset> data;
};

struct ComplexityReport {
    Index k1 = 0;
    Index k2 = 0;
    NormKind norm = NormKind::Frobenius;
    double radius = 0.0;
    double phi_max = 0.0;
    double d = 0.0;
    double gamma = 0.0;
    double g = 0.0;
    /// The tabulated bound sqrt(min(k1,k2) k1 k2) for the nuclear norm; equals g otherwise.
    double g_tabulated = 0.0;
    double psi = 0.0;
    double lambda_min = 0.0;
    double smoothness = 0.0;
    bool gamma_numerical = false;
    bool psi_numerical = false;
    /// Numerical maximizations report lower bounds of the true maxima.
    bool psi_lower_bound = false;
    bool bounds_numerical = false;
    std::string lambda_source;
    std::vector<std::string> warnings;

    /// Larger of the two sample-size requirements for error alpha with
    /// probability 1 - delta, using lambda_min.
    [[nodiscard]] double implied_n(double alpha, double delta) const;
};

/// sparsity > 0 selects the sparse L1 specialization: gamma = psi = sqrt(s), g = 1.
ComplexityReport compute_constants(const StatisticFamily& family, const ConstraintSpec& constraint,
                                   const ConstantsSource& source, int sparsity = 0,
                                   std::uint64_t seed = 7);

/// sup R(M) / ||M||_F by random directions plus subgradient-ascent refinement.
double numerical_norm_ratio(NormKind kind, Index k1, Index k2, int directions,
                            std::uint64_t seed);

/// L(Theta* + Delta) - L(Theta*) - <<grad L(Theta*), Delta>>.
double rsc_residual(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& theta_star,
                    const SurrogateLoss<double>& loss);

/// lambda_min exp(-2 r d) / (4 + 16 r d) ||Delta||_F^2.
double rsc_lower_bound(double lambda_min, double r, double d, const Eigen::MatrixXd& delta);

/// Smallest n with 32 phi_max^4 / eps^2 log(2 k1^2 k2^2 / delta) < n.
double correlation_sample_size(double phi_max, double eps, Index k1, Index k2, double delta);

/// Correlation tensor H_{u1v1u2v2} = E[phi~_{u1v1} phi~_{u2v2}] flattened to a
/// (k1 k2) x (k1 k2) matrix in vec() order.
Eigen::MatrixXd empirical_correlation(const Dataset& data, const StatisticFamily& family);
Eigen::MatrixXd grid_correlation(const Eigen::MatrixXd& theta_star, const StatisticFamily& family,
                                 const CellGrid& grid);

/// Smallest eigenvalue of a correlation matrix restricted to the identifiable
/// coordinates; negative values are clipped to 0 with a warning.
double restricted_min_eigenvalue(const Eigen::MatrixXd& h, const StatisticFamily& family,
                                 std::vector<std::string>* warnings = nullptr);

/// Plug-in A, B and Sigma = B^{-1} A B^{-T} with z = vec(phi~), w = exp(-<<Theta, phi~>>):
/// A = Cov(z w), B = Cov(z, z w). The inverse is taken in identifiable coordinates.
struct SandwichCovariance {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd sigma;
    double condition_number = 0.0;
    bool pseudo_inverse = false;
};

/// Throws std::domain_error when B is singular (condition number above 1e12)
/// unless allow_pseudo_inverse is set.
SandwichCovariance sandwich_covariance(const Eigen::MatrixXd& theta, const Dataset& data,
                                       const StatisticFamily& family,
                                       bool allow_pseudo_inverse = false);
/// The same quantities with expectations under the grid density of theta_star.
SandwichCovariance grid_sandwich_covariance(const Eigen::MatrixXd& theta_star,
                                            const StatisticFamily& family, const CellGrid& grid,
                                            bool allow_pseudo_inverse = false);

}  // namespace tef
