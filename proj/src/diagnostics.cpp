#include "tef/diagnostics.hpp"

#include "tef/sampling.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numbers>

namespace tef {

namespace {

/// Weighted column means with tree reduction; mass sums to one.
Eigen::VectorXd weighted_mean(const Eigen::MatrixXd& z, const Eigen::VectorXd& mass) {
    Eigen::VectorXd out(z.cols());
    for (Index j = 0; j < z.cols(); ++j) out(j) = tree_sum(z.col(j).cwiseProduct(mass));
    return out;
}

Eigen::MatrixXd weighted_cross(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                               const Eigen::VectorXd& mass) {
    return x.transpose() * mass.asDiagonal() * y;
}

Eigen::VectorXd uniform_mass(Index n) {
    return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

SandwichCovariance sandwich_from(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& z,
                                 const Eigen::VectorXd& mass, const StatisticFamily& family,
                                 bool allow_pseudo_inverse) {
    if (theta.rows() != family.rows() || theta.cols() != family.cols())
        throw ShapeMismatch("sandwich_covariance: parameter shape does not match the family");
    const Eigen::VectorXd eta = z * theta.reshaped();
    if (!(eta.cwiseAbs().maxCoeff() <= kMaxExponent))
        throw ExpOverflow("sandwich_covariance: exp guard exceeded");
    const Eigen::VectorXd w = (-eta).array().exp();
    const Eigen::MatrixXd zw = z.array().colwise() * w.array();
    const Eigen::MatrixXd zc = z.rowwise() - weighted_mean(z, mass).transpose();
    const Eigen::MatrixXd zwc = zw.rowwise() - weighted_mean(zw, mass).transpose();

    SandwichCovariance s;
    s.a = weighted_cross(zwc, zwc, mass);
    s.a = 0.5 * (s.a + s.a.transpose());
    s.b = weighted_cross(zc, zwc, mass);

    const Eigen::MatrixXd q = family.identifiable_projector();
    const Eigen::MatrixXd aq = q.transpose() * s.a * q;
    const Eigen::MatrixXd bq = q.transpose() * s.b * q;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(bq, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    s.condition_number = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                                 : std::numeric_limits<double>::infinity();
    Eigen::MatrixXd binv;
    if (s.condition_number <= 1e12) {
        binv = bq.partialPivLu().inverse();
    } else if (allow_pseudo_inverse) {
        binv = bq.completeOrthogonalDecomposition().pseudoInverse();
        s.pseudo_inverse = true;
    } else {
        throw std::domain_error("sandwich_covariance: B is singular (condition number " +
                                std::to_string(s.condition_number) + ")");
    }
    Eigen::MatrixXd sq = binv * aq * binv.transpose();
    sq = 0.5 * (sq + sq.transpose());
    s.sigma = q * sq * q.transpose();
    return s;
}

}  // namespace

double ComplexityReport::implied_n(double alpha, double delta) const {
    if (!(alpha > 0.0) || !(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("implied_n: need alpha > 0 and 0 < delta < 1");
    if (!(lambda_min > 0.0)) return std::numeric_limits<double>::infinity();
    const double kk = static_cast<double>(k1 * k2);
    const double p2 = phi_max * phi_max;
    const double l2 = lambda_min * lambda_min;
    const double first = 128.0 * p2 * p2 * std::pow(gamma, 4) / l2 * std::log(4.0 * kk * kk / delta);
    const double rd = radius * d;
    const double second = 8.0 * p2 * std::pow(24.0 + 96.0 * rd, 2) * std::exp(8.0 * rd) * g * g *
                          psi * psi / (alpha * alpha * l2) * std::log(4.0 * kk / delta);
    return std::max(first, second);
}

double numerical_norm_ratio(NormKind kind, Index k1, Index k2, int directions,
                            std::uint64_t seed) {
    if (directions < 1) throw std::invalid_argument("numerical_norm_ratio: directions must be >= 1");
    const CounterRng rng(seed);
    const Index k = k1 * k2;
    auto ratio = [&](const Eigen::MatrixXd& m) { return norm(m, kind) / m.norm(); };
    Eigen::MatrixXd best;
    double best_ratio = -1.0;
    for (int t = 0; t < directions; ++t) {
        Eigen::MatrixXd m(k1, k2);
        const std::uint64_t base = static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(2 * k);
        for (Index e = 0; e < k; ++e) {
            const double u1 = rng.uniform(base + 2 * static_cast<std::uint64_t>(e));
            const double u2 = rng.uniform(base + 2 * static_cast<std::uint64_t>(e) + 1);
            m.reshaped()(e) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
        const double r = ratio(m);
        if (r > best_ratio) {
            best_ratio = r;
            best = m;
        }
    }
    // Move to a subgradient of R at the best direction; R(G)/||G||_F never decreases
    // along this map for the norms handled here.
    for (int it = 0; it < 100; ++it) {
        Eigen::MatrixXd sub(k1, k2);
        switch (kind) {
            case NormKind::Nuclear: {
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(best, Eigen::ComputeThinU | Eigen::ComputeThinV);
                sub = svd.matrixU() * svd.matrixV().transpose();
                break;
            }
            case NormKind::EntrywiseL1:
                sub = best.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
                break;
            case NormKind::Max: {
                Index i = 0, j = 0;
                best.cwiseAbs().maxCoeff(&i, &j);
                sub = Eigen::MatrixXd::Zero(k1, k2);
                sub(i, j) = 1.0;
                break;
            }
            case NormKind::Frobenius:
                sub = best;
                break;
        }
        const double r = ratio(sub);
        if (!(r > best_ratio)) break;
        best_ratio = r;
        best = sub;
    }
    return best_ratio;
}

ComplexityReport compute_constants(const StatisticFamily& family, const ConstraintSpec& constraint,
                                   const ConstantsSource& source, int sparsity,
                                   std::uint64_t seed) {
    ComplexityReport r;
    r.k1 = family.rows();
    r.k2 = family.cols();
    r.norm = constraint.kind;
    r.radius = constraint.radius;
    const StatisticBounds bounds = statistic_bounds(family, constraint);
    r.phi_max = bounds.phi_max;
    r.d = bounds.d;
    r.bounds_numerical = bounds.phi_max_numerical || bounds.d_numerical;
    const double kk = static_cast<double>(r.k1 * r.k2);

    if (sparsity < 0) throw std::invalid_argument("compute_constants: sparsity must be >= 0");
    if (sparsity > 0) {
        r.gamma = r.psi = std::sqrt(static_cast<double>(sparsity));
        r.g = r.g_tabulated = 1.0;
    } else {
        r.gamma = std::sqrt(kk);
        r.g = g_constant(constraint.kind, r.k1, r.k2);
        r.g_tabulated = constraint.kind == NormKind::Nuclear
                            ? std::sqrt(static_cast<double>(std::min(r.k1, r.k2)) * kk)
                            : r.g;
        switch (constraint.kind) {
            case NormKind::Max:
            case NormKind::Frobenius:
                r.psi = 1.0;
                break;
            case NormKind::EntrywiseL1:
                r.psi = std::sqrt(kk);
                break;
            case NormKind::Nuclear:
                r.psi = numerical_norm_ratio(NormKind::Nuclear, r.k1, r.k2, 10'000, seed);
                r.psi_numerical = r.psi_lower_bound = true;
                break;
        }
    }
    r.smoothness = smoothness_bound(r.k1, r.k2, r.phi_max, r.d, r.radius);

    if (source.theta_star && source.grid) {
        r.lambda_min = restricted_min_eigenvalue(
            grid_correlation(*source.theta_star, family, *source.grid), family, &r.warnings);
        r.lambda_source = "grid(bins=" + std::to_string(source.grid->bins()) + ")";
    } else if (source.data) {
        r.lambda_min =
            restricted_min_eigenvalue(empirical_correlation(*source.data, family), family, &r.warnings);
        r.lambda_source = "dataset(n=" + std::to_string(source.data->size()) + ")";
    } else {
        throw std::invalid_argument("compute_constants: need theta_star with a grid, or a dataset");
    }
    if (!(r.lambda_min > 0.0))
        r.warnings.push_back("lambda_min <= 0: the restricted eigenvalue assumption is violated");
    return r;
}

double rsc_residual(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& theta_star,
                    const SurrogateLoss<double>& loss) {
    const auto base = loss.evaluate(theta_star, true);
    const double moved = loss.value(theta_star + delta);
    return moved - base.value - tree_sum(base.gradient->reshaped().cwiseProduct(delta.reshaped()));
}

double rsc_lower_bound(double lambda_min, double r, double d, const Eigen::MatrixXd& delta) {
    return lambda_min * std::exp(-2.0 * r * d) / (4.0 + 16.0 * r * d) * delta.squaredNorm();
}

double correlation_sample_size(double phi_max, double eps, Index k1, Index k2, double delta) {
    const double kk = static_cast<double>(k1 * k2);
    return 32.0 * std::pow(phi_max, 4) / (eps * eps) * std::log(2.0 * kk * kk / delta);
}

Eigen::MatrixXd empirical_correlation(const Dataset& data, const StatisticFamily& family) {
    if (data.size() < 1) throw std::invalid_argument("empirical_correlation: empty dataset");
    const Eigen::MatrixXd z = family.design(data.samples, true);
    return weighted_cross(z, z, uniform_mass(z.rows()));
}

Eigen::MatrixXd grid_correlation(const Eigen::MatrixXd& theta_star, const StatisticFamily& family,
                                 const CellGrid& grid) {
    const GridMeasure m = build_grid(theta_star, family, grid);
    const Eigen::MatrixXd z = family.design(grid.centers(), true, false);
    return weighted_cross(z, z, m.weights);
}

double restricted_min_eigenvalue(const Eigen::MatrixXd& h, const StatisticFamily& family,
                                 std::vector<std::string>* warnings) {
    const Eigen::MatrixXd q = family.identifiable_projector();
    const Eigen::MatrixXd hq = q.transpose() * h * q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (hq + hq.transpose()),
                                                       Eigen::EigenvaluesOnly);
    double v = eig.eigenvalues()(0);
    if (v < 0.0) {
        if (warnings)
            warnings->push_back("correlation matrix not PSD (eigenvalue " + std::to_string(v) +
                                "); clipped to 0");
        v = 0.0;
    }
    return v;
}

SandwichCovariance sandwich_covariance(const Eigen::MatrixXd& theta, const Dataset& data,
                                       const StatisticFamily& family, bool allow_pseudo_inverse) {
    if (data.size() < 1) throw std::invalid_argument("sandwich_covariance: empty dataset");
    const Eigen::MatrixXd z = family.design(data.samples, true);
    return sandwich_from(theta, z, uniform_mass(z.rows()), family, allow_pseudo_inverse);
}

SandwichCovariance grid_sandwich_covariance(const Eigen::MatrixXd& theta_star,
                                            const StatisticFamily& family, const CellGrid& grid,
                                            bool allow_pseudo_inverse) {
    const GridMeasure m = build_grid(theta_star, family, grid);
    const Eigen::MatrixXd z = family.design(grid.centers(), true, false);
    return sandwich_from(theta_star, z, m.weights, family, allow_pseudo_inverse);
}

}  // namespace tef
