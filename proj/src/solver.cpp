#include "tef/solver.hpp"

namespace tef {

SolverMode parse_solver_mode(std::string_view name) {
    if (name == "constrained") return SolverMode::Constrained;
    if (name == "regularized") return SolverMode::Regularized;
    throw ConfigError("unknown solver mode '" + std::string(name) + "'");
}

std::string to_string(SolverMode mode) {
    return mode == SolverMode::Constrained ? "constrained" : "regularized";
}

StepRule parse_step_rule(std::string_view name) {
    if (name == "fixed") return StepRule::Fixed;
    if (name == "backtracking") return StepRule::Backtracking;
    throw ConfigError("unknown step rule '" + std::string(name) + "'");
}

std::string to_string(StepRule rule) { return rule == StepRule::Fixed ? "fixed" : "backtracking"; }

double fit_lipschitz(const StatisticFamily& family, const ConstraintSpec& constraint,
                     const SolverConfig& config) {
    double rbar = constraint.radius;
    if (config.mode == SolverMode::Regularized)
        rbar = config.radius_cap > 0.0 ? config.radius_cap : 4.0 * constraint.radius;
    return smoothness_bound(family, constraint, rbar);
}

FitResult fit(const SurrogateLoss<double>& loss, const StatisticFamily& family,
              const ConstraintSpec& constraint, const SolverConfig& config) {
    if (loss.rows() != family.rows() || loss.cols() != family.cols())
        throw ShapeMismatch("fit: loss and family shapes differ");
    const double lipschitz = config.step > 0.0 ? 1.0 / config.step
                                               : fit_lipschitz(family, constraint, config);
    return minimize<double>(loss, family.rows(), family.cols(), constraint, config, lipschitz);
}

FitResult fit(const Dataset& data, const StatisticFamily& family, const ConstraintSpec& constraint,
              const SolverConfig& config) {
    if (!family.is_centered())
        throw std::invalid_argument("fit: the statistic family has no centering offsets");
    return fit(SurrogateLoss<double>::from_dataset(family, data), family, constraint, config);
}

double concentration_epsilon(double phi_max, double d, double r, Index k1, Index k2, Index n,
                             double delta) {
    if (n <= 0) throw std::invalid_argument("concentration_epsilon: n must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("concentration_epsilon: delta must lie in (0, 1)");
    const double log_term = std::log(2.0 * static_cast<double>(k1 * k2) / delta);
    return std::sqrt(8.0 * phi_max * phi_max * std::exp(4.0 * r * d) * log_term /
                     static_cast<double>(n));
}

LambdaChoice choose_lambda(const StatisticFamily& family, const ConstraintSpec& constraint,
                           Index n, double delta) {
    const StatisticBounds b = statistic_bounds(family, constraint);
    LambdaChoice out;
    out.epsilon = concentration_epsilon(b.phi_max, b.d, constraint.radius, family.rows(),
                                        family.cols(), n, delta);
    out.g = g_constant(constraint.kind, family.rows(), family.cols());
    out.lambda = 2.0 * out.g * out.epsilon;
    return out;
}

std::vector<double> lambda_grid(double center, int count, double factor) {
    if (!(center > 0.0) || count < 1 || !(factor > 1.0))
        throw std::invalid_argument("lambda_grid: need center > 0, count >= 1, factor > 1");
    std::vector<double> out;
    for (int j = -(count / 2); j < count - count / 2; ++j) out.push_back(center * std::pow(factor, j));
    return out;
}

}  // namespace tef
