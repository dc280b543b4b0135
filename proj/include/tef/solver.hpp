#pragma once

#include "tef/loss.hpp"
#include "tef/model.hpp"
#include "tef/norms.hpp"
#include "tef/projection.hpp"
#include "tef/types.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tef {

enum class SolverMode { Constrained, Regularized };
enum class StepRule { Fixed, Backtracking };

SolverMode parse_solver_mode(std::string_view name);
std::string to_string(SolverMode mode);
StepRule parse_step_rule(std::string_view name);
std::string to_string(StepRule rule);

struct SolverConfig {
    SolverMode mode = SolverMode::Constrained;
    /// Penalty weight in regularized mode.
    double lambda = 0.0;
    StepRule step_rule = StepRule::Fixed;
    int max_iters = 50'000;
    /// Stop when ||G_s(Theta)||_F <= tol, G_s = (Theta - T(Theta - s grad)) / s.
    double tol = 1e-8;
    bool fista = false;
    /// Starting point; zero when empty. Projected onto Lambda in constrained mode.
    std::optional<Eigen::MatrixXd> init;
    /// Fixed step; 0 means 1/L with L from the smoothness bound.
    double step = 0.0;
    /// Radius bound on iterates used for L in regularized mode; 0 means 4 r.
    double radius_cap = 0.0;
    double backtrack_beta = 0.5;
    double backtrack_c = 1e-4;
    bool record_trace = false;
};

struct TraceEntry {
    double loss;
    double grad_map_norm;
    double step;
};

struct FitResult {
    Eigen::MatrixXd theta;
    int iterations = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double final_grad_map_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
    double step = 0.0;
    std::vector<TraceEntry> trace;
};

/// Projected (constrained) or proximal (regularized) gradient descent on any
/// objective exposing evaluate(theta, with_gradient) -> LossEvaluation.
/// `lipschitz` sets the fixed step 1/L unless config.step overrides it.
template <typename Scalar, typename Objective>
FitResult minimize(const Objective& f, Index k1, Index k2, const ConstraintSpec& constraint,
                   const SolverConfig& config, double lipschitz) {
    using M = Matrix<Scalar>;
    const bool constrained = config.mode == SolverMode::Constrained;
    const auto lam = static_cast<Scalar>(config.lambda);
    if (!constrained && !(config.lambda >= 0.0))
        throw std::invalid_argument("minimize: lambda must be >= 0");
    if (config.max_iters < 0) throw std::invalid_argument("minimize: max_iters must be >= 0");

    auto penalty = [&](const M& t) -> Scalar {
        return constrained ? Scalar(0) : lam * norm(t, constraint.kind);
    };
    auto step_map = [&](const M& t, Scalar s) -> M {
        return constrained ? project<Scalar>(t, constraint) : prox<Scalar>(t, constraint.kind, s * lam);
    };
    auto objective = [&](const M& t) { return f.evaluate(t, true); };

    M x = config.init ? M(config.init->template cast<Scalar>()) : M::Zero(k1, k2);
    if (x.rows() != k1 || x.cols() != k2) throw ShapeMismatch("minimize: init has the wrong shape");
    if (constrained) x = project<Scalar>(x, constraint);

    const bool backtrack = config.step_rule == StepRule::Backtracking;
    // The line search starts from a unit step: 1/L from the smoothness bound can be
    // smaller than the loss resolves in floating point.
    Scalar s = config.step > 0.0 ? Scalar(config.step)
                                 : Scalar(backtrack ? 1.0 : 1.0 / lipschitz);
    if (!(s > Scalar(0)) || !std::isfinite(static_cast<double>(s)))
        throw std::invalid_argument("minimize: step must be finite and > 0");

    auto ev = objective(x);
    Scalar fx = ev.value;
    M gx = *ev.gradient;
    Scalar Fx = fx + penalty(x);

    FitResult out;
    out.initial_loss = static_cast<double>(fx);

    // FISTA state: extrapolated point y and momentum t.
    M y = x, x_prev = x;
    Scalar t_k(1);
    Scalar fy = fx, Fy = Fx;
    M gy = gx;

    int it = 0;
    for (; it < config.max_iters; ++it) {
        const M& base = config.fista ? y : x;
        const Scalar fbase = config.fista ? fy : fx;
        const Scalar Fbase = config.fista ? Fy : Fx;
        const M& gbase = config.fista ? gy : gx;
        if (backtrack) s = std::min(s * Scalar(2), Scalar(1e12));
        const Scalar s_try = s;

        M z;
        Scalar fz(0), Fz(0);
        M gz;
        while (true) {
            z = step_map(base - s * gbase, s);
            bool ok = true;
            try {
                auto ez = objective(z);
                fz = ez.value;
                gz = std::move(*ez.gradient);
            } catch (const ExpOverflow&) {
                if (!backtrack) throw;
                ok = false;
            }
            if (ok) {
                Fz = fz + penalty(z);
                if (!backtrack) break;
                const M d = z - base;
                const Scalar quad = d.squaredNorm() / (Scalar(2) * s);
                // Convexity gives f(z) - f(base) - <g, d> <= <grad f(z) - g, d>, so this
                // gradient test certifies the quadratic upper bound without the
                // cancellation that limits the value-based test near the optimum.
                const bool curvature_ok = ((gz - gbase).cwiseProduct(d)).sum() <= quad;
                if (config.fista) {
                    if (curvature_ok || fz <= fbase + (gbase.cwiseProduct(d)).sum() + quad)
                        break;
                } else {
                    const Scalar decrease =
                        (gbase.cwiseProduct(d)).sum() + penalty(z) - penalty(base);
                    if (curvature_ok || Fz <= Fbase + Scalar(config.backtrack_c) * decrease)
                        break;
                }
            }
            s *= Scalar(config.backtrack_beta);
            if (s < Scalar(1e-300)) throw std::runtime_error("minimize: step size underflow");
        }
        if (!z.allFinite()) throw std::domain_error("minimize: non-finite iterate");

        Scalar gm = (base - z).norm() / s;
        // A search that shrank until the iterate no longer moves says nothing about
        // stationarity; judge it at the first trial step instead.
        bool stalled = false;
        if (z == base && s < s_try) {
            gm = (base - step_map(base - s_try * gbase, s_try)).norm() / s_try;
            stalled = gm > Scalar(config.tol);
        }
        out.final_grad_map_norm = static_cast<double>(gm);
        if (config.record_trace)
            out.trace.push_back({static_cast<double>(Fbase), static_cast<double>(gm), static_cast<double>(s)});

        if (config.fista) {
            x_prev = x;
            x = z;
            fx = fz;
            Fx = Fz;
            gx = gz;
            const Scalar t_next = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t_k * t_k)) / Scalar(2);
            y = x + ((t_k - Scalar(1)) / t_next) * (x - x_prev);
            t_k = t_next;
            // Restart momentum whenever the objective goes up.
            if (Fz > Fbase) {
                y = x;
                t_k = Scalar(1);
            }
            if (y != x) {
                if (constrained) y = project<Scalar>(y, constraint);
                auto ey = objective(y);
                fy = ey.value;
                gy = std::move(*ey.gradient);
                Fy = fy + penalty(y);
            } else {
                fy = fx;
                Fy = Fx;
                gy = gx;
            }
        } else {
            x = z;
            fx = fz;
            Fx = Fz;
            gx = gz;
        }
        if (gm <= Scalar(config.tol)) {
            out.converged = true;
            ++it;
            break;
        }
        if (stalled) {
            ++it;
            break;
        }
    }
    out.theta = x.template cast<double>();
    out.iterations = it;
    out.final_loss = static_cast<double>(fx);
    out.step = static_cast<double>(s);
    return out;
}

/// Lipschitz constant of the loss gradient over the region iterates can reach.
double fit_lipschitz(const StatisticFamily& family, const ConstraintSpec& constraint,
                     const SolverConfig& config);

/// Fit the surrogate loss of `data`. The family must carry its centering.
FitResult fit(const Dataset& data, const StatisticFamily& family, const ConstraintSpec& constraint,
              const SolverConfig& config);

/// Fit any prepared loss (empirical or grid-population) of the family's shape.
FitResult fit(const SurrogateLoss<double>& loss, const StatisticFamily& family,
              const ConstraintSpec& constraint, const SolverConfig& config);

/// epsilon(n, delta) = sqrt(8 phi_max^2 exp(4 r d) log(2 k1 k2 / delta) / n).
double concentration_epsilon(double phi_max, double d, double r, Index k1, Index k2, Index n,
                             double delta);

/// lambda_n = 2 g epsilon(n, delta).
struct LambdaChoice {
    double lambda;
    double epsilon;
    double g;
};

LambdaChoice choose_lambda(const StatisticFamily& family, const ConstraintSpec& constraint,
                           Index n, double delta);

/// Geometric grid lambda_n * factor^j, j = -(count/2) .. count - count/2 - 1, for tuning.
std::vector<double> lambda_grid(double center, int count, double factor = 2.0);

}  // namespace tef
