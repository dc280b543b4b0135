#pragma once

#include "tef/norms.hpp"
#include "tef/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <functional>
#include <vector>

namespace tef {

/// Euclidean projection of v onto {u : ||u||_1 <= radius} by the sorted-threshold rule.
template <typename Scalar>
Vector<Scalar> project_l1_ball(const Vector<Scalar>& v, Scalar radius) {
    using std::abs;
    if (radius <= Scalar(0)) return Vector<Scalar>::Zero(v.size());
    if (v.cwiseAbs().sum() <= radius) return v;
    std::vector<Scalar> a(v.size());
    for (Index i = 0; i < v.size(); ++i) a[static_cast<std::size_t>(i)] = abs(v(i));
    std::sort(a.begin(), a.end(), std::greater<>());
    Scalar cumsum(0), tau(0);
    for (std::size_t j = 0; j < a.size(); ++j) {
        cumsum += a[j];
        const Scalar t = (cumsum - radius) / static_cast<Scalar>(j + 1);
        if (a[j] - t > Scalar(0)) tau = t;
        else break;
    }
    Vector<Scalar> out(v.size());
    for (Index i = 0; i < v.size(); ++i) {
        const Scalar m = std::max(abs(v(i)) - tau, Scalar(0));
        out(i) = v(i) < Scalar(0) ? -m : m;
    }
    return out;
}

namespace detail {

template <typename Scalar>
void require_finite(const Matrix<Scalar>& m, const char* who) {
    if (!m.allFinite()) throw std::domain_error(std::string(who) + ": non-finite input");
}

/// U diag(f(sigma)) V^T.
template <typename Scalar, typename F>
Matrix<Scalar> map_singular_values(const Matrix<Scalar>& m, F&& f) {
    Eigen::JacobiSVD<Matrix<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector<Scalar> s = f(Vector<Scalar>(svd.singularValues()));
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

template <typename Scalar>
Matrix<Scalar> soft_threshold(const Matrix<Scalar>& m, Scalar t) {
    return m.unaryExpr([t](Scalar x) {
        using std::abs;
        const Scalar a = std::max(abs(x) - t, Scalar(0));
        return x < Scalar(0) ? -a : a;
    });
}

}  // namespace detail

/// Frobenius projection onto {Theta : R(Theta) <= radius}. Feasible inputs are
/// returned unchanged.
template <typename Scalar>
Matrix<Scalar> project(const Matrix<Scalar>& theta, NormKind kind, Scalar radius) {
    detail::require_finite(theta, "project");
    if (radius <= Scalar(0)) return Matrix<Scalar>::Zero(theta.rows(), theta.cols());
    if (norm(theta, kind) <= radius) return theta;
    switch (kind) {
        case NormKind::Max:
            return theta.cwiseMax(-radius).cwiseMin(radius);
        case NormKind::Frobenius:
            return theta * (radius / theta.norm());
        case NormKind::Nuclear:
            return detail::map_singular_values(theta, [radius](const Vector<Scalar>& s) {
                return project_l1_ball(s, radius);
            });
        case NormKind::EntrywiseL1:
            return project_l1_ball(Vector<Scalar>(theta.reshaped()), radius)
                .reshaped(theta.rows(), theta.cols());
    }
    throw std::invalid_argument("project: unknown norm");
}

template <typename Scalar>
Matrix<Scalar> project(const Matrix<Scalar>& theta, const ConstraintSpec& c) {
    return project(theta, c.kind, static_cast<Scalar>(c.radius));
}

/// Projection onto the dual-norm ball {M : R*(M) <= radius}.
template <typename Scalar>
Matrix<Scalar> project_dual_ball(const Matrix<Scalar>& m, NormKind kind, Scalar radius) {
    switch (kind) {
        case NormKind::Max: return project(m, NormKind::EntrywiseL1, radius);
        case NormKind::EntrywiseL1: return project(m, NormKind::Max, radius);
        case NormKind::Frobenius: return project(m, NormKind::Frobenius, radius);
        case NormKind::Nuclear:
            detail::require_finite(m, "project_dual_ball");
            if (spectral_norm(m) <= radius) return m;
            return detail::map_singular_values(m, [radius](const Vector<Scalar>& s) {
                return Vector<Scalar>(s.cwiseMin(radius));
            });
    }
    throw std::invalid_argument("project_dual_ball: unknown norm");
}

/// prox of scale * R: argmin_U R(U) * scale + ||U - Theta||_F^2 / 2.
template <typename Scalar>
Matrix<Scalar> prox(const Matrix<Scalar>& theta, NormKind kind, Scalar scale) {
    detail::require_finite(theta, "prox");
    if (scale < Scalar(0)) throw std::invalid_argument("prox: scale must be >= 0");
    if (scale == Scalar(0)) return theta;
    switch (kind) {
        case NormKind::EntrywiseL1:
            return detail::soft_threshold(theta, scale);
        case NormKind::Nuclear:
            return detail::map_singular_values(theta, [scale](const Vector<Scalar>& s) {
                return Vector<Scalar>((s.array() - scale).cwiseMax(Scalar(0)));
            });
        case NormKind::Frobenius: {
            const Scalar n = theta.norm();
            if (n <= scale) return Matrix<Scalar>::Zero(theta.rows(), theta.cols());
            return theta * (Scalar(1) - scale / n);
        }
        case NormKind::Max:
            // Moreau: prox of the max norm is the residual of the dual (L1) ball projection.
            return theta - project(theta, NormKind::EntrywiseL1, scale);
    }
    throw std::invalid_argument("prox: unknown norm");
}

}  // namespace tef
