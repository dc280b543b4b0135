#pragma once

#include "tef/types.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>
#include <string_view>

namespace tef {

/// Matrix norms that can define the parameter set {Theta : R(Theta) <= r}.
enum class NormKind { Max, Frobenius, Nuclear, EntrywiseL1 };

NormKind parse_norm_kind(std::string_view name);
std::string to_string(NormKind kind);

template <typename Derived>
typename Derived::Scalar singular_value_sum(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (m.size() == 0) return Scalar(0);
    Eigen::JacobiSVD<Matrix<Scalar>> svd(m.eval());
    return svd.singularValues().sum();
}

template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (m.size() == 0) return Scalar(0);
    Eigen::JacobiSVD<Matrix<Scalar>> svd(m.eval());
    return svd.singularValues()(0);
}

template <typename Derived>
typename Derived::Scalar norm(const Eigen::MatrixBase<Derived>& m, NormKind kind) {
    switch (kind) {
        case NormKind::Max: return m.cwiseAbs().maxCoeff();
        case NormKind::Frobenius: return m.norm();
        case NormKind::Nuclear: return singular_value_sum(m);
        case NormKind::EntrywiseL1: return m.cwiseAbs().sum();
    }
    throw std::invalid_argument("norm: unknown kind");
}

/// R*(M) for R = norm(., kind).
template <typename Derived>
typename Derived::Scalar dual_norm(const Eigen::MatrixBase<Derived>& m, NormKind kind) {
    switch (kind) {
        case NormKind::Max: return m.cwiseAbs().sum();
        case NormKind::Frobenius: return m.norm();
        case NormKind::Nuclear: return spectral_norm(m);
        case NormKind::EntrywiseL1: return m.cwiseAbs().maxCoeff();
    }
    throw std::invalid_argument("dual_norm: unknown kind");
}

/// sup over nonzero M of R*(M) / ||M||_max.
inline double g_constant(NormKind kind, Index k1, Index k2) {
    const double k = static_cast<double>(k1 * k2);
    switch (kind) {
        case NormKind::Max: return k;                 // dual L_{1,1}
        case NormKind::Frobenius: return std::sqrt(k);
        case NormKind::Nuclear: return std::sqrt(k);  // spectral norm, attained by the all-ones matrix
        case NormKind::EntrywiseL1: return 1.0;
    }
    throw std::invalid_argument("g_constant: unknown norm");
}

/// The parameter set Lambda = {Theta : R(Theta) <= radius}.
struct ConstraintSpec {
    NormKind kind = NormKind::Frobenius;
    double radius = 1.0;

    ConstraintSpec() = default;
    ConstraintSpec(NormKind k, double r) : kind(k), radius(r) {
        if (!(r >= 0.0) || !std::isfinite(r))
            throw std::invalid_argument("ConstraintSpec: radius must be finite and >= 0");
    }

    template <typename Derived>
    [[nodiscard]] typename Derived::Scalar value(const Eigen::MatrixBase<Derived>& m) const {
        return norm(m, kind);
    }

    /// R(m) <= radius, with a relative slack for rounding in the norm itself.
    template <typename Derived>
    [[nodiscard]] bool contains(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-12) const {
        return static_cast<double>(value(m)) <= radius * (1.0 + rel_tol) + rel_tol;
    }
};

}  // namespace tef
