#include "tef/support.hpp"

#include <cmath>
#include <numbers>

namespace tef {

SupportKind parse_support_kind(std::string_view name) {
    if (name == "box") return SupportKind::Box;
    if (name == "l1_ball") return SupportKind::L1Ball;
    if (name == "l2_ball") return SupportKind::L2Ball;
    throw ConfigError("unknown support kind '" + std::string(name) + "'");
}

std::string to_string(SupportKind kind) {
    switch (kind) {
        case SupportKind::Box: return "box";
        case SupportKind::L1Ball: return "l1_ball";
        case SupportKind::L2Ball: return "l2_ball";
    }
    return "?";
}

Support::Support(SupportKind kind, int dimension, double bound)
    : kind_(kind), dimension_(dimension), bound_(bound) {
    if (dimension < 1) throw std::invalid_argument("Support: dimension must be >= 1");
    if (!(bound > 0.0) || !std::isfinite(bound))
        throw std::invalid_argument("Support: bound must be finite and > 0");
}

bool Support::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const {
    if (x.size() != dimension_) return false;
    if (!x.allFinite()) return false;
    const double slack = bound_ * (1.0 + tol);
    switch (kind_) {
        case SupportKind::Box: return x.cwiseAbs().maxCoeff() <= slack;
        case SupportKind::L1Ball: return x.lpNorm<1>() <= slack;
        case SupportKind::L2Ball: return x.norm() <= slack;
    }
    return false;
}

double Support::volume() const {
    const double p = dimension_;
    switch (kind_) {
        case SupportKind::Box: return std::pow(2.0 * bound_, p);
        case SupportKind::L1Ball: return std::pow(2.0 * bound_, p) / std::tgamma(p + 1.0);
        case SupportKind::L2Ball:
            return std::pow(std::numbers::pi, p / 2.0) * std::pow(bound_, p) /
                   std::tgamma(p / 2.0 + 1.0);
    }
    return 0.0;
}

int Support::uniforms_per_point() const {
    switch (kind_) {
        case SupportKind::Box: return dimension_;
        case SupportKind::L1Ball: return 2 * dimension_ + 1;
        case SupportKind::L2Ball: return 2 * ((dimension_ + 1) / 2) + 1;
    }
    return 0;
}

Eigen::VectorXd Support::uniform_point(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    if (u.size() != uniforms_per_point())
        throw std::invalid_argument("Support::uniform_point: wrong number of uniforms");
    const int p = dimension_;
    Eigen::VectorXd x(p);
    switch (kind_) {
        case SupportKind::Box:
            x = bound_ * (2.0 * u.array() - 1.0);
            break;
        case SupportKind::L1Ball: {
            // (E_1..E_p) / sum(E_1..E_{p+1}) is uniform on the simplex body.
            Eigen::VectorXd e = -u.head(p + 1).array().log();
            const double total = e.sum();
            for (int i = 0; i < p; ++i) {
                const double sign = u(p + 1 + i) < 0.5 ? -1.0 : 1.0;
                x(i) = bound_ * sign * e(i) / total;
            }
            break;
        }
        case SupportKind::L2Ball: {
            const int pairs = (p + 1) / 2;
            Eigen::VectorXd g(2 * pairs);
            for (int k = 0; k < pairs; ++k) {
                const double r = std::sqrt(-2.0 * std::log(u(2 * k)));
                const double a = 2.0 * std::numbers::pi * u(2 * k + 1);
                g(2 * k) = r * std::cos(a);
                g(2 * k + 1) = r * std::sin(a);
            }
            const double radius = bound_ * std::pow(u(2 * pairs), 1.0 / p);
            x = radius * g.head(p) / g.head(p).norm();
            break;
        }
    }
    return x;
}

}  // namespace tef
