#pragma once

#include "tef/types.hpp"

#include <string>
#include <string_view>

namespace tef {

enum class SupportKind { Box, L1Ball, L2Ball };

SupportKind parse_support_kind(std::string_view name);
std::string to_string(SupportKind kind);

/// Truncated domain: [-b, b]^p, or the origin-centered L1 / L2 ball of radius b.
class Support {
public:
    Support(SupportKind kind, int dimension, double bound);

    [[nodiscard]] SupportKind kind() const { return kind_; }
    [[nodiscard]] int dimension() const { return dimension_; }
    [[nodiscard]] double bound() const { return bound_; }

    [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& x,
                                double tol = 1e-12) const;
    [[nodiscard]] double volume() const;

    /// Map independent uniforms on (0,1) to a uniformly distributed point of
    /// the support. `u` must hold uniforms_per_point() values.
    [[nodiscard]] Eigen::VectorXd uniform_point(const Eigen::Ref<const Eigen::VectorXd>& u) const;
    [[nodiscard]] int uniforms_per_point() const;

    friend bool operator==(const Support&, const Support&) = default;

private:
    SupportKind kind_;
    int dimension_;
    double bound_;
};

}  // namespace tef
