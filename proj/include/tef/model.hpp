#pragma once

#include "tef/grid.hpp"
#include "tef/norms.hpp"
#include "tef/support.hpp"
#include "tef/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tef {

/// One scalar entry Phi_ij of the natural statistic.
struct Term {
    enum class Kind { Monomial, Sine, Cosine };

    Kind kind = Kind::Monomial;
    /// Exponents for monomials, integer frequencies for sine/cosine.
    std::vector<int> powers;

    [[nodiscard]] double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    [[nodiscard]] int degree() const;

    friend bool operator==(const Term&, const Term&) = default;
};

enum class StatisticKind {
    PairwiseQuadratic,
    MonomialGrid,
    PolynomialMultiindex,
    Trigonometric,
    Combined,
};

StatisticKind parse_statistic_kind(std::string_view name);
std::string to_string(StatisticKind kind);

enum class CenteringMethod { None, ClosedForm, MonteCarlo, GridQuadrature };

CenteringMethod parse_centering_method(std::string_view name);
std::string to_string(CenteringMethod method);

struct CenteringSpec {
    CenteringMethod method = CenteringMethod::GridQuadrature;
    std::uint64_t seed = 0;
    std::int64_t count = 0;
    int bins = 200;
};

/// E_{U_X}[Phi] together with how it was obtained.
struct Centering {
    Eigen::MatrixXd offsets;
    CenteringMethod method = CenteringMethod::None;
    /// Per-entry standard error (Monte Carlo) or discretization estimate
    /// |mean(bins) - mean(bins/2)| (grid quadrature); zero for closed form.
    Eigen::MatrixXd standard_error;
    /// Scalar budget dependent checks may use: max entry of standard_error.
    double tolerance = 0.0;
    std::uint64_t seed = 0;
    std::int64_t count = 0;
    int bins = 0;
};

/// Natural statistic Phi: X -> R^{k1 x k2} with its centering offsets.
/// Immutable; the with_* members return modified copies.
class StatisticFamily {
public:
    /// Phi_ij(x) = x_i x_j, k1 = k2 = p.
    static StatisticFamily pairwise_quadratic(const Support& support);
    /// Phi_ij(x) = x_1^i x_2^j for i in [k1], j in [k2]; needs p = 2.
    static StatisticFamily monomial_grid(const Support& support, int k1, int k2);
    /// Every monomial with total degree 1..degree, as a column (k2 = 1).
    static StatisticFamily polynomial(const Support& support, int degree);
    /// sin / cos of <l, x> for l in {0..max_frequency}^p \ {0}; column 0 sin, 1 cos.
    static StatisticFamily trigonometric(const Support& support, int max_frequency);
    /// Polynomial terms followed by trigonometric terms, as a column.
    static StatisticFamily combined(const Support& support, int degree, int max_frequency);

    [[nodiscard]] StatisticKind kind() const { return kind_; }
    [[nodiscard]] Index rows() const { return rows_; }
    [[nodiscard]] Index cols() const { return cols_; }
    [[nodiscard]] Index size() const { return rows_ * cols_; }
    [[nodiscard]] const Support& support() const { return support_; }
    /// Highest polynomial degree among the terms (0 when there are none).
    [[nodiscard]] int max_degree() const;
    [[nodiscard]] bool has_trigonometric_terms() const;
    [[nodiscard]] bool has_polynomial_terms() const;
    [[nodiscard]] const Term& term(Index i, Index j) const { return terms_[j * rows_ + i]; }

    [[nodiscard]] bool is_centered() const { return centering_.method != CenteringMethod::None; }
    [[nodiscard]] const Centering& centering() const { return centering_; }
    [[nodiscard]] StatisticFamily with_centering(Centering centering) const;
    /// Same statistic with zero offsets (method None).
    [[nodiscard]] StatisticFamily uncentered() const;

    /// Phi(x), uncentered. Throws OutOfSupport / ShapeMismatch.
    [[nodiscard]] Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Phi(x) - offsets.
    [[nodiscard]] Eigen::MatrixXd centered(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Row t = vec(Phi(points.row(t))) (centered when requested). Points are
    /// checked against the support unless check_support is false.
    [[nodiscard]] Eigen::MatrixXd design(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                         bool centered = true, bool check_support = true) const;

    /// Basis of the directions the statistic can distinguish: entries carrying
    /// the same term are merged (e.g. x_i x_j and x_j x_i), each basis matrix is
    /// the 0/1 indicator of one group.
    [[nodiscard]] std::vector<Eigen::MatrixXd> identifiable_basis() const;
    /// Orthonormal columns spanning vec() of identifiable_basis().
    [[nodiscard]] Eigen::MatrixXd identifiable_projector() const;

private:
    StatisticFamily(StatisticKind kind, Support support, Index rows, Index cols,
                    std::vector<Term> terms);
    void check_point(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    void fill(const Eigen::Ref<const Eigen::VectorXd>& x, double* out) const;

    StatisticKind kind_;
    Support support_;
    Index rows_;
    Index cols_;
    std::vector<Term> terms_;  // column-major
    Centering centering_;
};

/// E_{U_X}[Phi]. ClosedForm requires a box support and polynomial/trigonometric
/// terms. Throws std::invalid_argument for unsupported combinations or count 0.
Centering compute_centering(const StatisticFamily& family, const CenteringSpec& spec);

/// Convenience: compute_centering then with_centering.
StatisticFamily centered_family(const StatisticFamily& family, const CenteringSpec& spec);

/// The centering method used when a config does not choose one: closed form on
/// boxes, grid quadrature on balls.
CenteringSpec default_centering(const Support& support, int bins = 200);

/// Valid upper bounds phi_max >= ||Phi(x)||_max and d >= R*(Phi(x)) on X.
struct StatisticBounds {
    double phi_max = 0.0;
    double d = 0.0;
    bool phi_max_numerical = false;
    bool d_numerical = false;
};

StatisticBounds statistic_bounds(const StatisticFamily& family, const ConstraintSpec& constraint);

/// Numerical minimality check: smallest eigenvalue of the uniform-grid
/// covariance of the statistic in identifiable coordinates.
struct MinimalityReport {
    double min_eigenvalue = 0.0;
    double threshold = 1e-10;
    bool minimal = false;
    /// Entries merged by identifiable_basis(); nonzero means the raw vec(Phi)
    /// covariance is singular even though the family is minimal in its
    /// identifiable coordinates.
    Index merged_entries = 0;
    std::string warning;
};

MinimalityReport check_minimality(const StatisticFamily& family, int bins = 60);

}  // namespace tef
