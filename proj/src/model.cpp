#include "tef/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tef {

namespace {

constexpr Index kBlock = 4096;

std::vector<std::vector<int>> frequency_vectors(int p, int max_frequency) {
    std::vector<std::vector<int>> out;
    std::vector<int> l(p, 0);
    while (true) {
        int j = 0;
        while (j < p && l[j] == max_frequency) l[j++] = 0;
        if (j == p) break;
        ++l[j];
        out.push_back(l);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        const int sa = std::accumulate(a.begin(), a.end(), 0);
        const int sb = std::accumulate(b.begin(), b.end(), 0);
        if (sa != sb) return sa < sb;
        return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
    });
    return out;
}

std::vector<std::vector<int>> multi_indices(int p, int degree) {
    // Every exponent vector with total degree 1..degree, ordered by degree.
    std::vector<std::vector<int>> out;
    for (const auto& l : frequency_vectors(p, degree)) {
        if (std::accumulate(l.begin(), l.end(), 0) <= degree) out.push_back(l);
    }
    return out;
}

double sinc(double z) { return z == 0.0 ? 1.0 : std::sin(z) / z; }

/// Mean of Phi over the cells of a grid, accumulated in fixed blocks.
Eigen::MatrixXd grid_mean(const StatisticFamily& family, const CellGrid& grid) {
    const Index n = grid.size();
    const Index k = family.size();
    const Index blocks = (n + kBlock - 1) / kBlock;
    Eigen::MatrixXd partial(blocks, k);
    for (Index b = 0; b < blocks; ++b) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
        const Index end = std::min(n, (b + 1) * kBlock);
        for (Index c = b * kBlock; c < end; ++c) acc += family.evaluate(grid.center(c)).reshaped();
        partial.row(b) = acc.transpose();
    }
    Eigen::VectorXd mean(k);
    for (Index j = 0; j < k; ++j) mean(j) = tree_sum(partial.col(j)) / static_cast<double>(n);
    return mean.reshaped(family.rows(), family.cols());
}

int coarse_bins(int p, double max_cells, int wanted) {
    const int cap = static_cast<int>(std::floor(std::pow(max_cells, 1.0 / p)));
    return std::max(2, std::min(wanted, cap));
}

}  // namespace

// ---------------------------------------------------------------------------

double Term::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (kind == Kind::Monomial) {
        double v = 1.0;
        for (std::size_t i = 0; i < powers.size(); ++i)
            for (int e = 0; e < powers[i]; ++e) v *= x(static_cast<Index>(i));
        return v;
    }
    double arg = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) arg += powers[i] * x(static_cast<Index>(i));
    return kind == Kind::Sine ? std::sin(arg) : std::cos(arg);
}

int Term::degree() const {
    return kind == Kind::Monomial ? std::accumulate(powers.begin(), powers.end(), 0) : 0;
}

StatisticKind parse_statistic_kind(std::string_view name) {
    if (name == "pairwise_quadratic") return StatisticKind::PairwiseQuadratic;
    if (name == "monomial_grid") return StatisticKind::MonomialGrid;
    if (name == "polynomial_multiindex") return StatisticKind::PolynomialMultiindex;
    if (name == "trigonometric") return StatisticKind::Trigonometric;
    if (name == "combined") return StatisticKind::Combined;
    throw ConfigError("unknown statistic kind '" + std::string(name) + "'");
}

std::string to_string(StatisticKind kind) {
    switch (kind) {
        case StatisticKind::PairwiseQuadratic: return "pairwise_quadratic";
        case StatisticKind::MonomialGrid: return "monomial_grid";
        case StatisticKind::PolynomialMultiindex: return "polynomial_multiindex";
        case StatisticKind::Trigonometric: return "trigonometric";
        case StatisticKind::Combined: return "combined";
    }
    return "?";
}

CenteringMethod parse_centering_method(std::string_view name) {
    if (name == "none") return CenteringMethod::None;
    if (name == "closed_form") return CenteringMethod::ClosedForm;
    if (name == "monte_carlo") return CenteringMethod::MonteCarlo;
    if (name == "grid_quadrature") return CenteringMethod::GridQuadrature;
    throw ConfigError("unknown centering method '" + std::string(name) + "'");
}

std::string to_string(CenteringMethod method) {
    switch (method) {
        case CenteringMethod::None: return "none";
        case CenteringMethod::ClosedForm: return "closed_form";
        case CenteringMethod::MonteCarlo: return "monte_carlo";
        case CenteringMethod::GridQuadrature: return "grid_quadrature";
    }
    return "?";
}

// ---------------------------------------------------------------------------

StatisticFamily::StatisticFamily(StatisticKind kind, Support support, Index rows, Index cols,
                                 std::vector<Term> terms)
    : kind_(kind), support_(support), rows_(rows), cols_(cols), terms_(std::move(terms)) {
    if (rows_ < 1 || cols_ < 1) throw std::invalid_argument("StatisticFamily: empty shape");
    if (static_cast<Index>(terms_.size()) != rows_ * cols_)
        throw ShapeMismatch("StatisticFamily: term count does not match k1 x k2");
    centering_.offsets = Eigen::MatrixXd::Zero(rows_, cols_);
    centering_.standard_error = Eigen::MatrixXd::Zero(rows_, cols_);
}

StatisticFamily StatisticFamily::pairwise_quadratic(const Support& support) {
    const int p = support.dimension();
    std::vector<Term> terms;
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < p; ++i) {
            Term t{Term::Kind::Monomial, std::vector<int>(p, 0)};
            ++t.powers[i];
            ++t.powers[j];
            terms.push_back(std::move(t));
        }
    }
    return {StatisticKind::PairwiseQuadratic, support, p, p, std::move(terms)};
}

StatisticFamily StatisticFamily::monomial_grid(const Support& support, int k1, int k2) {
    if (support.dimension() != 2)
        throw std::invalid_argument("monomial_grid: requires a two-dimensional support");
    if (k1 < 1 || k2 < 1) throw std::invalid_argument("monomial_grid: k1, k2 must be >= 1");
    std::vector<Term> terms;
    for (int j = 1; j <= k2; ++j)
        for (int i = 1; i <= k1; ++i) terms.push_back({Term::Kind::Monomial, {i, j}});
    return {StatisticKind::MonomialGrid, support, k1, k2, std::move(terms)};
}

StatisticFamily StatisticFamily::polynomial(const Support& support, int degree) {
    if (degree < 1) throw std::invalid_argument("polynomial: degree must be >= 1");
    std::vector<Term> terms;
    for (auto& l : multi_indices(support.dimension(), degree))
        terms.push_back({Term::Kind::Monomial, std::move(l)});
    const auto k = static_cast<Index>(terms.size());
    return {StatisticKind::PolynomialMultiindex, support, k, 1, std::move(terms)};
}

StatisticFamily StatisticFamily::trigonometric(const Support& support, int max_frequency) {
    if (max_frequency < 1) throw std::invalid_argument("trigonometric: max_frequency must be >= 1");
    const auto freqs = frequency_vectors(support.dimension(), max_frequency);
    std::vector<Term> terms;
    for (const auto& l : freqs) terms.push_back({Term::Kind::Sine, l});
    for (const auto& l : freqs) terms.push_back({Term::Kind::Cosine, l});
    const auto k1 = static_cast<Index>(freqs.size());
    return {StatisticKind::Trigonometric, support, k1, 2, std::move(terms)};
}

StatisticFamily StatisticFamily::combined(const Support& support, int degree, int max_frequency) {
    if (degree < 1 || max_frequency < 1)
        throw std::invalid_argument("combined: degree and max_frequency must be >= 1");
    std::vector<Term> terms;
    for (auto& l : multi_indices(support.dimension(), degree))
        terms.push_back({Term::Kind::Monomial, std::move(l)});
    for (const auto& l : frequency_vectors(support.dimension(), max_frequency)) {
        terms.push_back({Term::Kind::Sine, l});
        terms.push_back({Term::Kind::Cosine, l});
    }
    const auto k = static_cast<Index>(terms.size());
    return {StatisticKind::Combined, support, k, 1, std::move(terms)};
}

int StatisticFamily::max_degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.degree());
    return d;
}

bool StatisticFamily::has_trigonometric_terms() const {
    return std::any_of(terms_.begin(), terms_.end(),
                       [](const Term& t) { return t.kind != Term::Kind::Monomial; });
}

bool StatisticFamily::has_polynomial_terms() const {
    return std::any_of(terms_.begin(), terms_.end(),
                       [](const Term& t) { return t.kind == Term::Kind::Monomial; });
}

StatisticFamily StatisticFamily::with_centering(Centering centering) const {
    if (centering.offsets.rows() != rows_ || centering.offsets.cols() != cols_)
        throw ShapeMismatch("with_centering: offsets shape does not match the family");
    if (!centering.offsets.allFinite())
        throw std::invalid_argument("with_centering: non-finite offsets");
    if (centering.standard_error.size() == 0)
        centering.standard_error = Eigen::MatrixXd::Zero(rows_, cols_);
    StatisticFamily out = *this;
    out.centering_ = std::move(centering);
    return out;
}

StatisticFamily StatisticFamily::uncentered() const {
    StatisticFamily out = *this;
    out.centering_ = Centering{};
    out.centering_.offsets = Eigen::MatrixXd::Zero(rows_, cols_);
    out.centering_.standard_error = Eigen::MatrixXd::Zero(rows_, cols_);
    return out;
}

void StatisticFamily::check_point(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != support_.dimension())
        throw ShapeMismatch("point has dimension " + std::to_string(x.size()) + ", support has " +
                            std::to_string(support_.dimension()));
    if (!support_.contains(x)) throw OutOfSupport("point lies outside the declared support");
}

void StatisticFamily::fill(const Eigen::Ref<const Eigen::VectorXd>& x, double* out) const {
    if (kind_ == StatisticKind::PairwiseQuadratic) {
        Eigen::Map<Eigen::MatrixXd>(out, rows_, cols_).noalias() = x * x.transpose();
        return;
    }
    for (std::size_t e = 0; e < terms_.size(); ++e) out[e] = terms_[e].evaluate(x);
}

Eigen::MatrixXd StatisticFamily::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_point(x);
    Eigen::MatrixXd out(rows_, cols_);
    fill(x, out.data());
    return out;
}

Eigen::MatrixXd StatisticFamily::centered(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return evaluate(x) - centering_.offsets;
}

Eigen::MatrixXd StatisticFamily::design(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                        bool centered, bool check_support) const {
    if (points.cols() != support_.dimension())
        throw ShapeMismatch("design: points have " + std::to_string(points.cols()) +
                            " columns, support dimension is " +
                            std::to_string(support_.dimension()));
    const Index n = points.rows();
    const Index k = size();
    // Row-major scratch so each point's statistic is written contiguously.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(n, k);
    Eigen::VectorXd x(points.cols());
    for (Index t = 0; t < n; ++t) {
        x = points.row(t).transpose();
        if (check_support) check_point(x);
        fill(x, out.row(t).data());
        if (centered) out.row(t) -= centering_.offsets.reshaped().transpose();
    }
    if (!out.allFinite()) throw std::domain_error("design: non-finite statistic value");
    return out;
}

std::vector<Eigen::MatrixXd> StatisticFamily::identifiable_basis() const {
    std::vector<Eigen::MatrixXd> basis;
    std::vector<bool> used(terms_.size(), false);
    for (std::size_t e = 0; e < terms_.size(); ++e) {
        if (used[e]) continue;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows_, cols_);
        for (std::size_t f = e; f < terms_.size(); ++f) {
            if (!used[f] && terms_[f] == terms_[e]) {
                used[f] = true;
                b.reshaped()(static_cast<Index>(f)) = 1.0;
            }
        }
        basis.push_back(std::move(b));
    }
    return basis;
}

Eigen::MatrixXd StatisticFamily::identifiable_projector() const {
    const auto basis = identifiable_basis();
    Eigen::MatrixXd q(size(), static_cast<Index>(basis.size()));
    for (std::size_t m = 0; m < basis.size(); ++m) {
        const auto v = basis[m].reshaped();
        q.col(static_cast<Index>(m)) = v / v.norm();
    }
    return q;  // Indicator groups are disjoint, so the columns are orthonormal.
}

// ---------------------------------------------------------------------------

Centering compute_centering(const StatisticFamily& family, const CenteringSpec& spec) {
    const Support& support = family.support();
    const Index k1 = family.rows();
    const Index k2 = family.cols();
    Centering c;
    c.method = spec.method;
    c.offsets = Eigen::MatrixXd::Zero(k1, k2);
    c.standard_error = Eigen::MatrixXd::Zero(k1, k2);

    switch (spec.method) {
        case CenteringMethod::None:
            break;
        case CenteringMethod::ClosedForm: {
            if (support.kind() != SupportKind::Box)
                throw std::invalid_argument(
                    "compute_centering: closed_form needs a box support; use grid_quadrature or "
                    "monte_carlo for " +
                    to_string(support.kind()));
            const double b = support.bound();
            for (Index j = 0; j < k2; ++j) {
                for (Index i = 0; i < k1; ++i) {
                    const Term& t = family.term(i, j);
                    double v = 1.0;
                    switch (t.kind) {
                        case Term::Kind::Monomial:
                            for (int e : t.powers)
                                v *= (e % 2 == 1) ? 0.0 : std::pow(b, e) / (e + 1);
                            break;
                        case Term::Kind::Sine:
                            v = 0.0;
                            break;
                        case Term::Kind::Cosine:
                            // E cos(<l,x>) = prod_i E cos(l_i x_i) for independent coordinates.
                            for (int l : t.powers) v *= sinc(l * b);
                            break;
                    }
                    c.offsets(i, j) = v;
                }
            }
            break;
        }
        case CenteringMethod::MonteCarlo: {
            if (spec.count <= 0)
                throw std::invalid_argument("compute_centering: monte_carlo needs count > 0");
            c.seed = spec.seed;
            c.count = spec.count;
            const CounterRng rng(spec.seed);
            const int per = support.uniforms_per_point();
            const Index k = family.size();
            const Index n = spec.count;
            const Index blocks = (n + kBlock - 1) / kBlock;
            Eigen::MatrixXd sum_blocks(blocks, k), sq_blocks(blocks, k);
            Eigen::VectorXd u(per);
            Eigen::MatrixXd phi(k1, k2);
            for (Index b = 0; b < blocks; ++b) {
                Eigen::VectorXd s = Eigen::VectorXd::Zero(k), s2 = Eigen::VectorXd::Zero(k);
                const Index end = std::min(n, (b + 1) * kBlock);
                for (Index t = b * kBlock; t < end; ++t) {
                    for (int m = 0; m < per; ++m)
                        u(m) = rng.uniform(static_cast<std::uint64_t>(t) * per + m);
                    phi = family.evaluate(support.uniform_point(u));
                    s += phi.reshaped();
                    s2 += phi.reshaped().cwiseAbs2();
                }
                sum_blocks.row(b) = s.transpose();
                sq_blocks.row(b) = s2.transpose();
            }
            const double nn = static_cast<double>(n);
            for (Index e = 0; e < k; ++e) {
                const double mean = tree_sum(sum_blocks.col(e)) / nn;
                const double second = tree_sum(sq_blocks.col(e)) / nn;
                const double var = std::max(0.0, second - mean * mean) * nn / std::max(1.0, nn - 1);
                c.offsets.reshaped()(e) = mean;
                c.standard_error.reshaped()(e) = std::sqrt(var / nn);
            }
            break;
        }
        case CenteringMethod::GridQuadrature: {
            const CellGrid fine(support, spec.bins);
            c.bins = spec.bins;
            c.offsets = grid_mean(family, fine);
            if (spec.bins >= 4) {
                const CellGrid coarse(support, spec.bins / 2);
                c.standard_error = (c.offsets - grid_mean(family, coarse)).cwiseAbs();
            }
            break;
        }
    }
    c.tolerance = c.standard_error.size() ? c.standard_error.maxCoeff() : 0.0;
    return c;
}

StatisticFamily centered_family(const StatisticFamily& family, const CenteringSpec& spec) {
    return family.with_centering(compute_centering(family, spec));
}

CenteringSpec default_centering(const Support& support, int bins) {
    CenteringSpec spec;
    spec.method = support.kind() == SupportKind::Box ? CenteringMethod::ClosedForm
                                                     : CenteringMethod::GridQuadrature;
    spec.bins = bins;
    return spec;
}

// ---------------------------------------------------------------------------

StatisticBounds statistic_bounds(const StatisticFamily& family, const ConstraintSpec& constraint) {
    const Support& support = family.support();
    const double b = support.bound();
    const int l = family.max_degree();
    const bool poly = family.has_polynomial_terms();
    const bool trig = family.has_trigonometric_terms();

    StatisticBounds out;
    // Every monomial is bounded by b^degree on [-b,b]^p (and on the balls inside it).
    out.phi_max = poly ? std::max(1.0, std::pow(b, l)) : 1.0;

    std::optional<double> d;
    if (constraint.kind == NormKind::EntrywiseL1) {
        d = out.phi_max;  // the dual is the max norm
    } else if (poly && !trig && support.kind() == SupportKind::L1Ball &&
               (constraint.kind == NormKind::Max || constraint.kind == NormKind::Frobenius)) {
        d = std::pow(1.0 + b, l);
    } else if (family.kind() == StatisticKind::PairwiseQuadratic &&
               constraint.kind == NormKind::Nuclear && support.kind() == SupportKind::L2Ball) {
        d = b * b;  // Phi = x x^T has spectral norm ||x||_2^2
    }
    if (d) {
        out.d = *d;
        return out;
    }

    // No tabulated bound: maximum over a dense grid, with a safety factor of 2.
    const int p = support.dimension();
    const CellGrid grid(support, coarse_bins(p, 2e5, 400));
    double best = 0.0;
    for (Index c = 0; c < grid.size(); ++c)
        best = std::max(best, dual_norm(family.evaluate(grid.center(c)), constraint.kind));
    out.d = 2.0 * best;
    out.d_numerical = true;
    return out;
}

MinimalityReport check_minimality(const StatisticFamily& family, int bins) {
    const int p = family.support().dimension();
    const CellGrid grid(family.support(), coarse_bins(p, 1e6, bins));
    const Eigen::MatrixXd q = family.identifiable_projector();
    const Eigen::MatrixXd z = family.design(grid.centers(), false, false) * q;
    const Eigen::RowVectorXd mean = z.colwise().mean();
    const Eigen::MatrixXd centered = z.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(z.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);

    MinimalityReport r;
    r.min_eigenvalue = eig.eigenvalues()(0);
    r.minimal = r.min_eigenvalue > r.threshold;
    r.merged_entries = family.size() - q.cols();
    if (!r.minimal)
        r.warning = "statistic family looks non-minimal: smallest grid covariance eigenvalue " +
                    std::to_string(r.min_eigenvalue) + " <= " + std::to_string(r.threshold);
    return r;
}

}  // namespace tef
