#pragma once

#include "tef/model.hpp"
#include "tef/norms.hpp"
#include "tef/types.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace tef {

/// n samples in X, one per row.
struct Dataset {
    Eigen::MatrixXd samples;
    /// "synthetic seed=<s> sampler=<name>" or "external file=<path>".
    std::string provenance;

    [[nodiscard]] Index size() const { return samples.rows(); }
    [[nodiscard]] Index dimension() const { return samples.cols(); }
};

/// Throws OutOfSupport naming the first offending row, ShapeMismatch on a
/// dimension mismatch, std::invalid_argument when empty.
void validate_dataset(const Dataset& data, const Support& support);

/// Inner products beyond this magnitude are rejected rather than exponentiated.
inline constexpr double kMaxExponent = 700.0;

template <typename Scalar>
struct LossEvaluation {
    Scalar value{};
    std::optional<Matrix<Scalar>> gradient;
    std::optional<Vector<Scalar>> weights;
};

/// L(Theta) = sum_t m_t exp(-<vec(Theta), z_t>) over design rows z_t = vec(phi~(x_t)).
/// With no masses the m_t are 1/n (the empirical loss); a grid measure supplies
/// cell probabilities instead (the population loss on that grid). Masses are
/// divided by their sum, so L(0) = 1 exactly in both cases.
template <typename Scalar = double>
class SurrogateLoss {
public:
    SurrogateLoss(Matrix<Scalar> design, Index k1, Index k2, Vector<Scalar> mass = {})
        : design_(std::move(design)), mass_(std::move(mass)), k1_(k1), k2_(k2) {
        if (design_.rows() == 0) throw std::invalid_argument("SurrogateLoss: empty dataset");
        if (design_.cols() != k1 * k2)
            throw ShapeMismatch("SurrogateLoss: design has " + std::to_string(design_.cols()) +
                                " columns, expected k1*k2 = " + std::to_string(k1 * k2));
        if (mass_.size() != 0 && mass_.size() != design_.rows())
            throw ShapeMismatch("SurrogateLoss: one mass per design row required");
        if (!design_.allFinite()) throw std::domain_error("SurrogateLoss: non-finite statistic");
        if (mass_.size() != 0) {
            if ((mass_.array() < Scalar(0)).any() || !mass_.allFinite())
                throw std::invalid_argument("SurrogateLoss: masses must be finite and >= 0");
            mass_total_ = tree_sum(mass_);
            if (!(mass_total_ > Scalar(0)))
                throw std::invalid_argument("SurrogateLoss: masses sum to zero");
        }
    }

    /// Empirical loss of a dataset under a centered family.
    static SurrogateLoss from_dataset(const StatisticFamily& family, const Dataset& data) {
        if (data.size() == 0) throw std::invalid_argument("SurrogateLoss: empty dataset");
        return SurrogateLoss(family.design(data.samples).template cast<Scalar>(), family.rows(),
                             family.cols());
    }

    [[nodiscard]] Index rows() const { return k1_; }
    [[nodiscard]] Index cols() const { return k2_; }
    [[nodiscard]] Index size() const { return design_.rows(); }
    [[nodiscard]] const Matrix<Scalar>& design() const { return design_; }
    [[nodiscard]] const Vector<Scalar>& mass() const { return mass_; }

    /// <<Theta, phi~(x_t)>> for every t.
    [[nodiscard]] Vector<Scalar> inner(const Matrix<Scalar>& theta) const {
        check_shape(theta);
        Vector<Scalar> a(design_.rows());
        const auto v = theta.reshaped();
        for (Index t = 0; t < design_.rows(); ++t) {
            a(t) = tree_sum(design_.row(t).transpose().cwiseProduct(v));
            using std::abs;
            if (!(abs(a(t)) <= Scalar(kMaxExponent)))
                throw ExpOverflow("|<<Theta, phi~(x)>>| = " +
                                  std::to_string(static_cast<double>(a(t))) + " at sample " +
                                  std::to_string(t) + " exceeds the exp guard");
        }
        return a;
    }

    /// w_t = exp(-<<Theta, phi~(x_t)>>).
    [[nodiscard]] Vector<Scalar> weights(const Matrix<Scalar>& theta) const {
        return (-inner(theta)).array().exp();
    }

    [[nodiscard]] Scalar value(const Matrix<Scalar>& theta) const {
        return reduce(weights(theta));
    }

    [[nodiscard]] Matrix<Scalar> gradient(const Matrix<Scalar>& theta) const {
        return gradient_from_weights(weights(theta));
    }

    [[nodiscard]] LossEvaluation<Scalar> evaluate(const Matrix<Scalar>& theta,
                                                  bool with_gradient = true,
                                                  bool keep_weights = false) const {
        LossEvaluation<Scalar> out;
        Vector<Scalar> w = weights(theta);
        out.value = reduce(w);
        if (with_gradient) out.gradient = gradient_from_weights(w);
        if (keep_weights) out.weights = std::move(w);
        return out;
    }

    /// Dense Hessian sum_t m_t w_t z_t z_t^T over vec(Theta). Guarded at k1*k2 <= 4096.
    [[nodiscard]] Matrix<Scalar> hessian(const Matrix<Scalar>& theta) const {
        const Index k = k1_ * k2_;
        if (k > kMaxDenseHessian)
            throw GuardExceeded("hessian: k1*k2 = " + std::to_string(k) +
                                " exceeds 4096; use hessian_vector");
        const Vector<Scalar> c = scaled(weights(theta));
        Matrix<Scalar> h = Matrix<Scalar>::Zero(k, k);
        h.template selfadjointView<Eigen::Lower>().rankUpdate(
            (design_.array().colwise() * c.array().sqrt()).matrix().transpose());
        h.template triangularView<Eigen::StrictlyUpper>() = h.transpose().eval();
        return h;
    }

    /// Hessian applied to V (k1 x k2), returned as a k1 x k2 matrix.
    [[nodiscard]] Matrix<Scalar> hessian_vector(const Matrix<Scalar>& theta,
                                                const Matrix<Scalar>& v) const {
        check_shape(v);
        const Vector<Scalar> c = scaled(weights(theta));
        const Vector<Scalar> dv = design_ * v.reshaped();
        return column_sums((c.array() * dv.array()).matrix()).reshaped(k1_, k2_);
    }

    static constexpr Index kMaxDenseHessian = 4096;

private:
    static constexpr Index kBlock = 256;

    void check_shape(const Matrix<Scalar>& m) const {
        if (m.rows() != k1_ || m.cols() != k2_)
            throw ShapeMismatch("parameter is " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", family is " + std::to_string(k1_) +
                                "x" + std::to_string(k2_));
    }

    /// m_t * w_t, or w_t / n without masses.
    [[nodiscard]] Vector<Scalar> scaled(const Vector<Scalar>& w) const {
        if (mass_.size() == 0) return w / static_cast<Scalar>(w.size());
        return w.cwiseProduct(mass_) / mass_total_;
    }

    [[nodiscard]] Scalar reduce(const Vector<Scalar>& w) const {
        if (mass_.size() == 0) return tree_sum(w) / static_cast<Scalar>(w.size());
        return tree_sum(w.cwiseProduct(mass_)) / mass_total_;
    }

    /// sum_t c_t z_t, blocked over rows with a tree reduction across blocks.
    [[nodiscard]] Vector<Scalar> column_sums(const Vector<Scalar>& c) const {
        const Index n = design_.rows();
        const Index blocks = (n + kBlock - 1) / kBlock;
        Matrix<Scalar> partial(blocks, design_.cols());
        for (Index b = 0; b < blocks; ++b) {
            const Index start = b * kBlock;
            const Index len = std::min(kBlock, n - start);
            partial.row(b).noalias() =
                c.segment(start, len).transpose() * design_.middleRows(start, len);
        }
        Vector<Scalar> out(design_.cols());
        for (Index j = 0; j < design_.cols(); ++j) out(j) = tree_sum(partial.col(j));
        return out;
    }

    [[nodiscard]] Matrix<Scalar> gradient_from_weights(const Vector<Scalar>& w) const {
        return (-column_sums(scaled(w))).reshaped(k1_, k2_);
    }

    Matrix<Scalar> design_;
    Vector<Scalar> mass_;
    Scalar mass_total_{1};
    Index k1_;
    Index k2_;
};

/// 4 k1 k2 phi_max^2 exp(2 rbar d).
inline double smoothness_bound(Index k1, Index k2, double phi_max, double d, double rbar) {
    return 4.0 * static_cast<double>(k1 * k2) * phi_max * phi_max * std::exp(2.0 * rbar * d);
}

double smoothness_bound(const StatisticFamily& family, const ConstraintSpec& constraint,
                        double rbar);

/// exp(-<<Theta, phi~(x)>>) - 1.
double bregman_score(const Eigen::MatrixXd& theta, const Eigen::VectorXd& x,
                     const StatisticFamily& family);

/// The baseline term <<Theta, E_U[phi~]>> that separates the surrogate
/// likelihood from the loss, with the uniform expectation taken on `grid`.
double surrogate_likelihood_correction(const Eigen::MatrixXd& theta,
                                       const StatisticFamily& family, const CellGrid& grid);

/// (1/n) sum exp(-eta(x_t)) + E_U[eta] with eta = <<Theta, phi~>>.
double surrogate_likelihood(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                            const Dataset& data, const CellGrid& grid);

}  // namespace tef
