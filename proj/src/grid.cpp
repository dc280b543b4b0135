#include "tef/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace tef {

CellGrid::CellGrid(Support support, int bins_per_dim)
    : support_(support), bins_(bins_per_dim), width_(2.0 * support.bound() / bins_per_dim) {
    if (bins_per_dim < 2) throw std::invalid_argument("CellGrid: bins_per_dim must be >= 2");
    const int p = support_.dimension();
    const double total = std::pow(static_cast<double>(bins_), p);
    if (total > kMaxCells)
        throw GuardExceeded("CellGrid: " + std::to_string(bins_) + "^" + std::to_string(p) +
                            " cells exceeds the 1e8 guard");
    total_cells_ = static_cast<std::uint64_t>(std::llround(total));
    if (support_.kind() == SupportKind::Box) return;

    // Odd integer coordinates m_j = 2 d_j + 1 - bins give center_j = m_j * width / 2,
    // so ball membership of a center is decided exactly in integers.
    std::vector<long long> m(p, 1 - bins_);
    long long l1 = static_cast<long long>(p) * (bins_ - 1);
    long long l2 = static_cast<long long>(p) * (bins_ - 1) * (bins_ - 1);
    const long long b = bins_;
    const bool l1_ball = support_.kind() == SupportKind::L1Ball;
    for (std::uint64_t idx = 0; idx < total_cells_; ++idx) {
        if (l1_ball ? l1 <= b : l2 <= b * b) cells_.push_back(idx);
        for (int j = 0; j < p; ++j) {
            l1 -= std::llabs(m[j]);
            l2 -= m[j] * m[j];
            if (m[j] + 2 < b) {
                m[j] += 2;
                l1 += std::llabs(m[j]);
                l2 += m[j] * m[j];
                break;
            }
            m[j] = 1 - b;
            l1 += std::llabs(m[j]);
            l2 += m[j] * m[j];
        }
    }
    if (cells_.empty()) throw std::invalid_argument("CellGrid: no cell center lies in the support");
}

double CellGrid::cell_volume() const { return std::pow(width_, support_.dimension()); }

Index CellGrid::size() const {
    return support_.kind() == SupportKind::Box ? static_cast<Index>(total_cells_)
                                                : static_cast<Index>(cells_.size());
}

std::uint64_t CellGrid::linear_index(Index cell) const {
    return support_.kind() == SupportKind::Box ? static_cast<std::uint64_t>(cell)
                                                : cells_[static_cast<std::size_t>(cell)];
}

Eigen::VectorXd CellGrid::center(Index cell) const {
    std::uint64_t idx = linear_index(cell);
    const int p = support_.dimension();
    Eigen::VectorXd c(p);
    for (int j = 0; j < p; ++j) {
        const auto digit = static_cast<long long>(idx % static_cast<std::uint64_t>(bins_));
        idx /= static_cast<std::uint64_t>(bins_);
        c(j) = static_cast<double>(2 * digit + 1 - bins_) * support_.bound() / bins_;
    }
    return c;
}

Eigen::MatrixXd CellGrid::centers() const {
    const Index n = size();
    if (static_cast<double>(n) * support_.dimension() > 5e7)
        throw GuardExceeded("CellGrid::centers: grid too large to materialize");
    Eigen::MatrixXd out(n, support_.dimension());
    for (Index i = 0; i < n; ++i) out.row(i) = center(i).transpose();
    return out;
}

bool CellGrid::same_as(const CellGrid& other) const {
    return support_ == other.support_ && bins_ == other.bins_;
}

}  // namespace tef
