#pragma once

#include "tef/support.hpp"
#include "tef/types.hpp"

#include <cstdint>
#include <vector>

namespace tef {

/// Uniform cell partition of the bounding box [-b, b]^p restricted to the cells
/// whose centers lie in the support. Cell i is represented by its center.
class CellGrid {
public:
    /// Largest bins^p we are willing to enumerate.
    static constexpr double kMaxCells = 1e8;

    CellGrid(Support support, int bins_per_dim);

    [[nodiscard]] const Support& support() const { return support_; }
    [[nodiscard]] int bins() const { return bins_; }
    [[nodiscard]] int dimension() const { return support_.dimension(); }
    [[nodiscard]] double cell_width() const { return width_; }
    [[nodiscard]] double cell_volume() const;

    /// Number of in-support cells.
    [[nodiscard]] Index size() const;

    [[nodiscard]] Eigen::VectorXd center(Index cell) const;
    /// All centers, one per row. Guarded against very large grids.
    [[nodiscard]] Eigen::MatrixXd centers() const;

    /// Same support and resolution; oracle quantities are only comparable then.
    [[nodiscard]] bool same_as(const CellGrid& other) const;

private:
    [[nodiscard]] std::uint64_t linear_index(Index cell) const;

    Support support_;
    int bins_;
    double width_;
    std::uint64_t total_cells_;
    // Linear indices of in-support cells; empty for boxes where every cell is in.
    std::vector<std::uint64_t> cells_;
};

}  // namespace tef
