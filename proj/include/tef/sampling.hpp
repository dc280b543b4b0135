#pragma once

#include "tef/grid.hpp"
#include "tef/loss.hpp"
#include "tef/model.hpp"
#include "tef/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tef {

/// Probability of each in-support grid cell under the density proportional
/// to exp(<<Theta, Phi(x)>>), with Phi evaluated at cell centers.
struct GridMeasure {
    CellGrid grid;
    Eigen::VectorXd weights;
    /// log of sum_c exp(<<Theta, Phi(c)>>); with the cell volume this gives log Z.
    double log_normalizer = 0.0;
    /// Running sums of weights for inverse-CDF sampling; rebuilt on demand when empty.
    std::vector<double> cumulative;
};

GridMeasure build_grid(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                       const CellGrid& grid);
GridMeasure build_grid(const Eigen::MatrixXd& theta, const StatisticFamily& family, int bins);

/// n i.i.d. cell centers by inverse CDF; draw t uses counter t of the seeded stream.
Dataset sample_grid(const GridMeasure& measure, Index n, std::uint64_t seed);

struct RejectionSample {
    Dataset data;
    double acceptance_rate = 0.0;
    std::int64_t proposals = 0;
    /// Gaussian proposal N(0, P^{-1}) with P = -2 sym(Theta); otherwise uniform on the box.
    bool gaussian_proposal = false;
};

/// Exact draws from the density proportional to exp(x^T Theta x) on the box
/// [-b, b]^p. Throws std::runtime_error when the acceptance rate drops below 1e-4.
RejectionSample sample_truncated_gaussian(const Eigen::MatrixXd& theta, const Support& box,
                                          Index n, std::uint64_t seed);

enum class Recipe { Star, Banded, NuclearRows };

Recipe parse_recipe(std::string_view name);
std::string to_string(Recipe recipe);

/// star(p): 1/sqrt(p) on the first row, first column and diagonal.
/// banded(p): -0.1 - 0.4 [i=j] - 0.2 [|i-j|=1] - 0.1 [|i-j|=2].
/// nuclear_rows(k1): first row (1, 0.8), each further row half the previous.
Eigen::MatrixXd build_true_parameter(Recipe recipe, int size);

/// CSV with a "# <provenance>" comment line, a header x1..xp, 17 significant digits.
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);

}  // namespace tef
