#include "tef/sampling.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace tef {

GridMeasure build_grid(const Eigen::MatrixXd& theta, const StatisticFamily& family,
                       const CellGrid& grid) {
    if (theta.rows() != family.rows() || theta.cols() != family.cols())
        throw ShapeMismatch("build_grid: parameter shape does not match the family");
    if (!(grid.support() == family.support()))
        throw std::invalid_argument("build_grid: grid and family supports differ");
    const Index n = grid.size();
    Eigen::VectorXd logw(n);
    const auto v = theta.reshaped();
    Eigen::MatrixXd phi(family.rows(), family.cols());
    for (Index c = 0; c < n; ++c) {
        phi = family.evaluate(grid.center(c));
        logw(c) = tree_sum(phi.reshaped().cwiseProduct(v));
    }
    const double top = logw.maxCoeff();
    Eigen::VectorXd w = (logw.array() - top).exp();
    const double total = tree_sum(w);
    if (!(total > 0.0) || !std::isfinite(total))
        throw std::domain_error("build_grid: weights do not normalize");
    w /= total;
    GridMeasure out{grid, std::move(w), top + std::log(total), {}};
    out.cumulative.resize(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (Index c = 0; c < n; ++c) out.cumulative[static_cast<std::size_t>(c)] = acc += out.weights(c);
    return out;
}

GridMeasure build_grid(const Eigen::MatrixXd& theta, const StatisticFamily& family, int bins) {
    return build_grid(theta, family, CellGrid(family.support(), bins));
}

Dataset sample_grid(const GridMeasure& measure, Index n, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("sample_grid: n must be > 0");
    const Index cells = measure.weights.size();
    if (cells == 0 || (measure.weights.array() < 0.0).any() || !(measure.weights.sum() > 0.0))
        throw std::invalid_argument("sample_grid: weights must be nonnegative with positive mass");
    std::vector<double> local;
    if (measure.cumulative.size() != static_cast<std::size_t>(cells)) {
        local.resize(static_cast<std::size_t>(cells));
        double acc = 0.0;
        for (Index c = 0; c < cells; ++c) local[static_cast<std::size_t>(c)] = acc += measure.weights(c);
    }
    const std::vector<double>& cdf = local.empty() ? measure.cumulative : local;
    const double acc = cdf.back();
    const CounterRng rng(seed);
    Dataset out;
    out.samples.resize(n, measure.grid.dimension());
    for (Index t = 0; t < n; ++t) {
        const double target = rng.uniform(static_cast<std::uint64_t>(t)) * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        // Rounding can leave target at the last value; fall back to the last positive cell.
        while (it == cdf.end() || measure.weights(it - cdf.begin()) == 0.0) --it;
        out.samples.row(t) = measure.grid.center(it - cdf.begin()).transpose();
    }
    std::ostringstream prov;
    prov << "synthetic seed=" << seed << " sampler=grid bins=" << measure.grid.bins();
    out.provenance = prov.str();
    return out;
}

RejectionSample sample_truncated_gaussian(const Eigen::MatrixXd& theta, const Support& box,
                                          Index n, std::uint64_t seed) {
    if (box.kind() != SupportKind::Box)
        throw std::invalid_argument("sample_truncated_gaussian: support must be a box");
    const int p = box.dimension();
    if (theta.rows() != p || theta.cols() != p)
        throw ShapeMismatch("sample_truncated_gaussian: Theta must be p x p");
    if (n <= 0) throw std::invalid_argument("sample_truncated_gaussian: n must be > 0");
    const double b = box.bound();
    const Eigen::MatrixXd sym = 0.5 * (theta + theta.transpose());
    const Eigen::MatrixXd precision = -2.0 * sym;

    RejectionSample out;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    out.gaussian_proposal = llt.info() == Eigen::Success &&
                            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(precision,
                                                                           Eigen::EigenvaluesOnly)
                                    .eigenvalues()(0) > 0.0;
    // Uniform proposal: x^T S x <= lambda_max(S) ||x||^2 <= lambda_max(S) p b^2.
    double log_bound = 0.0;
    if (!out.gaussian_proposal) {
        const double top =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
                .eigenvalues()(p - 1);
        log_bound = std::max(0.0, top) * p * b * b;
    }
    const int normals = 2 * ((p + 1) / 2);
    const int per = out.gaussian_proposal ? normals : p + 1;

    const CounterRng rng(seed);
    out.data.samples.resize(n, p);
    Index accepted = 0;
    std::uint64_t j = 0;
    Eigen::VectorXd z(normals), x(p);
    constexpr double kMinRate = 1e-4;
    while (accepted < n) {
        const std::uint64_t base = j * static_cast<std::uint64_t>(per);
        bool keep = true;
        if (out.gaussian_proposal) {
            for (int k = 0; k < normals / 2; ++k) {
                const double r = std::sqrt(-2.0 * std::log(rng.uniform(base + 2 * k)));
                const double a = 2.0 * std::numbers::pi * rng.uniform(base + 2 * k + 1);
                z(2 * k) = r * std::cos(a);
                z(2 * k + 1) = r * std::sin(a);
            }
            // P = L L^T, so x = L^{-T} z has covariance P^{-1}.
            x = llt.matrixU().solve(z.head(p));
            keep = x.cwiseAbs().maxCoeff() <= b;
        } else {
            for (int k = 0; k < p; ++k) x(k) = b * (2.0 * rng.uniform(base + k) - 1.0);
            keep = std::log(rng.uniform(base + p)) <= x.dot(sym * x) - log_bound;
        }
        ++j;
        if (keep) out.data.samples.row(accepted++) = x.transpose();
        if (j >= 100'000 && static_cast<double>(accepted) < kMinRate * static_cast<double>(j))
            throw std::runtime_error("sample_truncated_gaussian: acceptance rate below 1e-4");
    }
    out.proposals = static_cast<std::int64_t>(j);
    out.acceptance_rate = static_cast<double>(n) / static_cast<double>(j);
    std::ostringstream prov;
    prov << "synthetic seed=" << seed << " sampler=rejection proposal="
         << (out.gaussian_proposal ? "gaussian" : "uniform");
    out.data.provenance = prov.str();
    return out;
}

Recipe parse_recipe(std::string_view name) {
    if (name == "star") return Recipe::Star;
    if (name == "banded") return Recipe::Banded;
    if (name == "nuclear_rows") return Recipe::NuclearRows;
    throw ConfigError("unknown parameter recipe '" + std::string(name) + "'");
}

std::string to_string(Recipe recipe) {
    switch (recipe) {
        case Recipe::Star: return "star";
        case Recipe::Banded: return "banded";
        case Recipe::NuclearRows: return "nuclear_rows";
    }
    return "?";
}

Eigen::MatrixXd build_true_parameter(Recipe recipe, int size) {
    if (size < 1) throw std::invalid_argument("build_true_parameter: size must be >= 1");
    switch (recipe) {
        case Recipe::Star: {
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size, size);
            const double v = 1.0 / std::sqrt(static_cast<double>(size));
            for (int i = 0; i < size; ++i) {
                m(0, i) = m(i, 0) = v;
                m(i, i) = v;
            }
            return m;
        }
        case Recipe::Banded: {
            Eigen::MatrixXd m(size, size);
            for (int i = 0; i < size; ++i) {
                for (int j = 0; j < size; ++j) {
                    const int gap = std::abs(i - j);
                    m(i, j) = -0.1 - 0.4 * (gap == 0) - 0.2 * (gap == 1) - 0.1 * (gap == 2);
                }
            }
            return m;
        }
        case Recipe::NuclearRows: {
            Eigen::MatrixXd m(size, 2);
            m.row(0) << 1.0, 0.8;
            for (int i = 1; i < size; ++i) m.row(i) = m.row(i - 1) / 2.0;
            return m;
        }
    }
    throw std::invalid_argument("build_true_parameter: unknown recipe");
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    out << "# " << (data.provenance.empty() ? "unspecified" : data.provenance) << '\n';
    for (Index j = 0; j < data.dimension(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
    out << '\n';
    out << std::setprecision(17);
    for (Index t = 0; t < data.size(); ++t) {
        for (Index j = 0; j < data.dimension(); ++j) out << (j ? "," : "") << data.samples(t, j);
        out << '\n';
    }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    write_dataset_csv(f, data);
}

Dataset read_dataset_csv(std::istream& in) {
    Dataset d;
    std::string line;
    std::vector<std::vector<double>> rows;
    Index width = -1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (d.provenance.empty()) d.provenance = line.substr(line.find_first_not_of("# "));
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (width < 0) {
            width = static_cast<Index>(cells.size());
            continue;  // header
        }
        if (static_cast<Index>(cells.size()) != width)
            throw std::runtime_error("dataset CSV: ragged row " + std::to_string(rows.size() + 1));
        std::vector<double> r;
        for (const auto& c : cells) {
            double v = 0.0;
            const char* end = c.data() + c.size();
            const auto [ptr, ec] = std::from_chars(c.data(), end, v);
            // Subnormal values report out-of-range but parse to the right double.
            if ((ec != std::errc() && ec != std::errc::result_out_of_range) || ptr != end)
                throw std::runtime_error("dataset CSV: bad number '" + c + "'");
            r.push_back(v);
        }
        rows.push_back(std::move(r));
    }
    if (width < 0) throw std::runtime_error("dataset CSV: missing header");
    d.samples.resize(static_cast<Index>(rows.size()), width);
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (Index j = 0; j < width; ++j) d.samples(static_cast<Index>(t), j) = rows[t][static_cast<std::size_t>(j)];
    return d;
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    Dataset d = read_dataset_csv(f);
    d.provenance = "external file=" + path + (d.provenance.empty() ? "" : " (" + d.provenance + ")");
    return d;
}

}  // namespace tef
