#include "helpers.hpp"
#include "tef/diagnostics.hpp"
#include "tef/experiment.hpp"
#include "tef/oracle.hpp"
#include "tef/workflows.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace tef;
using namespace testutil;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

int hardware_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Experiment preset restricted to one dimension with grid-exact centering on `bins`.
ModelSpec preset_spec(const std::string& preset, int bins) {
    Json cfg = experiment_defaults(preset);
    cfg["centering"] = "grid_quadrature";
    cfg["centering_bins"] = bins;
    return model_spec_from_json(cfg);
}

Outcome gradient_correctness() {
    std::mt19937_64 gen(101);
    double worst = 0.0;
    int draws = 0;
    for (const auto& s : constraint_settings()) {
        for (int k = 0; k < 5; ++k, ++draws) {
            const Dataset d = uniform_dataset(s.family.support(), 200, gen);
            const auto loss = SurrogateLoss<double>::from_dataset(s.family, d);
            const Eigen::MatrixXd theta = random_feasible(s.family.rows(), s.family.cols(), s.constraint, gen);
            worst = std::max(worst, fd_gradient_error(loss, theta));
        }
    }
    return {worst <= 1e-6, fmt("%g draws, worst relative error %.3g (limit 1e-6)", draws, worst)};
}

Outcome smoothness_bound_check() {
    std::mt19937_64 gen(102);
    const auto settings = constraint_settings();
    bool pass = true;
    std::ostringstream detail;
    // Pairwise (Frobenius, L1 ball) and trigonometric (entrywise L1, box).
    for (const auto& s : {settings[0], settings[3]}) {
        const double bound = smoothness_bound(s.family, s.constraint, s.constraint.radius);
        double worst = 0.0;
        for (int k = 0; k < 50; ++k) {
            const Dataset d = uniform_dataset(s.family.support(), 200, gen);
            const auto loss = SurrogateLoss<double>::from_dataset(s.family, d);
            const Eigen::MatrixXd theta = random_feasible(s.family.rows(), s.family.cols(), s.constraint, gen);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(loss.hessian(theta), Eigen::EigenvaluesOnly);
            worst = std::max(worst, es.eigenvalues().maxCoeff());
        }
        pass = pass && worst <= bound;
        detail << to_string(s.family.kind()) << " max eigenvalue " << worst << " <= " << bound << "; ";
    }
    return {pass, detail.str()};
}

Outcome kl_equivalence() {
    const ModelSpec spec = preset_spec("frobenius_star", 100);
    const StatisticFamily f = build_family(spec, 2);
    const Eigen::MatrixXd truth = build_truth(spec, 2);
    const CellGrid grid(f.support(), 100);
    const auto r = kl_equivalence_check(truth, f, grid, parameter_mesh(truth, f, 0.01, 2));
    return {r.pass, fmt("mesh %g points, loss argmin %g, kl argmin %g", static_cast<double>(r.mesh_size),
                        static_cast<double>(r.loss_argmin), static_cast<double>(r.kl_argmin)) +
                        fmt(", nearest %g, loss margin %.3g", static_cast<double>(r.nearest), r.loss_margin)};
}

Outcome population_recovery() {
    bool pass = true;
    std::ostringstream detail;
    for (const std::string preset : {"frobenius_star", "maxnorm_banded", "nuclear_poly"}) {
        const ModelSpec spec = preset_spec(preset, 100);
        const StatisticFamily f = build_family(spec, 2);
        const Eigen::MatrixXd truth = build_truth(spec, 2);
        const CellGrid grid(f.support(), 100);
        SolverConfig cfg;
        cfg.step_rule = StepRule::Backtracking;
        cfg.tol = 1e-10;
        cfg.max_iters = 200'000;
        const FitResult r = fit(population_surrogate(truth, f, grid), f, build_constraint(spec), cfg);
        const double err = (r.theta - truth).norm();
        pass = pass && err <= 1e-3;
        detail << preset << " error " << err << (r.converged ? "" : " (not converged)") << "; ";
    }
    return {pass, detail.str()};
}

Outcome zero_gradient() {
    bool pass = true;
    std::ostringstream detail;
    for (const std::string preset : {"frobenius_star", "maxnorm_banded", "nuclear_poly"}) {
        const ModelSpec spec = preset_spec(preset, 100);
        const StatisticFamily f = build_family(spec, 2);
        const Eigen::MatrixXd truth = build_truth(spec, 2);
        const double g = population_surrogate(truth, f, CellGrid(f.support(), 100))
                             .gradient(truth)
                             .cwiseAbs()
                             .maxCoeff();
        const double tol = f.centering().tolerance;
        pass = pass && g <= tol;
        detail << preset << " " << g << " <= " << tol << "; ";
    }
    return {pass, detail.str()};
}

Outcome bregman_identity() {
    std::mt19937_64 gen(106);
    double worst = 0.0;
    double worst_zero = 0.0;
    for (const auto& s : constraint_settings()) {
        for (int k = 0; k < 5; ++k) {
            const Dataset d = uniform_dataset(s.family.support(), 100, gen);
            const auto loss = SurrogateLoss<double>::from_dataset(s.family, d);
            const Eigen::MatrixXd theta = random_feasible(s.family.rows(), s.family.cols(), s.constraint, gen);
            const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(s.family.rows(), s.family.cols());
            Eigen::VectorXd scores(d.size());
            for (Index t = 0; t < d.size(); ++t) {
                const Eigen::VectorXd x = d.samples.row(t).transpose();
                scores(t) = bregman_score(theta, x, s.family);
                worst_zero = std::max(worst_zero, std::abs(bregman_score(zero, x, s.family)));
            }
            worst = std::max(worst, std::abs(tree_sum(scores) / d.size() + 1.0 - loss.value(theta)));
        }
    }
    return {worst <= 1e-12 && worst_zero == 0.0,
            fmt("max |mean score + 1 - loss| %.3g (limit 1e-12), max |score(0)| %g", worst, worst_zero)};
}

Outcome experiment_check(const std::string& preset) {
    Json user{{"experiment", preset}, {"workers", hardware_workers()}};
    const ExperimentResult r = run_experiment(experiment_from_json(resolve_experiment_json(user)));
    std::ostringstream detail;
    for (const auto& s : r.summary.at("n_slopes"))
        detail << "dim " << s.at("dimension").get<int>() << " n-slope " << s.value("slope", 0.0) << " r2 "
               << s.value("r2", 0.0) << (s.at("pass").get<bool>() ? "" : " OUT") << "; ";
    if (r.summary.contains("error_increases_in_dimension"))
        detail << "error increasing in p at every n: "
               << (r.summary["error_increases_in_dimension"]["pass"].get<bool>() ? "yes" : "no") << "; ";
    if (r.summary.contains("dimension_slope")) {
        const auto& last = r.summary["dimension_slope"]["per_n"].back();
        detail << "k1-slope at n=" << last.at("n").get<Index>() << " " << last.value("slope", 0.0)
               << (last.at("pass").get<bool>() ? "" : " OUT") << "; ";
    }
    return {r.pass, detail.str()};
}

Outcome projection_suite() {
    std::mt19937_64 gen(110);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    bool pass = true;
    double idem = 0.0, expand = 0.0, infeas = 0.0, moreau = 0.0;
    int fixed_failures = 0;
    for (auto k : {NormKind::Max, NormKind::Frobenius, NormKind::Nuclear, NormKind::EntrywiseL1}) {
        for (int t = 0; t < 1000; ++t) {
            const double r = u(gen);
            const Eigen::MatrixXd a = gaussian(3, 4, gen) * u(gen);
            const Eigen::MatrixXd b = gaussian(3, 4, gen) * u(gen);
            const Eigen::MatrixXd pa = project<double>(a, k, r);
            const Eigen::MatrixXd pb = project<double>(b, k, r);
            infeas = std::max(infeas, norm(pa, k) / r - 1.0);
            idem = std::max(idem, (project<double>(pa, k, r) - pa).norm());
            expand = std::max(expand, (pa - pb).norm() - (a - b).norm());
            const Eigen::MatrixXd inside = a * (0.999 * r / norm(a, k));
            if (project<double>(inside, k, r) != inside) ++fixed_failures;
            const double s = u(gen);
            const Eigen::MatrixXd sum =
                prox<double>(a, k, s) + s * project_dual_ball<double>(Eigen::MatrixXd(a / s), k, 1.0);
            moreau = std::max(moreau, (sum - a).cwiseAbs().maxCoeff());
        }
    }
    pass = idem <= 1e-12 && expand <= 1e-12 && infeas <= 1e-12 && fixed_failures == 0 && moreau <= 1e-10;
    return {pass, fmt("idempotence %.2g, expansion %.2g, ", idem, expand) +
                      fmt("feasibility excess %.2g, Moreau %.2g, interior moved %g", infeas, moreau,
                          fixed_failures)};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Outcome concentration_scaling() {
    const ModelSpec spec = preset_spec("frobenius_star", 100);
    const StatisticFamily f = build_family(spec, 2);
    const Eigen::MatrixXd truth = build_truth(spec, 2);
    const CellGrid grid(f.support(), 100);
    const GridMeasure measure = build_grid(truth, f, grid);
    const Eigen::MatrixXd h = grid_correlation(truth, f, grid);
    std::vector<double> medians;
    for (Index n : {100, 1000, 10000}) {
        std::vector<double> dev;
        for (std::uint64_t seed = 1; seed <= 50; ++seed)
            dev.push_back((empirical_correlation(sample_grid(measure, n, 1000 * n + seed), f) - h)
                              .cwiseAbs()
                              .maxCoeff());
        medians.push_back(median(dev));
    }
    const double r1 = medians[0] / medians[1], r2 = medians[1] / medians[2];
    return {r1 >= 2.0 && r2 >= 2.0,
            fmt("medians %.3g, %.3g, %.3g", medians[0], medians[1], medians[2]) +
                fmt("; shrink factors %.3g, %.3g (limit 2)", r1, r2)};
}

Outcome normality_coverage() {
    const ModelSpec spec = preset_spec("frobenius_star", 100);
    const StatisticFamily f = build_family(spec, 2);
    const Eigen::MatrixXd truth = build_truth(spec, 2);
    const ConstraintSpec constraint = build_constraint(spec);
    const CellGrid grid(f.support(), 100);
    const GridMeasure measure = build_grid(truth, f, grid);
    const SandwichCovariance sc = grid_sandwich_covariance(truth, f, grid);
    const Index n = 5000;
    const int trials = 200;
    const double se = std::sqrt(sc.sigma(0, 0) / static_cast<double>(n));
    SolverConfig cfg;
    cfg.step_rule = StepRule::Backtracking;
    cfg.tol = 1e-9;
    int covered = 0, unconverged = 0;
    for (int t = 0; t < trials; ++t) {
        const Dataset d = sample_grid(measure, n, job_seed(12, 2, n, t));
        const FitResult r = fit(d, f, constraint, cfg);
        if (!r.converged) ++unconverged;
        const double z = (r.theta(0, 0) - truth(0, 0)) / se;
        if (std::abs(z) <= 1.96) ++covered;
    }
    const double coverage = static_cast<double>(covered) / trials;
    return {coverage >= 0.90 && coverage <= 0.99,
            fmt("coverage %.3f over %g trials (band [0.90, 0.99]), sigma_11 %.4g", coverage, trials,
                sc.sigma(0, 0)) +
                fmt(", unconverged %g", unconverged)};
}

Outcome reproducibility() {
    bool pass = true;
    std::ostringstream detail;
    const std::vector<Json> configs{
        {{"experiment", "frobenius_star"}, {"trials", 3}, {"n", {100, 316, 1000}}},
        {{"experiment", "maxnorm_banded"}, {"trials", 3}, {"n", {100, 316, 1000}}},
        {{"experiment", "nuclear_poly"}, {"trials", 3}, {"n", {100, 316, 1000}}, {"dimensions", {1, 2, 3}}},
    };
    for (const Json& base : configs) {
        std::vector<std::string> csvs;
        for (int workers : {1, 4, 1, 3}) {
            Json user = base;
            user["workers"] = workers;
            std::ostringstream out;
            write_scaling_csv(out, run_experiment(experiment_from_json(resolve_experiment_json(user))).records);
            csvs.push_back(out.str());
        }
        const bool same = std::all_of(csvs.begin(), csvs.end(), [&](const auto& c) { return c == csvs[0]; });
        pass = pass && same;
        detail << base["experiment"].get<std::string>() << (same ? " identical" : " DIFFERS") << " ("
               << csvs[0].size() << " bytes, workers 1/4/1/3); ";
    }
    return {pass, detail.str()};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "gradient matches central differences", gradient_correctness},
        {2, "hessian eigenvalues below the smoothness bound", smoothness_bound_check},
        {3, "population-loss and KL argmins coincide on the mesh", kl_equivalence},
        {4, "population fit recovers the truth on p=2 presets", population_recovery},
        {5, "zero population gradient at the truth", zero_gradient},
        {6, "bregman score identity", bregman_identity},
        {7, "frobenius_star error scaling", [] { return experiment_check("frobenius_star"); }},
        {8, "maxnorm_banded error scaling", [] { return experiment_check("maxnorm_banded"); }},
        {9, "nuclear_poly error scaling", [] { return experiment_check("nuclear_poly"); }},
        {10, "projection and prox properties", projection_suite},
        {11, "correlation tensor concentration", concentration_scaling},
        {12, "sandwich normality coverage", normality_coverage},
        {13, "byte-identical CSV across reruns and worker counts", reproducibility},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("%s %2d %s [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
