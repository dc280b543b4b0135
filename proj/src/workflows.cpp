#include "tef/workflows.hpp"

#include "tef/diagnostics.hpp"
#include "tef/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace tef {

namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Json with_model(const Json& extra) {
    return merge_config(merge_config(model_defaults(), solver_defaults(), false), extra, false);
}

/// Gaussian direction scaled to a uniform fraction of the constraint radius.
Eigen::MatrixXd random_feasible(Index rows, Index cols, const ConstraintSpec& c,
                                const CounterRng& rng, std::uint64_t& counter) {
    Eigen::MatrixXd m(rows, cols);
    for (Index e = 0; e < m.size(); ++e) {
        const double u1 = rng.uniform(counter++), u2 = rng.uniform(counter++);
        m.reshaped()(e) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    const double scale = c.radius * rng.uniform(counter++) / c.value(m);
    return m * scale;
}

Dataset load_dataset(const std::string& path, const StatisticFamily& family) {
    if (path.empty()) throw ConfigError("key 'data' (a CSV path) is required");
    Dataset d;
    try {
        d = read_dataset_csv(path);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (d.dimension() != family.support().dimension())
        throw ConfigError("dataset has " + std::to_string(d.dimension()) + " columns, the family needs " +
                          std::to_string(family.support().dimension()));
    return d;
}

}  // namespace

Json fit_defaults() { return with_model({{"data", ""}, {"output", ""}}); }

WorkflowOutcome run_fit(const Json& cfg) {
    const ModelSpec spec = model_spec_from_json(cfg);
    const StatisticFamily family = build_family(spec);
    const ConstraintSpec constraint = build_constraint(spec);
    SolverConfig solver = solver_config_from_json(cfg);
    const Dataset data = load_dataset(config_value<std::string>(cfg, "data"), family);

    Json report{{"command", "fit"}, {"provenance", data.provenance}, {"n", data.size()}};
    if (solver.mode == SolverMode::Regularized && config_value<bool>(cfg, "lambda_auto")) {
        const auto choice = choose_lambda(family, constraint, data.size(), config_value<double>(cfg, "delta"));
        solver.lambda = choice.lambda;
        report["lambda_auto"] = Json{{"lambda", choice.lambda}, {"epsilon", choice.epsilon}, {"g", choice.g}};
    }
    const FitResult r = fit(data, family, constraint, solver);
    report["theta"] = matrix_json(r.theta);
    report["iterations"] = r.iterations;
    report["initial_loss"] = r.initial_loss;
    report["final_loss"] = r.final_loss;
    report["grad_map_norm"] = r.final_grad_map_norm;
    report["converged"] = r.converged;
    if (spec.recipe) {
        const Eigen::MatrixXd truth = build_truth(spec, spec.dimension);
        report["error_fro"] = (r.theta - truth).norm();
    }
    report["pass"] = r.converged;
    return {report, r.converged ? 0 : 1};
}

Json sample_defaults() {
    return merge_config(model_defaults(),
                        Json{{"recipe", "star"},
                             {"n", 1000},
                             {"seed", 1},
                             {"sampler", "grid"},
                             {"bins", 100},
                             {"output", ""}},
                        false);
}

WorkflowOutcome run_sample(const Json& cfg) {
    const ModelSpec spec = model_spec_from_json(cfg);
    const StatisticFamily family = build_family(spec);
    const Eigen::MatrixXd truth = build_truth(spec, spec.dimension);
    require_feasible(truth, build_constraint(spec));
    const auto n = config_value<std::int64_t>(cfg, "n");
    const auto seed = config_value<std::uint64_t>(cfg, "seed");
    const auto sampler = config_value<std::string>(cfg, "sampler");
    if (n < 1) throw ConfigError("n must be >= 1");

    Json report{{"command", "sample"}, {"n", n}, {"sampler", sampler}};
    Dataset data;
    if (sampler == "grid") {
        data = sample_grid(build_grid(truth, family, config_value<int>(cfg, "bins")), n, seed);
    } else if (sampler == "rejection") {
        if (spec.statistic != StatisticKind::PairwiseQuadratic || spec.support != SupportKind::Box)
            throw ConfigError("the rejection sampler needs the pairwise_quadratic statistic on a box");
        const RejectionSample s = sample_truncated_gaussian(truth, family.support(), n, seed);
        report["acceptance_rate"] = s.acceptance_rate;
        report["proposals"] = s.proposals;
        data = s.data;
    } else {
        throw ConfigError("sampler must be 'grid' or 'rejection'");
    }
    report["provenance"] = data.provenance;
    const auto output = config_value<std::string>(cfg, "output");
    if (output.empty()) {
        std::ostringstream csv;
        write_dataset_csv(csv, data);
        report["csv"] = csv.str();
    } else {
        write_dataset_csv(output, data);
        report["output"] = output;
    }
    report["pass"] = true;
    return {report, 0};
}

Json verify_defaults() {
    return merge_config(model_defaults(),
                        Json{{"support", "l1_ball"},
                             {"norm", "frobenius"},
                             {"radius", 2.0},
                             {"recipe", "star"},
                             {"bins", 100},
                             {"mesh_step", 0.01},
                             {"mesh_half_width", 2},
                             {"smoothness_draws", 50},
                             {"seed", 1},
                             {"output", ""}},
                        false);
}

WorkflowOutcome run_verify(const Json& cfg) {
    const ModelSpec spec = model_spec_from_json(cfg);
    const ConstraintSpec constraint = build_constraint(spec);
    const Eigen::MatrixXd truth = build_truth(spec, spec.dimension);
    require_feasible(truth, constraint);
    const int bins = config_value<int>(cfg, "bins");
    const double step = config_value<double>(cfg, "mesh_step");
    const int half_width = config_value<int>(cfg, "mesh_half_width");
    const int draws = config_value<int>(cfg, "smoothness_draws");
    if (bins < 2 || !(step > 0.0) || half_width < 1 || draws < 1)
        throw ConfigError("verify settings out of range (bins >= 2, mesh_step > 0, mesh_half_width >= 1, "
                          "smoothness_draws >= 1)");
    const StatisticFamily family = build_family(spec);
    const CellGrid grid(family.support(), bins);

    Json checks = Json::object();
    bool pass = true;

    const auto kl = kl_equivalence_check(truth, family, grid, parameter_mesh(truth, family, step, half_width));
    checks["kl_equivalence"] = Json{{"mesh_size", kl.mesh_size},
                                    {"loss_argmin", kl.loss_argmin},
                                    {"kl_argmin", kl.kl_argmin},
                                    {"nearest", kl.nearest},
                                    {"argmins_coincide", kl.argmins_coincide},
                                    {"at_nearest", kl.at_nearest},
                                    {"strict", kl.strict},
                                    {"loss_margin", kl.loss_margin},
                                    {"kl_margin", kl.kl_margin},
                                    {"pass", kl.pass}};
    pass = pass && kl.pass;

    const SurrogateLoss<double> pop = population_surrogate(truth, family, grid);
    const double grad_max = pop.gradient(truth).cwiseAbs().maxCoeff();
    const double tol = family.centering().tolerance;
    const bool grad_ok = grad_max <= tol;
    checks["zero_gradient"] = Json{{"grad_max", grad_max}, {"tolerance", tol}, {"pass", grad_ok}};
    pass = pass && grad_ok;

    const double bound = smoothness_bound(family, constraint, constraint.radius);
    const CounterRng rng(config_value<std::uint64_t>(cfg, "seed"));
    std::uint64_t counter = 0;
    double worst = 0.0;
    for (int k = 0; k < draws; ++k) {
        const Eigen::MatrixXd theta = random_feasible(family.rows(), family.cols(), constraint, rng, counter);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pop.hessian(theta), Eigen::EigenvaluesOnly);
        worst = std::max(worst, es.eigenvalues().maxCoeff());
    }
    const bool smooth_ok = worst <= bound;
    checks["smoothness"] = Json{{"draws", draws}, {"max_eigenvalue", worst}, {"bound", bound}, {"pass", smooth_ok}};
    pass = pass && smooth_ok;

    const PartitionEstimate z = partition_estimate(truth, family.uncentered(), bins);
    // The budget from halving the grid must cover the change from doubling it.
    const double refined = partition_function(truth, family.uncentered(), CellGrid(family.support(), 2 * bins));
    const double change = std::abs(refined - z.value);
    const bool quad_ok = std::isfinite(z.value) && z.value > 0.0 && change <= z.account.tolerance_budget;
    checks["quadrature"] = Json{{"partition_function", z.value},
                                {"refined", refined},
                                {"change", change},
                                {"budget", z.account.tolerance_budget},
                                {"relative_budget", z.account.tolerance_budget / z.value},
                                {"pass", quad_ok}};
    pass = pass && quad_ok;

    Json report{{"command", "verify"},
                {"statistic", to_string(spec.statistic)},
                {"support", to_string(spec.support)},
                {"centering", to_string(spec.centering)},
                {"bins", bins},
                {"theta_star", matrix_json(truth)},
                {"checks", checks},
                {"pass", pass}};
    return {report, pass ? 0 : 1};
}

Json diagnose_defaults() {
    return merge_config(model_defaults(),
                        Json{{"support", "l1_ball"},
                             {"radius", 2.0},
                             {"recipe", "star"},
                             {"source", "grid"},
                             {"data", ""},
                             {"bins", 60},
                             {"alpha", 0.1},
                             {"delta", 0.05},
                             {"sparsity", 0},
                             {"seed", 7},
                             {"output", ""}},
                        false);
}

WorkflowOutcome run_diagnose(const Json& cfg) {
    const ModelSpec spec = model_spec_from_json(cfg);
    const StatisticFamily family = build_family(spec);
    const ConstraintSpec constraint = build_constraint(spec);
    const auto source_name = config_value<std::string>(cfg, "source");
    const double alpha = config_value<double>(cfg, "alpha");
    const double delta = config_value<double>(cfg, "delta");
    if (!(alpha > 0.0) || !(delta > 0.0 && delta < 1.0))
        throw ConfigError("alpha must be > 0 and delta in (0, 1)");
    ConstantsSource source;
    if (source_name == "grid") {
        const Eigen::MatrixXd truth = build_truth(spec, spec.dimension);
        require_feasible(truth, constraint);
        source.theta_star = truth;
        source.grid = CellGrid(family.support(), config_value<int>(cfg, "bins"));
    } else if (source_name == "dataset") {
        source.data = load_dataset(config_value<std::string>(cfg, "data"), family);
    } else {
        throw ConfigError("source must be 'grid' or 'dataset'");
    }
    const ComplexityReport c = compute_constants(family, constraint, source, config_value<int>(cfg, "sparsity"),
                                                 config_value<std::uint64_t>(cfg, "seed"));
    Json warnings = Json::array();
    for (const auto& w : c.warnings) warnings.push_back(w);
    Json report{{"command", "diagnose"},
                {"k1", c.k1},
                {"k2", c.k2},
                {"norm", to_string(c.norm)},
                {"radius", c.radius},
                {"phi_max", c.phi_max},
                {"d", c.d},
                {"gamma", c.gamma},
                {"g", c.g},
                {"g_tabulated", c.g_tabulated},
                {"psi", c.psi},
                {"psi_lower_bound", c.psi_lower_bound},
                {"lambda_min", c.lambda_min},
                {"lambda_source", c.lambda_source},
                {"smoothness", c.smoothness},
                {"alpha", alpha},
                {"delta", delta},
                {"implied_n", c.implied_n(alpha, delta)},
                {"warnings", warnings},
                {"pass", true}};
    return {report, 0};
}

std::string format_diagnose_table(const Json& r) {
    std::ostringstream out;
    char line[160];
    auto row = [&](const char* name, double v) {
        std::snprintf(line, sizeof line, "%-14s %.6g\n", name, v);
        out << line;
    };
    out << "norm           " << r.at("norm").get<std::string>() << " (r = " << r.at("radius").get<double>()
        << ")\n";
    out << "k1 x k2        " << r.at("k1").get<Index>() << " x " << r.at("k2").get<Index>() << "\n";
    row("phi_max", r.at("phi_max").get<double>());
    row("d", r.at("d").get<double>());
    row("gamma", r.at("gamma").get<double>());
    row("g", r.at("g").get<double>());
    row("g_tabulated", r.at("g_tabulated").get<double>());
    row("psi", r.at("psi").get<double>());
    out << "lambda_min     " << r.at("lambda_min").get<double>() << " from "
        << r.at("lambda_source").get<std::string>() << "\n";
    row("smoothness", r.at("smoothness").get<double>());
    std::snprintf(line, sizeof line, "implied n(alpha=%g, delta=%g) = %.6g\n", r.at("alpha").get<double>(),
                  r.at("delta").get<double>(), r.at("implied_n").get<double>());
    out << line;
    for (const auto& w : r.at("warnings")) out << "warning: " << w.get<std::string>() << "\n";
    return out.str();
}

}  // namespace tef
