#include "tef/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace tef {

namespace {

/// Per-dimension state shared read-only by all jobs.
struct DimensionSetup {
    int dimension = 0;
    StatisticFamily family;
    ConstraintSpec constraint;
    Eigen::MatrixXd truth;
    std::optional<GridMeasure> measure;
};

Json with(Json base, const Json& top) { return merge_config(std::move(base), top); }

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

Json slope_json(const SlopeFit& f, double lo, double hi, double r2_min, bool use_r2) {
    const bool pass = f.slope >= lo && f.slope <= hi && (!use_r2 || f.r2 >= r2_min);
    Json j{{"slope", f.slope},      {"intercept", f.intercept}, {"r2", f.r2},
           {"points", f.points},    {"band", {lo, hi}},         {"pass", pass}};
    if (use_r2) j["r2_min"] = r2_min;
    if (!f.note.empty()) j["note"] = f.note;
    return j;
}

}  // namespace

Json experiment_defaults(const std::string& experiment) {
    Json base = model_defaults();
    base = merge_config(std::move(base), solver_defaults(), false);
    base = merge_config(std::move(base),
                        Json{{"experiment", experiment},
                             {"dimensions", {2}},
                             {"n", {100, 316, 1000, 3162, 10000}},
                             {"trials", 20},
                             {"seed", 1},
                             {"sampler", "grid"},
                             {"bins", 100},
                             {"workers", 1},
                             {"timing", false},
                             {"full_scale", false},
                             {"output", ""},
                             {"summary", ""},
                             {"slope_min", -0.60},
                             {"slope_max", -0.35},
                             {"r2_min", 0.9},
                             {"check_dimension_slope", false},
                             {"dimension_slope_min", 0.8},
                             {"dimension_slope_max", 1.5},
                             {"check_monotone_dimension", false}},
                        false);
    if (experiment == "frobenius_star") {
        return with(base, {{"dimensions", {3, 4}},
                           {"statistic", "pairwise_quadratic"},
                           {"support", "l1_ball"},
                           {"bound", 1.0},
                           {"norm", "frobenius"},
                           {"radius", 2.0},
                           {"recipe", "star"},
                           {"sampler", "grid"},
                           {"centering", "grid_quadrature"},
                           {"centering_bins", 100},
                           {"check_monotone_dimension", true}});
    }
    if (experiment == "maxnorm_banded") {
        return with(base, {{"dimensions", {3, 4}},
                           {"statistic", "pairwise_quadratic"},
                           {"support", "box"},
                           {"bound", 1.0},
                           {"norm", "max"},
                           {"radius", 0.5},
                           {"recipe", "banded"},
                           {"sampler", "rejection"},
                           {"centering", "closed_form"}});
    }
    if (experiment == "nuclear_poly") {
        return with(base, {{"dimensions", {1, 2, 3, 4}},
                           {"statistic", "monomial_grid"},
                           {"k2", 2},
                           {"support", "l2_ball"},
                           {"bound", 1.0},
                           {"norm", "nuclear"},
                           {"radius", 1.5},
                           {"recipe", "nuclear_rows"},
                           {"sampler", "grid"},
                           {"centering", "grid_quadrature"},
                           {"centering_bins", 100},
                           {"check_dimension_slope", true}});
    }
    if (experiment == "custom") return base;
    throw ConfigError("unknown experiment '" + experiment +
                      "' (frobenius_star, maxnorm_banded, nuclear_poly, custom)");
}

Json resolve_experiment_json(const Json& user) {
    if (!user.is_object()) throw ConfigError("config must be a JSON object");
    const std::string name =
        user.contains("experiment") ? config_value<std::string>(user, "experiment") : "frobenius_star";
    Json out = merge_config(experiment_defaults(name), user);
    if (config_value<bool>(out, "full_scale")) {
        if (!user.contains("trials")) out["trials"] = 100;
        if (name == "nuclear_poly" && !user.contains("dimensions"))
            out["dimensions"] = Json{1, 2, 3, 4, 5};
    }
    return out;
}

ExperimentConfig experiment_from_json(const Json& cfg) {
    ExperimentConfig c;
    c.experiment = config_value<std::string>(cfg, "experiment");
    c.model = model_spec_from_json(cfg);
    c.dimensions = config_value<std::vector<int>>(cfg, "dimensions");
    for (auto v : config_value<std::vector<std::int64_t>>(cfg, "n")) c.n.push_back(static_cast<Index>(v));
    c.trials = config_value<int>(cfg, "trials");
    c.seed = config_value<std::uint64_t>(cfg, "seed");
    c.sampler = config_value<std::string>(cfg, "sampler");
    c.bins = config_value<int>(cfg, "bins");
    c.workers = config_value<int>(cfg, "workers");
    c.timing = config_value<bool>(cfg, "timing");
    c.solver = solver_config_from_json(cfg);
    c.lambda_auto = config_value<bool>(cfg, "lambda_auto");
    c.delta = config_value<double>(cfg, "delta");
    c.slope_min = config_value<double>(cfg, "slope_min");
    c.slope_max = config_value<double>(cfg, "slope_max");
    c.r2_min = config_value<double>(cfg, "r2_min");
    c.check_dimension_slope = config_value<bool>(cfg, "check_dimension_slope");
    c.dimension_slope_min = config_value<double>(cfg, "dimension_slope_min");
    c.dimension_slope_max = config_value<double>(cfg, "dimension_slope_max");
    c.check_monotone_dimension = config_value<bool>(cfg, "check_monotone_dimension");

    if (c.dimensions.empty() || c.n.empty()) throw ConfigError("dimensions and n must be non-empty");
    for (int d : c.dimensions)
        if (d < 1) throw ConfigError("dimensions must be >= 1");
    for (Index n : c.n)
        if (n < 1) throw ConfigError("n values must be >= 1");
    if (c.trials < 1) throw ConfigError("trials must be >= 1");
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    if (c.sampler != "grid" && c.sampler != "rejection")
        throw ConfigError("sampler must be 'grid' or 'rejection'");
    if (c.bins < 2) throw ConfigError("bins must be >= 2");
    if (c.sampler == "rejection" &&
        (c.model.statistic != StatisticKind::PairwiseQuadratic || c.model.support != SupportKind::Box))
        throw ConfigError("the rejection sampler needs the pairwise_quadratic statistic on a box");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    return c;
}

std::uint64_t job_seed(std::uint64_t base, int dimension, Index n, int trial) {
    std::uint64_t h = CounterRng::mix(base + 0x243f6a8885a308d3ULL);
    h = CounterRng::mix(h ^ static_cast<std::uint64_t>(dimension));
    h = CounterRng::mix(h ^ static_cast<std::uint64_t>(n));
    return CounterRng::mix(h ^ static_cast<std::uint64_t>(trial));
}

SlopeFit fit_loglog_slope(const std::vector<double>& axis, const std::vector<double>& values) {
    if (axis.size() != values.size())
        throw std::invalid_argument("fit_loglog_slope: axis and values differ in length");
    SlopeFit f;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!(axis[i] > 0.0)) throw std::invalid_argument("fit_loglog_slope: axis values must be > 0");
        if (values[i] < 0.0 || !std::isfinite(values[i]))
            throw std::invalid_argument("fit_loglog_slope: values must be finite and >= 0");
        if (values[i] == 0.0) {
            ++f.excluded;
            continue;
        }
        x.push_back(std::log(axis[i]));
        y.push_back(std::log(values[i]));
    }
    if (f.excluded > 0)
        f.note = std::to_string(f.excluded) + " zero value(s) excluded (perfect recovery)";
    std::vector<double> distinct = x;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3)
        throw std::invalid_argument("fit_loglog_slope: need at least 3 distinct axis values");
    f.points = static_cast<int>(x.size());
    const double mx = mean_of(x), my = mean_of(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        sse += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return f;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    std::vector<DimensionSetup> setups;
    for (int dim : config.dimensions) {
        DimensionSetup s{dim, build_family(config.model, dim), build_constraint(config.model),
                         build_truth(config.model, dim), std::nullopt};
        require_feasible(s.truth, s.constraint);
        if (config.sampler == "grid") s.measure = build_grid(s.truth, s.family, config.bins);
        setups.push_back(std::move(s));
    }

    struct Job {
        std::size_t setup;
        Index n;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t d = 0; d < setups.size(); ++d)
        for (Index n : config.n)
            for (int t = 0; t < config.trials; ++t) jobs.push_back({d, n, t});

    std::vector<ScalingRecord> records(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;

    auto work = [&] {
        while (true) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            const Job& job = jobs[j];
            const DimensionSetup& s = setups[job.setup];
            try {
                const auto start = std::chrono::steady_clock::now();
                const std::uint64_t seed = job_seed(config.seed, s.dimension, job.n, job.trial);
                const Dataset data =
                    s.measure ? sample_grid(*s.measure, job.n, seed)
                              : sample_truncated_gaussian(s.truth, s.family.support(), job.n, seed).data;
                SolverConfig sc = config.solver;
                if (sc.mode == SolverMode::Regularized && config.lambda_auto)
                    sc.lambda = choose_lambda(s.family, s.constraint, job.n, config.delta).lambda;
                const FitResult r = fit(data, s.family, s.constraint, sc);
                ScalingRecord& rec = records[j];
                rec.dimension = s.dimension;
                rec.n = job.n;
                rec.trial = job.trial;
                rec.error_fro = (r.theta - s.truth).norm();
                rec.converged = r.converged;
                rec.iterations = r.iterations;
                if (config.timing)
                    rec.wall_ms = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - start)
                                      .count();
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_lock);
                if (!failure) failure = std::current_exception();
                next.store(jobs.size());
                return;
            }
        }
    };
    const int threads = std::max(1, std::min<int>(config.workers, static_cast<int>(jobs.size())));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    // Deterministic fold in (dimension, n, trial) order.
    ExperimentResult out;
    out.records = std::move(records);
    Json cells = Json::array();
    std::map<std::pair<int, Index>, std::vector<double>> errors;
    std::map<std::pair<int, Index>, int> converged;
    for (const auto& r : out.records) {
        errors[{r.dimension, r.n}].push_back(r.error_fro);
        converged[{r.dimension, r.n}] += r.converged ? 1 : 0;
    }
    std::map<int, std::vector<double>> mean_by_dim;
    for (int dim : config.dimensions) {
        for (Index n : config.n) {
            const auto& e = errors[{dim, n}];
            const double m = mean_of(e);
            mean_by_dim[dim].push_back(m);
            cells.push_back(Json{{"dimension", dim},
                                 {"n", n},
                                 {"trials", e.size()},
                                 {"mean_error", m},
                                 {"se_error", standard_error(e)},
                                 {"converged", converged[{dim, n}]}});
        }
    }

    bool pass = true;
    Json n_slopes = Json::array();
    Json monotone_n = Json::object();
    std::vector<double> axis_n;
    for (Index n : config.n) axis_n.push_back(static_cast<double>(n));
    for (int dim : config.dimensions) {
        const auto& means = mean_by_dim[dim];
        Json entry{{"dimension", dim}};
        try {
            const SlopeFit f = fit_loglog_slope(axis_n, means);
            entry.update(slope_json(f, config.slope_min, config.slope_max, config.r2_min, true));
            pass = pass && entry["pass"].get<bool>();
        } catch (const std::invalid_argument& e) {
            entry["error"] = e.what();
            entry["pass"] = false;
            pass = false;
        }
        n_slopes.push_back(entry);
        bool decreasing = true;
        for (std::size_t i = 1; i < means.size(); ++i)
            decreasing = decreasing && axis_n[i] > axis_n[i - 1] && means[i] < means[i - 1];
        monotone_n[std::to_string(dim)] = decreasing;
    }

    Json summary{{"experiment", config.experiment},
                 {"records", out.records.size()},
                 {"cells", cells},
                 {"n_slopes", n_slopes},
                 {"mean_error_decreases_in_n", monotone_n}};

    if (config.check_monotone_dimension && config.dimensions.size() >= 2) {
        Json per_n = Json::array();
        bool all = true;
        for (std::size_t k = 0; k < config.n.size(); ++k) {
            bool up = true;
            for (std::size_t d = 1; d < config.dimensions.size(); ++d)
                up = up && config.dimensions[d] > config.dimensions[d - 1] &&
                     mean_by_dim[config.dimensions[d]][k] > mean_by_dim[config.dimensions[d - 1]][k];
            per_n.push_back(Json{{"n", config.n[k]}, {"increasing", up}});
            all = all && up;
        }
        summary["error_increases_in_dimension"] = Json{{"per_n", per_n}, {"pass", all}};
        pass = pass && all;
    }

    if (config.check_dimension_slope) {
        Json per_n = Json::array();
        std::vector<double> axis_d;
        for (int d : config.dimensions) axis_d.push_back(static_cast<double>(d));
        bool decided = false;
        for (std::size_t k = 0; k < config.n.size(); ++k) {
            std::vector<double> v;
            for (int d : config.dimensions) v.push_back(mean_by_dim[d][k]);
            Json entry{{"n", config.n[k]}};
            try {
                const SlopeFit f = fit_loglog_slope(axis_d, v);
                entry.update(slope_json(f, config.dimension_slope_min, config.dimension_slope_max,
                                        config.r2_min, false));
            } catch (const std::invalid_argument& e) {
                entry["error"] = e.what();
                entry["pass"] = false;
            }
            per_n.push_back(entry);
            if (k + 1 == config.n.size()) decided = entry["pass"].get<bool>();
        }
        summary["dimension_slope"] =
            Json{{"decided_at_n", config.n.back()}, {"per_n", per_n}, {"pass", decided}};
        pass = pass && decided;
    }
    summary["pass"] = pass;
    out.summary = std::move(summary);
    out.pass = pass;
    return out;
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingRecord>& records) {
    out << "dimension,n,trial,error_fro,wall_ms,converged\n";
    char line[160];
    for (const auto& r : records) {
        std::snprintf(line, sizeof line, "%d,%lld,%d,%.17g,%.3f,%d\n", r.dimension,
                      static_cast<long long>(r.n), r.trial, r.error_fro, r.wall_ms,
                      r.converged ? 1 : 0);
        out << line;
    }
}

}  // namespace tef
