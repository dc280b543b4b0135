#include <doctest.h>

#include "tef/experiment.hpp"
#include "tef/workflows.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace tef;

TEST_CASE("log-log slope fit") {
    const std::vector<double> n{100, 316, 1000, 3162, 10000};
    std::vector<double> e;
    for (double v : n) e.push_back(3.0 / std::sqrt(v));
    const SlopeFit f = fit_loglog_slope(n, e);
    CHECK(std::abs(f.slope + 0.5) <= 1e-12);
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.points == 5);

    const SlopeFit flat = fit_loglog_slope(n, {0.2, 0.2, 0.2, 0.2, 0.2});
    CHECK(std::abs(flat.slope) <= 1e-15);
    CHECK(flat.r2 == 1.0);

    const SlopeFit zeros = fit_loglog_slope(n, {0.3, 0.0, 0.1, 0.05, 0.0});
    CHECK(zeros.excluded == 2);
    CHECK(zeros.points == 3);
    CHECK_FALSE(zeros.note.empty());

    CHECK_THROWS_AS(fit_loglog_slope({1, 2}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(fit_loglog_slope({1, 2, 3}, {1, 0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(fit_loglog_slope({1, 1, 1, 2}, {1, 2, 3, 4}), std::invalid_argument);
    CHECK_THROWS_AS(fit_loglog_slope({1, 2, 3}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(fit_loglog_slope({1, 2, 3}, {1, -2, 3}), std::invalid_argument);
}

TEST_CASE("job seeds") {
    CHECK(job_seed(1, 3, 100, 0) == job_seed(1, 3, 100, 0));
    CHECK(job_seed(1, 3, 100, 0) != job_seed(1, 3, 100, 1));
    CHECK(job_seed(1, 3, 100, 0) != job_seed(1, 4, 100, 0));
    CHECK(job_seed(1, 3, 100, 0) != job_seed(1, 3, 316, 0));
    CHECK(job_seed(1, 3, 100, 0) != job_seed(2, 3, 100, 0));
}

TEST_CASE("config parsing") {
    CHECK(parse_flag_value("trials", "7", Json(20)) == Json(7));
    CHECK(parse_flag_value("radius", "1.5", Json(1.0)) == Json(1.5));
    CHECK(parse_flag_value("radius", "2", Json(1.0)).get<double>() == 2.0);
    CHECK(parse_flag_value("timing", "true", Json(false)) == Json(true));
    CHECK(parse_flag_value("n", "10,20,30", Json{100, 316}) == Json{10, 20, 30});
    CHECK(parse_flag_value("norm", "max", Json("frobenius")) == Json("max"));
    CHECK_THROWS_AS(parse_flag_value("trials", "2.5", Json(20)), ConfigError);
    CHECK_THROWS_AS(parse_flag_value("timing", "maybe", Json(false)), ConfigError);
    CHECK_THROWS_AS(parse_flag_value("n", "10,x", Json{100}), ConfigError);

    CHECK_THROWS_AS(merge_config(model_defaults(), Json{{"nonsense", 1}}), ConfigError);
    CHECK(merge_config(model_defaults(), Json{{"radius", 3}})["radius"] == Json(3));
    CHECK_THROWS_AS(model_spec_from_json(merge_config(model_defaults(), Json{{"norm", "spectral"}})), ConfigError);
    CHECK_THROWS_AS(model_spec_from_json(merge_config(model_defaults(), Json{{"radius", "big"}})), ConfigError);
    CHECK_THROWS_AS(read_json_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("experiment presets") {
    const Json fs = resolve_experiment_json(Json{{"experiment", "frobenius_star"}});
    CHECK(fs["dimensions"] == Json{3, 4});
    CHECK(fs["support"] == "l1_ball");
    CHECK(fs["recipe"] == "star");
    CHECK(fs["trials"] == 20);
    const Json mb = resolve_experiment_json(Json{{"experiment", "maxnorm_banded"}});
    CHECK(mb["sampler"] == "rejection");
    CHECK(mb["radius"].get<double>() == 0.5);
    const Json np = resolve_experiment_json(Json{{"experiment", "nuclear_poly"}});
    CHECK(np["dimensions"] == Json{1, 2, 3, 4});
    CHECK(np["k2"] == 2);

    const Json full = resolve_experiment_json(Json{{"experiment", "nuclear_poly"}, {"full_scale", true}});
    CHECK(full["trials"] == 100);
    CHECK(full["dimensions"] == Json{1, 2, 3, 4, 5});
    const Json kept =
        resolve_experiment_json(Json{{"experiment", "nuclear_poly"}, {"full_scale", true}, {"trials", 7}});
    CHECK(kept["trials"] == 7);

    CHECK_THROWS_AS(resolve_experiment_json(Json{{"experiment", "unknown"}}), ConfigError);
    CHECK_THROWS_AS(resolve_experiment_json(Json{{"experiment", "custom"}, {"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(experiment_from_json(resolve_experiment_json(
                        Json{{"experiment", "frobenius_star"}, {"sampler", "rejection"}})),
                    ConfigError);
    CHECK_THROWS_AS(experiment_from_json(resolve_experiment_json(Json{{"experiment", "frobenius_star"}, {"trials", 0}})),
                    ConfigError);
}

TEST_CASE("small experiment run") {
    const Json user{{"experiment", "frobenius_star"}, {"dimensions", {2, 3}}, {"n", {100, 300, 1000}}, {"trials", 2}};
    ExperimentConfig cfg = experiment_from_json(resolve_experiment_json(user));
    const ExperimentResult a = run_experiment(cfg);
    REQUIRE(a.records.size() == 12);
    CHECK(a.records[0].dimension == 2);
    CHECK(a.records[0].n == 100);
    CHECK(a.records[1].trial == 1);
    CHECK(a.records.back().dimension == 3);
    CHECK(a.records.back().n == 1000);
    for (const auto& r : a.records) {
        CHECK(r.error_fro >= 0.0);
        CHECK(r.wall_ms == 0.0);
    }
    CHECK(a.summary["cells"].size() == 6);
    CHECK(a.summary["n_slopes"].size() == 2);

    cfg.workers = 3;
    const ExperimentResult b = run_experiment(cfg);
    std::ostringstream ca, cb;
    write_scaling_csv(ca, a.records);
    write_scaling_csv(cb, b.records);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind("dimension,n,trial,error_fro,wall_ms,converged\n", 0) == 0);

    cfg.model.radius = 1.0;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("verify battery") {
    const WorkflowOutcome ok = run_verify(verify_defaults());
    CHECK(ok.status == 0);
    CHECK(ok.report["checks"]["kl_equivalence"]["pass"] == true);
    CHECK(ok.report["checks"]["zero_gradient"]["pass"] == true);
    CHECK(ok.report["checks"]["smoothness"]["pass"] == true);
    CHECK(ok.report["checks"]["quadrature"]["pass"] == true);

    Json raw = verify_defaults();
    raw["centering"] = "none";
    const WorkflowOutcome bad = run_verify(raw);
    CHECK(bad.status == 1);
    CHECK(bad.report["checks"]["kl_equivalence"]["pass"] == false);

    Json outside = verify_defaults();
    outside["radius"] = 0.5;
    CHECK_THROWS_AS(run_verify(outside), ConfigError);
}

TEST_CASE("sample, fit and diagnose workflows") {
    const auto path = (std::filesystem::temp_directory_path() / "tef_workflow_sample.csv").string();
    Json s = sample_defaults();
    s["support"] = "l1_ball";
    s["radius"] = 2.0;
    s["n"] = 2000;
    s["output"] = path;
    CHECK(run_sample(s).status == 0);

    Json f = fit_defaults();
    f["support"] = "l1_ball";
    f["radius"] = 2.0;
    f["recipe"] = "star";
    f["step_rule"] = "backtracking";
    f["data"] = path;
    const WorkflowOutcome fitted = run_fit(f);
    CHECK(fitted.status == 0);
    CHECK(fitted.report["converged"] == true);
    CHECK(fitted.report["error_fro"].get<double>() < 1.0);

    Json missing = fit_defaults();
    CHECK_THROWS_AS(run_fit(missing), ConfigError);

    Json d = diagnose_defaults();
    d["source"] = "dataset";
    d["data"] = path;
    const WorkflowOutcome diag = run_diagnose(d);
    CHECK(diag.report["lambda_source"] == "dataset(n=2000)");
    CHECK(format_diagnose_table(diag.report).find("implied n") != std::string::npos);
    std::filesystem::remove(path);
}
