#pragma once

#include "tef/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace tef {

/// One fit: error ||Theta_hat - Theta*||_F at (dimension, n, trial).
struct ScalingRecord {
    int dimension = 0;
    Index n = 0;
    int trial = 0;
    double error_fro = 0.0;
    double wall_ms = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct ExperimentConfig {
    std::string experiment = "frobenius_star";
    ModelSpec model;
    std::vector<int> dimensions;
    std::vector<Index> n;
    int trials = 20;
    std::uint64_t seed = 1;
    /// "grid" or "rejection".
    std::string sampler = "grid";
    int bins = 100;
    int workers = 1;
    /// Record wall time; off by default so the CSV is a pure function of the config.
    bool timing = false;
    SolverConfig solver;
    bool lambda_auto = false;
    double delta = 0.05;
    double slope_min = -0.60;
    double slope_max = -0.35;
    double r2_min = 0.9;
    bool check_dimension_slope = false;
    double dimension_slope_min = 0.8;
    double dimension_slope_max = 1.5;
    bool check_monotone_dimension = false;
};

/// Every experiment key with the values of the named preset
/// (frobenius_star, maxnorm_banded, nuclear_poly or custom).
Json experiment_defaults(const std::string& experiment = "custom");
/// Preset defaults for user["experiment"], overlaid with the user's keys.
/// full_scale = true raises trials to 100 (and k1 up to 5 for nuclear_poly)
/// unless the user set those keys.
Json resolve_experiment_json(const Json& user);
ExperimentConfig experiment_from_json(const Json& resolved);

/// Seed of the stream for one job; independent of scheduling.
std::uint64_t job_seed(std::uint64_t base, int dimension, Index n, int trial);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int points = 0;
    int excluded = 0;
    std::string note;
};

/// OLS of log(value) on log(axis). Zero values are excluded with a note; fewer
/// than 3 distinct remaining axis values throws std::invalid_argument.
SlopeFit fit_loglog_slope(const std::vector<double>& axis, const std::vector<double>& values);

struct ExperimentResult {
    std::vector<ScalingRecord> records;
    Json summary;
    bool pass = false;
};

/// Runs every (dimension, n, trial) job on a pool of `workers` threads. Records
/// come back ordered by (dimension, n, trial).
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Header dimension,n,trial,error_fro,wall_ms,converged.
void write_scaling_csv(std::ostream& out, const std::vector<ScalingRecord>& records);

}  // namespace tef
