#pragma once

#include "tef/model.hpp"
#include "tef/norms.hpp"
#include "tef/sampling.hpp"
#include "tef/solver.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace tef {

using Json = nlohmann::ordered_json;

/// Typed lookup of a flat config key. Missing keys and wrong types raise ConfigError.
template <typename T>
T config_value(const Json& cfg, const std::string& key) {
    if (!cfg.contains(key)) throw ConfigError("missing config key '" + key + "'");
    try {
        return cfg.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type: " + cfg.at(key).dump());
    }
}

/// Overlay `top` onto `base`; with `known_only`, unknown keys in `top` raise ConfigError.
Json merge_config(Json base, const Json& top, bool known_only = true);

/// Parse a command-line string into the JSON type of `like` (number, integer,
/// bool, string, or a comma-separated array of numbers).
Json parse_flag_value(const std::string& key, const std::string& text, const Json& like);

Json read_json_file(const std::string& path);

/// Statistic family, support, constraint and true parameter named by config keys.
struct ModelSpec {
    StatisticKind statistic = StatisticKind::PairwiseQuadratic;
    SupportKind support = SupportKind::Box;
    /// Ambient dimension p; for monomial_grid this is k1 and p = 2.
    int dimension = 2;
    int k2 = 2;
    int degree = 2;
    int frequency = 1;
    double bound = 1.0;
    NormKind norm = NormKind::Frobenius;
    double radius = 1.0;
    CenteringMethod centering = CenteringMethod::GridQuadrature;
    int centering_bins = 100;
    std::int64_t centering_samples = 1'000'000;
    std::uint64_t centering_seed = 0;
    std::optional<Recipe> recipe;
};

/// Keys: statistic, support, dimension, k2, degree, frequency, bound, norm,
/// radius, centering, centering_bins, centering_samples, centering_seed, recipe.
Json model_defaults();
ModelSpec model_spec_from_json(const Json& cfg);

/// The family with centering applied, for the given dimension.
StatisticFamily build_family(const ModelSpec& spec, int dimension);
StatisticFamily build_family(const ModelSpec& spec);
ConstraintSpec build_constraint(const ModelSpec& spec);
/// Theta* from the recipe; ConfigError when no recipe is set or the shape does
/// not match the family.
Eigen::MatrixXd build_truth(const ModelSpec& spec, int dimension);
/// ConfigError when R(Theta*) > r.
void require_feasible(const Eigen::MatrixXd& theta_star, const ConstraintSpec& constraint);

/// Keys: mode, lambda, step_rule, max_iters, tol, fista, step.
Json solver_defaults();
SolverConfig solver_config_from_json(const Json& cfg);

}  // namespace tef
