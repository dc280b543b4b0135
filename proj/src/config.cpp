#include "tef/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace tef {

namespace {

Json parse_number(const std::string& key, const std::string& text, bool integer) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (integer) {
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec == std::errc() && ptr == end) return v;
    } else {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec == std::errc() && ptr == end) return v;
    }
    throw ConfigError("flag --" + key + ": cannot parse '" + text + "' as " +
                      (integer ? "an integer" : "a number"));
}

bool looks_integer(const std::string& text) {
    return text.find_first_of(".eE") == std::string::npos;
}

}  // namespace

Json merge_config(Json base, const Json& top, bool known_only) {
    if (!top.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : top.items()) {
        if (known_only && !base.contains(key)) throw ConfigError("unknown config key '" + key + "'");
        base[key] = value;
    }
    return base;
}

Json parse_flag_value(const std::string& key, const std::string& text, const Json& like) {
    if (like.is_boolean()) {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw ConfigError("flag --" + key + ": expected true or false, got '" + text + "'");
    }
    if (like.is_number_integer()) return parse_number(key, text, true);
    if (like.is_number()) return parse_number(key, text, false);
    if (like.is_array()) {
        Json out = Json::array();
        std::stringstream ss(text);
        for (std::string item; std::getline(ss, item, ',');) {
            const bool integer = !like.empty() ? like.front().is_number_integer() : looks_integer(item);
            out.push_back(parse_number(key, item, integer));
        }
        return out;
    }
    return text;
}

Json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path);
    try {
        return Json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
}

Json model_defaults() {
    return Json{{"statistic", "pairwise_quadratic"},
                {"support", "box"},
                {"dimension", 2},
                {"k2", 2},
                {"degree", 2},
                {"frequency", 1},
                {"bound", 1.0},
                {"norm", "frobenius"},
                {"radius", 1.0},
                {"centering", "grid_quadrature"},
                {"centering_bins", 100},
                {"centering_samples", 1'000'000},
                {"centering_seed", 0},
                {"recipe", ""}};
}

ModelSpec model_spec_from_json(const Json& cfg) {
    ModelSpec s;
    s.statistic = parse_statistic_kind(config_value<std::string>(cfg, "statistic"));
    s.support = parse_support_kind(config_value<std::string>(cfg, "support"));
    s.dimension = config_value<int>(cfg, "dimension");
    s.k2 = config_value<int>(cfg, "k2");
    s.degree = config_value<int>(cfg, "degree");
    s.frequency = config_value<int>(cfg, "frequency");
    s.bound = config_value<double>(cfg, "bound");
    s.norm = parse_norm_kind(config_value<std::string>(cfg, "norm"));
    s.radius = config_value<double>(cfg, "radius");
    s.centering = parse_centering_method(config_value<std::string>(cfg, "centering"));
    s.centering_bins = config_value<int>(cfg, "centering_bins");
    s.centering_samples = config_value<std::int64_t>(cfg, "centering_samples");
    s.centering_seed = config_value<std::uint64_t>(cfg, "centering_seed");
    const auto recipe = config_value<std::string>(cfg, "recipe");
    if (!recipe.empty()) s.recipe = parse_recipe(recipe);
    if (s.dimension < 1) throw ConfigError("dimension must be >= 1");
    if (!(s.bound > 0.0)) throw ConfigError("bound must be > 0");
    if (!(s.radius >= 0.0)) throw ConfigError("radius must be >= 0");
    return s;
}

StatisticFamily build_family(const ModelSpec& spec, int dimension) {
    const bool monomial = spec.statistic == StatisticKind::MonomialGrid;
    const Support support(spec.support, monomial ? 2 : dimension, spec.bound);
    StatisticFamily f = [&] {
        switch (spec.statistic) {
            case StatisticKind::PairwiseQuadratic: return StatisticFamily::pairwise_quadratic(support);
            case StatisticKind::MonomialGrid:
                return StatisticFamily::monomial_grid(support, dimension, spec.k2);
            case StatisticKind::PolynomialMultiindex:
                return StatisticFamily::polynomial(support, spec.degree);
            case StatisticKind::Trigonometric:
                return StatisticFamily::trigonometric(support, spec.frequency);
            case StatisticKind::Combined:
                return StatisticFamily::combined(support, spec.degree, spec.frequency);
        }
        throw ConfigError("unknown statistic");
    }();
    if (spec.centering == CenteringMethod::None) return f;
    CenteringSpec c;
    c.method = spec.centering;
    c.bins = spec.centering_bins;
    c.count = spec.centering_samples;
    c.seed = spec.centering_seed;
    try {
        return centered_family(f, c);
    } catch (const GuardExceeded&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

StatisticFamily build_family(const ModelSpec& spec) { return build_family(spec, spec.dimension); }

ConstraintSpec build_constraint(const ModelSpec& spec) { return {spec.norm, spec.radius}; }

Eigen::MatrixXd build_truth(const ModelSpec& spec, int dimension) {
    if (!spec.recipe) throw ConfigError("a true-parameter recipe is required (key 'recipe')");
    const Eigen::MatrixXd t = build_true_parameter(*spec.recipe, dimension);
    const Index rows = dimension;
    const Index cols = spec.statistic == StatisticKind::MonomialGrid ? spec.k2 : dimension;
    const bool shape_ok = (spec.statistic == StatisticKind::PairwiseQuadratic ||
                           spec.statistic == StatisticKind::MonomialGrid) &&
                          t.rows() == rows && t.cols() == cols;
    if (!shape_ok)
        throw ConfigError("recipe " + to_string(*spec.recipe) + " does not fit statistic " +
                          to_string(spec.statistic) + " at dimension " + std::to_string(dimension));
    return t;
}

void require_feasible(const Eigen::MatrixXd& theta_star, const ConstraintSpec& constraint) {
    if (!constraint.contains(theta_star))
        throw ConfigError("true parameter violates the constraint: " + to_string(constraint.kind) +
                          " norm " + std::to_string(norm(theta_star, constraint.kind)) + " > r = " +
                          std::to_string(constraint.radius));
}

Json solver_defaults() {
    return Json{{"mode", "constrained"}, {"lambda", 0.0},       {"lambda_auto", false},
                {"delta", 0.05},         {"step_rule", "backtracking"}, {"max_iters", 20'000},
                {"tol", 1e-7},           {"fista", false},      {"step", 0.0}};
}

SolverConfig solver_config_from_json(const Json& cfg) {
    SolverConfig c;
    try {
        c.mode = parse_solver_mode(config_value<std::string>(cfg, "mode"));
        c.step_rule = parse_step_rule(config_value<std::string>(cfg, "step_rule"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    c.lambda = config_value<double>(cfg, "lambda");
    c.max_iters = config_value<int>(cfg, "max_iters");
    c.tol = config_value<double>(cfg, "tol");
    c.fista = config_value<bool>(cfg, "fista");
    c.step = config_value<double>(cfg, "step");
    if (c.max_iters < 0 || !(c.tol > 0.0) || !(c.lambda >= 0.0) || !(c.step >= 0.0))
        throw ConfigError("solver settings out of range (max_iters >= 0, tol > 0, lambda >= 0, step >= 0)");
    return c;
}

}  // namespace tef
