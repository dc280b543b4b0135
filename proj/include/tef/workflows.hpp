#pragma once

#include "tef/config.hpp"

#include <string>

namespace tef {

/// Report document plus process status: 0 pass, 1 check failure.
struct WorkflowOutcome {
    Json report;
    int status = 0;
};

/// Keys of the fit workflow: model and solver keys plus data (CSV path),
/// output (JSON path, empty for stdout).
Json fit_defaults();
/// Fits the dataset; status 1 when the solver does not converge. With a recipe
/// the report also carries the error against the recipe's Theta*.
WorkflowOutcome run_fit(const Json& config);

/// Keys of the sample workflow: model keys plus n, seed, sampler, bins, output.
Json sample_defaults();
/// Draws n points from the recipe's Theta*; the report carries the dataset CSV
/// text under "csv" only when no output path is set.
WorkflowOutcome run_sample(const Json& config);

/// Keys of the verification battery: model keys plus bins, mesh_step,
/// mesh_half_width, smoothness_draws, seed, output.
Json verify_defaults();
/// Feasibility gate (ConfigError), KL-equivalence mesh check, zero gradient at
/// the truth, smoothness bound at random feasible parameters, and the
/// partition function's change under grid doubling against its budget.
WorkflowOutcome run_verify(const Json& config);

/// Keys of the diagnostics report: model keys plus source (grid or dataset),
/// data, bins, alpha, delta, sparsity, output.
Json diagnose_defaults();
WorkflowOutcome run_diagnose(const Json& config);
/// Human-readable table of a diagnose report.
std::string format_diagnose_table(const Json& report);

}  // namespace tef
