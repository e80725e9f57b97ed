#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mnlb/policies.hpp"
#include "mnlb/simulator.hpp"

namespace mnlb {

// Fully resolved experiment description. Parsing materializes every default
// so the serialized form alone reproduces the run.
struct ExperimentSpec {
    int N = 0, K = 0, d = 0, T = 0;
    std::vector<Algorithm> algorithms;
    std::uint64_t seed = 0;

    std::string context_dist = "GAUSSIAN";
    std::string revenue_mode = "UNIFORM";
    bool normalize_features = true;
    double kappa = 0.25;
    // Empty means "use the environment's value" (analytic or estimated).
    std::optional<double> sigma0;
    double delta = 0.05;
    std::optional<int> init_rounds;  // T0 override, applied to every policy
    int replications = 1;
    int trace_every = 1;
    std::string output_dir = "out";
    bool record_wall_time = false;
    int threads = 1;
    bool formal_constants = false;

    void validate() const;  // throws ConfigError

    EnvironmentConfig environment() const;
    PolicyConfig policy(Algorithm algorithm, double resolved_sigma0) const;
};

// Strict parse: unknown keys rejected, defaults materialized.
ExperimentSpec parse_config(const std::string& path);
ExperimentSpec parse_config_text(const std::string& text);

// JSON text that parse_config_text round-trips to the same spec.
std::string serialize_spec(const ExperimentSpec& spec);

struct RunOptions {
    std::optional<std::string> output_dir;
    std::optional<int> threads;
    std::optional<int> trace_every;
};

// Executes the spec: per-algorithm trace CSVs, summary.csv, manifest.json.
// Returns the summaries; throws on failure.
std::vector<RunSummary> run_experiment(const ExperimentSpec& spec,
                                       const RunOptions& options = {});

// Recomputes summaries from trace CSV files (as written by run_experiment).
std::vector<RunSummary> summarize_trace_files(const std::vector<std::string>& paths);

std::string format_summary_csv(const std::vector<RunSummary>& summaries);

// 12 significant digits, shortest-faithful within that precision.
std::string format_double(double value);

}  // namespace mnlb
