#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mnlb/policies.hpp"
#include "mnlb/rng.hpp"
#include "mnlb/types.hpp"

namespace mnlb {

enum class ContextDist { GAUSSIAN, SPHERE };
enum class RevenueMode { UNIFORM, RANDOM_POSITIVE };

const char* context_dist_name(ContextDist d);
const char* revenue_mode_name(RevenueMode m);
ContextDist context_dist_from_name(const std::string& name);
RevenueMode revenue_mode_from_name(const std::string& name);

struct EnvironmentConfig {
    int N = 1, K = 1, d = 1, T = 1;
    ContextDist context_dist = ContextDist::GAUSSIAN;
    RevenueMode revenue_mode = RevenueMode::UNIFORM;
    std::uint64_t theta_star_seed = 0;
    std::uint64_t context_seed = 0;
    std::uint64_t choice_seed = 0;
    std::uint64_t policy_seed = 0;
    bool normalize_features = true;

    void validate() const;
    // Per-replication sub-seeds derived from one base seed.
    static EnvironmentConfig from_base_seed(EnvironmentConfig proto,
                                            std::uint64_t base_seed,
                                            std::uint64_t replication);
};

// Synthetic environment: theta* ~ Uniform[0,1]^d, fresh per-round slates.
class Environment {
public:
    explicit Environment(const EnvironmentConfig& config);

    const EnvironmentConfig& config() const { return config_; }
    const MnlParameter& theta_star() const { return theta_star_; }

    // Slate for round t; draws from the context stream sequentially.
    ContextSlate next_slate(int t);
    double next_choice_u();

    // Analytic (or offline-estimated) lower bound on lambda_min of the
    // context second-moment matrix.
    double sigma0() const { return sigma0_; }

private:
    EnvironmentConfig config_;
    MnlParameter theta_star_;
    Rng context_rng_;
    Rng choice_rng_;
    double sigma0_;
};

struct TraceRow {
    int t = 0;
    std::string episode_or_level;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
    std::uint64_t cum_wall_ns = 0;
    std::string flags;
};

struct RegretTrace {
    std::string algorithm;
    int replication = 0;
    std::vector<TraceRow> rows;
    double final_cum_regret = 0.0;
    std::uint64_t total_wall_ns = 0;
    double sigma0 = 0.0;
};

struct RunSummary {
    std::string algorithm;
    int T = 0;
    int replications = 0;
    double mean_final_regret = 0.0;
    double std_final_regret = 0.0;
    double mean_runtime_s = 0.0;
};

// One episode of the round loop: slate -> offer -> regret -> choice -> update.
// Wall time covers policy step+update only. trace_every n keeps rounds with
// (t-1) % n == 0.
RegretTrace run_one(Environment& env, Policy& policy, int T, int replication,
                    int trace_every = 1);

// R independent replications with derived sub-seeds, plus the aggregate.
std::pair<std::vector<RegretTrace>, RunSummary> run_replications(
    const EnvironmentConfig& env_proto, const PolicyConfig& policy_proto,
    std::uint64_t base_seed, int replications, int trace_every = 1, int threads = 1);

RunSummary summarize_traces(const std::string& algorithm, int T,
                            const std::vector<RegretTrace>& traces);

}  // namespace mnlb
