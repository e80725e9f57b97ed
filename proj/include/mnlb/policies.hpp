#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mnlb/estimation.hpp"
#include "mnlb/gram.hpp"
#include "mnlb/rng.hpp"
#include "mnlb/types.hpp"

namespace mnlb {

enum class Algorithm { UCB_MNL, UCB_MNL_ONS, DBL_MNL, SUPCB_MNL };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);  // throws ConfigError

struct PolicyConfig {
    Algorithm algorithm = Algorithm::UCB_MNL;
    int horizon = 1;   // T
    int capacity = 1;  // K
    ConfidenceConfig confidence;
    std::optional<int> init_rounds;  // T0 override
    std::uint64_t rng_seed = 0;
    // Use the literal theoretical radii and exploration constants instead of
    // the practical desk-scale calibration (see each policy for details).
    bool formal_constants = false;
    // Test hook: fix the confidence width (0 gives the pure greedy policy).
    std::optional<double> forced_alpha;
};

// Uniform sequential interface: step() proposes an assortment for the
// round's slate, update() feeds back the observed choice. Strict
// step -> update alternation is enforced. One instance per thread.
class Policy {
public:
    virtual ~Policy() = default;

    Assortment step(const ContextSlate& slate);
    void update(const ContextSlate& slate, const Assortment& assortment,
                const ChoiceOutcome& outcome);

    virtual const char* name() const = 0;
    // Episode or exploration-level label for the trace; empty if N/A.
    virtual std::string episode_or_level() const { return {}; }

    // Flags raised since the last call; cleared on read.
    std::string take_flags();

protected:
    virtual Assortment do_step(const ContextSlate& slate) = 0;
    virtual void do_update(const ContextSlate& slate, const Assortment& assortment,
                           const ChoiceOutcome& outcome) = 0;

    void raise_flag(const std::string& flag);

private:
    bool awaiting_update_ = false;
    std::string flags_;
};

// Default initialization duration for the per-round-MLE policy.
int default_init_rounds(int T, int d, int K, double sigma0);
// Smaller default for the online-update variant.
int online_default_init_rounds(int T, int d, int K, double sigma0);

class UcbMnlPolicy : public Policy {
public:
    UcbMnlPolicy(int num_items, int dim, const PolicyConfig& config);

    const char* name() const override { return "UCB_MNL"; }

    int init_rounds() const { return init_rounds_; }
    std::size_t log_size() const { return log_.size(); }
    const MnlParameter& theta_hat() const { return theta_; }
    const GramMatrix& gram() const { return gram_; }

    // Running sum of max_{i in S_t} ||x_ti||^2_{V_t^{-1}} (diagnostic).
    double self_norm_sq_sum() const { return self_norm_sq_sum_; }
    double lambda_min_at_init_end() const { return lambda_min_init_; }

protected:
    Assortment do_step(const ContextSlate& slate) override;
    void do_update(const ContextSlate& slate, const Assortment& assortment,
                   const ChoiceOutcome& outcome) override;

private:
    PolicyConfig config_;
    int num_items_;
    int round_ = 0;
    int init_rounds_;
    GramMatrix gram_;
    SampleLog log_;
    MnlParameter theta_;
    Rng rng_;
    double self_norm_sq_sum_ = 0.0;
    double lambda_min_init_ = 0.0;
};

// UCB-MNL with the online Newton parameter update: constant per-round cost,
// no sample log.
class OnsMnlPolicy : public Policy {
public:
    OnsMnlPolicy(int num_items, int dim, const PolicyConfig& config);

    const char* name() const override { return "UCB_MNL_ONS"; }

    int init_rounds() const { return init_rounds_; }
    const MnlParameter& theta_hat() const { return theta_; }
    bool keeps_sample_log() const { return false; }

protected:
    Assortment do_step(const ContextSlate& slate) override;
    void do_update(const ContextSlate& slate, const Assortment& assortment,
                   const ChoiceOutcome& outcome) override;

private:
    PolicyConfig config_;
    int num_items_;
    int round_ = 0;
    int init_rounds_;
    GramMatrix gram_;
    MnlParameter theta_;
    Vector pending_gradient_;
    Rng rng_;
};

// Doubling-schedule policy: one MLE fit per episode, confidence geometry
// frozen on the previous episode's Gram, random exploration only in an
// episode tail while the live Gram's smallest eigenvalue is below threshold.
class DblMnlPolicy : public Policy {
public:
    DblMnlPolicy(int num_items, int dim, const PolicyConfig& config);

    const char* name() const override { return "DBL_MNL"; }
    std::string episode_or_level() const override;

    // tau_k = d * 2^(k-1).
    static long long episode_boundary(int k, int dim);

    int episode() const { return episode_; }
    int mle_fit_count() const { return mle_fits_; }
    double current_q() const { return q_effective_; }
    double current_alpha() const { return alpha_k_; }
    double formal_q() const { return q_formal_; }
    const GramMatrix& frozen_gram() const { return frozen_; }
    const GramMatrix& live_gram() const { return live_; }
    const MnlParameter& theta_hat() const { return theta_; }

protected:
    Assortment do_step(const ContextSlate& slate) override;
    void do_update(const ContextSlate& slate, const Assortment& assortment,
                   const ChoiceOutcome& outcome) override;

private:
    void start_episode();

    PolicyConfig config_;
    int num_items_;
    int dim_;
    int round_ = 0;
    int episode_ = 1;
    long long tau_prev_ = 0;
    long long tau_k_;
    GramMatrix live_;
    GramMatrix frozen_;
    SampleLog episode_log_;
    MnlParameter theta_;
    bool frozen_usable_ = false;
    double q_formal_ = 0.0;
    double q_effective_ = 0.0;
    double alpha_k_ = 0.0;
    double eigen_threshold_ = 0.0;
    int mle_fits_ = 0;
    Rng rng_;
};

// Auer-style master policy with per-level independent sample sets.
class SupCbMnlPolicy : public Policy {
public:
    SupCbMnlPolicy(int num_items, int dim, const PolicyConfig& config);

    const char* name() const override { return "SUPCB_MNL"; }
    std::string episode_or_level() const override;

    int init_rounds() const { return init_rounds_; }
    int levels() const { return num_levels_; }
    std::size_t family_size() const { return family_.size(); }
    // |Psi_0|, ..., |Psi_L| over the learning phase so far.
    std::vector<int> psi_sizes() const;
    // Candidate-family sizes at each level visited in the last step.
    const std::vector<int>& last_chain_sizes() const { return last_chain_sizes_; }
    // Whether every pruning pass in the last step kept the running argmax.
    bool last_argmax_retained() const { return last_argmax_retained_; }

protected:
    Assortment do_step(const ContextSlate& slate) override;
    void do_update(const ContextSlate& slate, const Assortment& assortment,
                   const ChoiceOutcome& outcome) override;

private:
    struct Level {
        SampleLog log;        // [T0] init samples plus Psi_ell
        GramMatrix gram;      // matching design Gram
        MnlParameter theta;
        bool theta_fresh = false;
        int psi_count = 0;

        explicit Level(int dim) : gram(dim) {}
    };

    void ensure_levels_initialized();
    void refit_level(Level& level);

    PolicyConfig config_;
    int num_items_;
    int dim_;
    int round_ = 0;
    int init_rounds_;
    int num_levels_;
    double alpha_;
    std::vector<std::vector<int>> family_;  // all assortments of size <= K
    SampleLog base_log_;
    GramMatrix base_gram_;
    std::vector<Level> levels_;  // index 1..L used
    bool levels_ready_ = false;
    int psi0_count_ = 0;
    int pending_level_ = -1;  // -1 init, 0 exploit, 1..L explore
    int last_recorded_level_ = -1;
    std::vector<int> last_chain_sizes_;
    bool last_argmax_retained_ = true;
    Rng rng_;
};

// Constructs the policy matching the config. Throws ConfigError for
// unusable configurations.
std::unique_ptr<Policy> make_policy(const PolicyConfig& config, int num_items, int dim);

}  // namespace mnlb
