#include "mnlb/policies.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "mnlb/assortment.hpp"
#include "mnlb/errors.hpp"
#include "mnlb/model.hpp"

namespace mnlb {

namespace {

Assortment random_full_assortment(Rng& rng, int num_items, int capacity) {
    auto items = rng.sample_without_replacement(num_items, std::min(capacity, num_items));
    std::sort(items.begin(), items.end());
    return Assortment{std::move(items)};
}

}  // namespace

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::UCB_MNL: return "UCB_MNL";
        case Algorithm::UCB_MNL_ONS: return "UCB_MNL_ONS";
        case Algorithm::DBL_MNL: return "DBL_MNL";
        case Algorithm::SUPCB_MNL: return "SUPCB_MNL";
    }
    return "UNKNOWN";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "UCB_MNL") return Algorithm::UCB_MNL;
    if (name == "UCB_MNL_ONS") return Algorithm::UCB_MNL_ONS;
    if (name == "DBL_MNL") return Algorithm::DBL_MNL;
    if (name == "SUPCB_MNL") return Algorithm::SUPCB_MNL;
    throw ConfigError("unknown algorithm: " + name);
}

Assortment Policy::step(const ContextSlate& slate) {
    if (awaiting_update_)
        throw DomainError("Policy: step() called twice without update()");
    Assortment s = do_step(slate);
    awaiting_update_ = true;
    return s;
}

void Policy::update(const ContextSlate& slate, const Assortment& assortment,
                    const ChoiceOutcome& outcome) {
    if (!awaiting_update_)
        throw DomainError("Policy: update() called without a preceding step()");
    do_update(slate, assortment, outcome);
    awaiting_update_ = false;
}

std::string Policy::take_flags() {
    std::string out = std::move(flags_);
    flags_.clear();
    return out;
}

void Policy::raise_flag(const std::string& flag) {
    if (flags_.find(flag) != std::string::npos) return;
    if (!flags_.empty()) flags_ += '|';
    flags_ += flag;
}

int default_init_rounds(int T, int d, int K, double sigma0) {
    const double a = 4.0 * (d + std::log(static_cast<double>(T))) / (sigma0 * sigma0 * K);
    const double b = 2.0 * d / static_cast<double>(K);
    int t0 = static_cast<int>(std::ceil(std::max(a, b)));
    t0 = std::min(t0, std::max(1, T / 10));
    return std::max(t0, 1);
}

int online_default_init_rounds(int T, int d, int K, double sigma0) {
    const double a = (d + std::log(static_cast<double>(T))) / (sigma0 * sigma0 * K);
    const double b = 1.0 / sigma0;
    int t0 = static_cast<int>(std::ceil(std::max(a, b)));
    t0 = std::min(t0, std::max(1, T / 10));
    return std::max(t0, 1);
}

// ---------------------------------------------------------------------------
// UCB-MNL
// ---------------------------------------------------------------------------

UcbMnlPolicy::UcbMnlPolicy(int num_items, int dim, const PolicyConfig& config)
    : config_(config),
      num_items_(num_items),
      init_rounds_(config.init_rounds.value_or(default_init_rounds(
          config.horizon, dim, config.capacity, config.confidence.sigma0))),
      gram_(dim),
      theta_(MnlParameter::Zero(dim)),
      rng_(Rng::derive(config.rng_seed, "policy")) {
    config_.confidence.validate();
    if (init_rounds_ < 1)
        throw ConfigError("UCB_MNL: initialization duration must be >= 1");
}

Assortment UcbMnlPolicy::do_step(const ContextSlate& slate) {
    const int t = round_ + 1;
    if (t <= init_rounds_) return random_full_assortment(rng_, num_items_, config_.capacity);

    const double alpha = config_.forced_alpha.value_or(
        radius_ucb(static_cast<double>(t), slate.dim(), config_.confidence.kappa));
    const OptimisticUtilities z = optimistic_utilities(slate, theta_, gram_, alpha);
    return argmax_assortment(z.z, slate.revenues, config_.capacity);
}

void UcbMnlPolicy::do_update(const ContextSlate& slate, const Assortment& assortment,
                             const ChoiceOutcome& outcome) {
    ++round_;
    log_.append({slate, assortment, outcome});
    gram_.add_slate(slate, assortment);

    // Diagnostic for the self-normalized-norm potential: max_i ||x||^2_{V_t^{-1}}.
    double max_sq = 0.0;
    if (gram_.min_eigenvalue() > 1e-12) {
        for (int i : assortment.items) {
            const double nn = gram_.weighted_norm(slate.features.row(i).transpose());
            max_sq = std::max(max_sq, nn * nn);
        }
    } else {
        max_sq = 1.0;  // x is in V_t's range, so the term cannot exceed 1
    }
    self_norm_sq_sum_ += max_sq;

    if (round_ == init_rounds_) lambda_min_init_ = gram_.min_eigenvalue();
    if (round_ < init_rounds_) return;

    if (gram_.min_eigenvalue() <= 1e-12) {
        raise_flag("singular_design");
        return;
    }
    // gram_ is the design Gram of log_, already checked above.
    const MleReport report = mle_fit(log_, theta_, 1e-10, 100, false);
    if (report.converged)
        theta_ = report.theta_hat;
    else
        raise_flag("mle_not_converged");
}

// ---------------------------------------------------------------------------
// UCB-MNL with online parameter update
// ---------------------------------------------------------------------------

OnsMnlPolicy::OnsMnlPolicy(int num_items, int dim, const PolicyConfig& config)
    : config_(config),
      num_items_(num_items),
      init_rounds_(config.init_rounds.value_or(online_default_init_rounds(
          config.horizon, dim, config.capacity, config.confidence.sigma0))),
      gram_(dim),
      theta_(MnlParameter::Zero(dim)),
      pending_gradient_(Vector::Zero(dim)),
      rng_(Rng::derive(config.rng_seed, "policy")) {
    config_.confidence.validate();
    if (init_rounds_ < 1)
        throw ConfigError("UCB_MNL_ONS: initialization duration must be >= 1");
}

Assortment OnsMnlPolicy::do_step(const ContextSlate& slate) {
    const int t = round_ + 1;
    if (t <= init_rounds_) return random_full_assortment(rng_, num_items_, config_.capacity);

    double alpha;
    if (config_.forced_alpha) {
        alpha = *config_.forced_alpha;
    } else if (config_.formal_constants) {
        alpha = radius_online(static_cast<double>(t), slate.dim(), config_.capacity,
                              config_.confidence.kappa,
                              static_cast<double>(init_rounds_));
    } else {
        // Practical width: the same confidence geometry as the per-round-MLE
        // policy. The sqrt(kappa/2) factor compensates for the kappa/2
        // weighting of this policy's Gram updates.
        alpha = radius_ucb(static_cast<double>(t), slate.dim(),
                           config_.confidence.kappa) *
                std::sqrt(config_.confidence.kappa / 2.0);
    }
    const OptimisticUtilities z = optimistic_utilities(slate, theta_, gram_, alpha);
    return argmax_assortment(z.z, slate.revenues, config_.capacity);
}

void OnsMnlPolicy::do_update(const ContextSlate& slate, const Assortment& assortment,
                             const ChoiceOutcome& outcome) {
    ++round_;
    const bool learning = round_ > init_rounds_;
    gram_.add_slate(slate, assortment,
                    learning ? config_.confidence.kappa / 2.0 : 1.0);
    if (learning) theta_ = online_newton_step(theta_, gram_, pending_gradient_);

    // Gradient of this round's loss at the fresh estimate; consumed next round.
    const Vector p = choice_probabilities(slate, assortment, theta_);
    pending_gradient_.setZero();
    for (int j = 0; j < assortment.size(); ++j) {
        const int i = assortment.items[static_cast<std::size_t>(j)];
        pending_gradient_ +=
            (p(j) - outcome.response(i)) * slate.features.row(i).transpose();
    }
}

// ---------------------------------------------------------------------------
// DBL-MNL
// ---------------------------------------------------------------------------

DblMnlPolicy::DblMnlPolicy(int num_items, int dim, const PolicyConfig& config)
    : config_(config),
      num_items_(num_items),
      dim_(dim),
      tau_k_(episode_boundary(1, dim)),
      live_(dim),
      frozen_(dim),
      theta_(MnlParameter::Zero(dim)),
      rng_(Rng::derive(config.rng_seed, "policy")) {
    config_.confidence.validate();
    const double kappa4 = std::pow(config_.confidence.kappa, 4.0);
    if (config_.capacity > 18.0 / kappa4)
        std::cerr << "[mnlb] warning: DBL_MNL assumes K <= 18/kappa^4; "
                     "K=" << config_.capacity << " exceeds it\n";
}

long long DblMnlPolicy::episode_boundary(int k, int dim) {
    return static_cast<long long>(dim) << (k - 1);
}

std::string DblMnlPolicy::episode_or_level() const {
    return std::to_string(episode_);
}

void DblMnlPolicy::start_episode() {
    ++episode_;
    tau_prev_ = tau_k_;
    tau_k_ = episode_boundary(episode_, dim_);

    // Fit on the previous episode's samples, then freeze its Gram.
    frozen_usable_ = false;
    if (!episode_log_.empty() && episode_log_.design_gram().min_eigenvalue() > 1e-12) {
        const MleReport report = mle_fit(episode_log_, theta_);
        ++mle_fits_;
        if (report.converged)
            theta_ = report.theta_hat;
        else
            raise_flag("mle_not_converged");
        frozen_usable_ = true;
    } else {
        raise_flag("singular_episode_design");
    }
    frozen_ = live_;
    if (frozen_.min_eigenvalue() <= 1e-12) frozen_usable_ = false;
    live_.reset();
    episode_log_ = SampleLog{};

    const auto tau = static_cast<double>(tau_k_);
    alpha_k_ = radius_dbl(tau, num_items_, config_.confidence.kappa);
    // The practical width swaps the normality constant 5/kappa for the
    // 1/(2 kappa) self-normalized-bound constant the per-round-MLE policy
    // uses, a factor-10 reduction.
    if (!config_.formal_constants) alpha_k_ *= 0.1;
    q_formal_ = dbl_sampling_budget(tau, num_items_, config_.capacity, dim_,
                                    config_.confidence.sigma0, config_.confidence.kappa);
    const double sigma0 = config_.confidence.sigma0;
    if (config_.formal_constants) {
        q_effective_ = q_formal_;
        eigen_threshold_ = config_.capacity * q_formal_ * sigma0 / 2.0;
    } else {
        // Practical budget: the eigenvalue threshold only needs to grow
        // logarithmically with the episode horizon, and the random tail just
        // long enough to reach it.
        eigen_threshold_ = std::max(2.0 * dim_, 4.0 * std::log(tau));
        const double episode_len = static_cast<double>(tau_k_ - tau_prev_);
        q_effective_ = std::min(
            std::ceil(2.0 * eigen_threshold_ / (config_.capacity * sigma0)), episode_len);
    }
}

Assortment DblMnlPolicy::do_step(const ContextSlate& slate) {
    if (round_ == tau_k_) start_episode();
    const long long t = round_ + 1;

    if (episode_ == 1)  // initialization rounds 1..d
        return random_full_assortment(rng_, num_items_, config_.capacity);

    if (!frozen_usable_) {
        raise_flag("episode_random_fallback");
        return random_full_assortment(rng_, num_items_, config_.capacity);
    }

    if (tau_k_ - t <= q_effective_ && live_.min_eigenvalue() <= eigen_threshold_) {
        raise_flag("random_tail");
        return random_full_assortment(rng_, num_items_, config_.capacity);
    }

    const double alpha = config_.forced_alpha.value_or(alpha_k_);
    const OptimisticUtilities z = optimistic_utilities(slate, theta_, frozen_, alpha);
    return argmax_assortment(z.z, slate.revenues, config_.capacity);
}

void DblMnlPolicy::do_update(const ContextSlate& slate, const Assortment& assortment,
                             const ChoiceOutcome& outcome) {
    ++round_;
    live_.add_slate(slate, assortment);
    episode_log_.append({slate, assortment, outcome});
}

// ---------------------------------------------------------------------------
// supCB-MNL
// ---------------------------------------------------------------------------

SupCbMnlPolicy::SupCbMnlPolicy(int num_items, int dim, const PolicyConfig& config)
    : config_(config),
      num_items_(num_items),
      dim_(dim),
      init_rounds_(config.init_rounds.value_or(default_init_rounds(
          config.horizon, dim, config.capacity, config.confidence.sigma0))),
      num_levels_(static_cast<int>(std::floor(0.5 * std::log2(config.horizon)))),
      alpha_(config.forced_alpha.value_or(radius_sup(
          static_cast<double>(config.horizon), num_items, config.confidence.kappa))),
      base_gram_(dim),
      rng_(Rng::derive(config.rng_seed, "policy")) {
    config_.confidence.validate();
    if (num_levels_ < 1)
        throw ConfigError("SUPCB_MNL: horizon too short for at least one level");

    // Enumerate the full candidate family, guarded.
    const int k_max = std::min(config.capacity, num_items);
    double count = 0.0;
    {
        double c = 1.0;
        for (int k = 1; k <= k_max; ++k) {
            c *= static_cast<double>(num_items - k + 1) / k;
            count += c;
        }
    }
    if (count > 1e5)
        throw GuardExceededError("SUPCB_MNL: candidate family C(N, <=K) > 1e5");

    for (int k = 1; k <= k_max; ++k) {
        std::vector<int> comb(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
        for (;;) {
            family_.push_back(comb);
            int i = k - 1;
            while (i >= 0 && comb[static_cast<std::size_t>(i)] == num_items - k + i) --i;
            if (i < 0) break;
            ++comb[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < k; ++j)
                comb[static_cast<std::size_t>(j)] =
                    comb[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
}

std::string SupCbMnlPolicy::episode_or_level() const {
    return last_recorded_level_ < 0 ? std::string{}
                                    : std::to_string(last_recorded_level_);
}

std::vector<int> SupCbMnlPolicy::psi_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(num_levels_) + 1, 0);
    sizes[0] = psi0_count_;
    for (int l = 1; l <= num_levels_ && levels_ready_; ++l)
        sizes[static_cast<std::size_t>(l)] = levels_[static_cast<std::size_t>(l)].psi_count;
    return sizes;
}

void SupCbMnlPolicy::ensure_levels_initialized() {
    if (levels_ready_) return;
    levels_.reserve(static_cast<std::size_t>(num_levels_) + 1);
    for (int l = 0; l <= num_levels_; ++l) {
        Level level(dim_);
        level.log = base_log_;
        level.gram = base_gram_;
        levels_.push_back(std::move(level));
    }
    levels_ready_ = true;
}

void SupCbMnlPolicy::refit_level(Level& level) {
    if (level.theta_fresh) return;
    if (level.theta.size() == 0) level.theta = MnlParameter::Zero(dim_);
    const MleReport report = mle_fit(level.log, level.theta);
    if (report.converged)
        level.theta = report.theta_hat;
    else
        raise_flag("mle_not_converged");
    level.theta_fresh = true;
}

Assortment SupCbMnlPolicy::do_step(const ContextSlate& slate) {
    const int t = round_ + 1;
    if (t <= init_rounds_) {
        pending_level_ = -1;
        return random_full_assortment(rng_, num_items_, config_.capacity);
    }
    ensure_levels_initialized();

    last_chain_sizes_.clear();
    last_argmax_retained_ = true;

    std::vector<int> active(family_.size());
    for (std::size_t a = 0; a < family_.size(); ++a) active[a] = static_cast<int>(a);

    const double exploit_threshold = 1.0 / std::sqrt(static_cast<double>(config_.horizon));

    for (int l = 1; l <= num_levels_ + 1; ++l) {
        const bool exhausted = l > num_levels_;
        Level& level = levels_[static_cast<std::size_t>(exhausted ? num_levels_ : l)];
        refit_level(level);
        last_chain_sizes_.push_back(static_cast<int>(active.size()));

        const Vector utilities = slate.features * level.theta;

        // widths over the items appearing in the active family
        std::vector<double> width(static_cast<std::size_t>(num_items_), -1.0);
        double max_width = 0.0;
        for (int a : active) {
            for (int i : family_[static_cast<std::size_t>(a)]) {
                auto& w = width[static_cast<std::size_t>(i)];
                if (w < 0.0) {
                    w = alpha_ * level.gram.weighted_norm(slate.features.row(i).transpose());
                    max_width = std::max(max_width, w);
                }
            }
        }
        const double spread = 2.0 * max_width;

        if (spread <= exploit_threshold || exhausted) {
            if (exhausted) raise_flag("level_exhausted");
            int best = active.front();
            double best_rev = -std::numeric_limits<double>::infinity();
            for (int a : active) {
                const double rev = revenue_from_utilities(
                    utilities, slate.revenues, Assortment{family_[static_cast<std::size_t>(a)]});
                if (rev > best_rev) {
                    best = a;
                    best_rev = rev;
                }
            }
            pending_level_ = 0;
            return Assortment{family_[static_cast<std::size_t>(best)]};
        }

        if (spread > std::pow(2.0, -l)) {
            int best = active.front();
            double best_sum = -std::numeric_limits<double>::infinity();
            for (int a : active) {
                double sum = 0.0;
                for (int i : family_[static_cast<std::size_t>(a)])
                    sum += width[static_cast<std::size_t>(i)];
                if (sum > best_sum) {
                    best = a;
                    best_sum = sum;
                }
            }
            pending_level_ = l;
            return Assortment{family_[static_cast<std::size_t>(best)]};
        }

        // Prune clearly sub-optimal candidates and descend a level.
        int argmax = active.front();
        double best_rev = -std::numeric_limits<double>::infinity();
        std::vector<double> revs(active.size());
        for (std::size_t j = 0; j < active.size(); ++j) {
            revs[j] = revenue_from_utilities(
                utilities, slate.revenues,
                Assortment{family_[static_cast<std::size_t>(active[j])]});
            if (revs[j] > best_rev) {
                best_rev = revs[j];
                argmax = active[j];
            }
        }
        std::vector<int> pruned;
        for (std::size_t j = 0; j < active.size(); ++j)
            if (revs[j] >= best_rev - 2.0 * std::pow(2.0, -l)) pruned.push_back(active[j]);
        if (std::find(pruned.begin(), pruned.end(), argmax) == pruned.end())
            last_argmax_retained_ = false;
        active = std::move(pruned);
    }
    throw Error("SUPCB_MNL: unreachable level loop exit");
}

void SupCbMnlPolicy::do_update(const ContextSlate& slate, const Assortment& assortment,
                               const ChoiceOutcome& outcome) {
    ++round_;
    if (pending_level_ < 0) {  // initialization sample, shared by every level
        base_log_.append({slate, assortment, outcome});
        base_gram_.add_slate(slate, assortment);
        last_recorded_level_ = -1;
        return;
    }
    last_recorded_level_ = pending_level_;
    if (pending_level_ == 0) {
        ++psi0_count_;
        return;
    }
    Level& level = levels_[static_cast<std::size_t>(pending_level_)];
    level.log.append({slate, assortment, outcome});
    level.gram.add_slate(slate, assortment);
    ++level.psi_count;
    level.theta_fresh = false;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, int num_items, int dim) {
    if (config.horizon < 1) throw ConfigError("policy: horizon T must be >= 1");
    if (config.capacity < 1) throw ConfigError("policy: capacity K must be >= 1");
    if (config.init_rounds && (*config.init_rounds < 1 || *config.init_rounds > config.horizon))
        throw ConfigError("policy: T0 override must lie in [1, T]");
    config.confidence.validate();

    switch (config.algorithm) {
        case Algorithm::UCB_MNL:
            return std::make_unique<UcbMnlPolicy>(num_items, dim, config);
        case Algorithm::UCB_MNL_ONS:
            return std::make_unique<OnsMnlPolicy>(num_items, dim, config);
        case Algorithm::DBL_MNL:
            return std::make_unique<DblMnlPolicy>(num_items, dim, config);
        case Algorithm::SUPCB_MNL:
            return std::make_unique<SupCbMnlPolicy>(num_items, dim, config);
    }
    throw ConfigError("policy: unknown algorithm tag");
}

}  // namespace mnlb
