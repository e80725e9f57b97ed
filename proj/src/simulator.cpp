#include "mnlb/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>

#include "mnlb/errors.hpp"
#include "mnlb/model.hpp"

namespace mnlb {

const char* context_dist_name(ContextDist d) {
    return d == ContextDist::GAUSSIAN ? "GAUSSIAN" : "SPHERE";
}

const char* revenue_mode_name(RevenueMode m) {
    return m == RevenueMode::UNIFORM ? "UNIFORM" : "RANDOM_POSITIVE";
}

ContextDist context_dist_from_name(const std::string& name) {
    if (name == "GAUSSIAN") return ContextDist::GAUSSIAN;
    if (name == "SPHERE") return ContextDist::SPHERE;
    throw ConfigError("unknown context distribution: " + name);
}

RevenueMode revenue_mode_from_name(const std::string& name) {
    if (name == "UNIFORM") return RevenueMode::UNIFORM;
    if (name == "RANDOM_POSITIVE") return RevenueMode::RANDOM_POSITIVE;
    throw ConfigError("unknown revenue mode: " + name);
}

void EnvironmentConfig::validate() const {
    if (N < 1 || K < 1 || d < 1 || T < 1)
        throw ConfigError("environment: N, K, d, T must be positive");
    if (K > N) throw ConfigError("environment: K must not exceed N");
}

EnvironmentConfig EnvironmentConfig::from_base_seed(EnvironmentConfig proto,
                                                    std::uint64_t base_seed,
                                                    std::uint64_t replication) {
    proto.theta_star_seed = Rng::derive(base_seed, "theta_star", replication).next_u64();
    proto.context_seed = Rng::derive(base_seed, "context", replication).next_u64();
    proto.choice_seed = Rng::derive(base_seed, "choice", replication).next_u64();
    proto.policy_seed = Rng::derive(base_seed, "policy", replication).next_u64();
    return proto;
}

namespace {

Vector draw_feature(Rng& rng, int d, ContextDist dist, bool normalize) {
    Vector x(d);
    for (int j = 0; j < d; ++j) x(j) = rng.normal();
    if (dist == ContextDist::SPHERE) {
        double norm = x.norm();
        while (norm <= 1e-300) {  // essentially impossible, but stay total
            for (int j = 0; j < d; ++j) x(j) = rng.normal();
            norm = x.norm();
        }
        return x / norm;
    }
    if (normalize) {
        const double norm = x.norm();
        if (norm > 1.0) x /= norm;
    }
    return x;
}

// sigma0 for the clipped Gaussian has no closed form; estimate the smallest
// eigenvalue of E[x x^T] once per (d, normalize) from 1e5 offline draws with
// a fixed seed, and memoize.
double estimated_gaussian_sigma0(int d, bool normalize) {
    static std::map<std::pair<int, bool>, double> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_pair(d, normalize);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    Rng rng = Rng::derive(0x5167a0e5u, "sigma0_estimate", static_cast<std::uint64_t>(d));
    const int draws = 100000;
    Matrix second_moment = Matrix::Zero(d, d);
    for (int i = 0; i < draws; ++i) {
        const Vector x = draw_feature(rng, d, ContextDist::GAUSSIAN, normalize);
        second_moment.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / draws);
    }
    second_moment.triangularView<Eigen::StrictlyUpper>() = second_moment.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(second_moment, Eigen::EigenvaluesOnly);
    const double sigma0 = eig.eigenvalues().minCoeff();
    cache[key] = sigma0;
    return sigma0;
}

}  // namespace

Environment::Environment(const EnvironmentConfig& config)
    : config_(config),
      context_rng_(config.context_seed),
      choice_rng_(config.choice_seed) {
    config_.validate();
    Rng theta_rng(config_.theta_star_seed);
    theta_star_ = Vector(config_.d);
    for (int j = 0; j < config_.d; ++j) theta_star_(j) = theta_rng.uniform01();
    if (config_.context_dist == ContextDist::SPHERE) {
        // E[x x^T] = I/d exactly for uniform unit vectors.
        sigma0_ = 1.0 / config_.d;
    } else if (config_.normalize_features) {
        sigma0_ = estimated_gaussian_sigma0(config_.d, true);
    } else {
        sigma0_ = 1.0;  // standard normal second moment is I
    }
}

ContextSlate Environment::next_slate(int t) {
    ContextSlate slate;
    slate.round = t;
    slate.features = Matrix(config_.N, config_.d);
    slate.revenues = Vector(config_.N);
    for (int i = 0; i < config_.N; ++i) {
        slate.features.row(i) = draw_feature(context_rng_, config_.d,
                                             config_.context_dist,
                                             config_.normalize_features)
                                    .transpose();
        if (config_.revenue_mode == RevenueMode::UNIFORM)
            slate.revenues(i) = 1.0;
        else
            slate.revenues(i) = 1.0 - context_rng_.uniform01();  // in (0, 1]
    }
    return slate;
}

double Environment::next_choice_u() { return choice_rng_.uniform01(); }

RegretTrace run_one(Environment& env, Policy& policy, int T, int replication,
                    int trace_every) {
    if (trace_every < 1) throw ConfigError("run_one: trace_every must be >= 1");
    using clock = std::chrono::steady_clock;

    RegretTrace trace;
    trace.algorithm = policy.name();
    trace.replication = replication;
    trace.sigma0 = env.sigma0();

    const int K = env.config().K;
    double cum_regret = 0.0;
    std::uint64_t cum_wall_ns = 0;

    for (int t = 1; t <= T; ++t) {
        const ContextSlate slate = env.next_slate(t);
        Assortment offered;
        ChoiceOutcome outcome;
        try {
            const auto t0 = clock::now();
            offered = policy.step(slate);
            const auto t1 = clock::now();
            cum_wall_ns += static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());

            const Assortment oracle = oracle_assortment(slate, env.theta_star(), K);
            const double inst_regret =
                expected_revenue(slate, oracle, env.theta_star()) -
                expected_revenue(slate, offered, env.theta_star());
            cum_regret += inst_regret;

            outcome = sample_choice(slate, offered, env.theta_star(), env.next_choice_u());

            const auto t2 = clock::now();
            policy.update(slate, offered, outcome);
            const auto t3 = clock::now();
            cum_wall_ns += static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(t3 - t2).count());

            // always keep the final round so the trace carries the run total
            if ((t - 1) % trace_every == 0 || t == T) {
                TraceRow row;
                row.t = t;
                row.episode_or_level = policy.episode_or_level();
                row.inst_regret = inst_regret;
                row.cum_regret = cum_regret;
                row.cum_wall_ns = cum_wall_ns;
                row.flags = policy.take_flags();
                trace.rows.push_back(std::move(row));
            } else {
                policy.take_flags();
            }
        } catch (const GuardExceededError& e) {
            throw GuardExceededError("round " + std::to_string(t) + ": " + e.what());
        } catch (const Error& e) {
            throw Error("round " + std::to_string(t) + ": " + e.what());
        }
    }
    trace.final_cum_regret = cum_regret;
    trace.total_wall_ns = cum_wall_ns;
    return trace;
}

RunSummary summarize_traces(const std::string& algorithm, int T,
                            const std::vector<RegretTrace>& traces) {
    if (traces.empty()) throw DomainError("summarize_traces: no traces");
    RunSummary s;
    s.algorithm = algorithm;
    s.T = T;
    s.replications = static_cast<int>(traces.size());

    double sum = 0.0, wall = 0.0;
    for (const auto& tr : traces) {
        sum += tr.final_cum_regret;
        wall += static_cast<double>(tr.total_wall_ns) * 1e-9;
    }
    s.mean_final_regret = sum / s.replications;
    s.mean_runtime_s = wall / s.replications;

    if (s.replications > 1) {
        double ss = 0.0;
        for (const auto& tr : traces) {
            const double dev = tr.final_cum_regret - s.mean_final_regret;
            ss += dev * dev;
        }
        s.std_final_regret = std::sqrt(ss / (s.replications - 1));
    }
    return s;
}

std::pair<std::vector<RegretTrace>, RunSummary> run_replications(
    const EnvironmentConfig& env_proto, const PolicyConfig& policy_proto,
    std::uint64_t base_seed, int replications, int trace_every, int threads) {
    if (replications < 1) throw ConfigError("run_replications: need >= 1 replication");
    if (threads < 1) threads = 1;
    threads = std::min(threads, replications);

    std::vector<RegretTrace> traces(static_cast<std::size_t>(replications));
    std::vector<std::string> failures(static_cast<std::size_t>(replications));
    std::vector<char> guard_failures(static_cast<std::size_t>(replications), 0);

    auto run_range = [&](int begin, int step) {
        for (int r = begin; r < replications; r += step) {
            try {
                EnvironmentConfig cfg = EnvironmentConfig::from_base_seed(
                    env_proto, base_seed, static_cast<std::uint64_t>(r));
                Environment env(cfg);
                PolicyConfig pcfg = policy_proto;
                pcfg.rng_seed = cfg.policy_seed;
                auto policy = make_policy(pcfg, cfg.N, cfg.d);
                traces[static_cast<std::size_t>(r)] =
                    run_one(env, *policy, cfg.T, r, trace_every);
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(r)] =
                    "replication " + std::to_string(r) + " (base seed " +
                    std::to_string(base_seed) + "): " + e.what();
                if (dynamic_cast<const GuardExceededError*>(&e))
                    guard_failures[static_cast<std::size_t>(r)] = 1;
            }
        }
    };

    if (threads == 1) {
        run_range(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int w = 0; w < threads; ++w) pool.emplace_back(run_range, w, threads);
        for (auto& th : pool) th.join();
    }

    for (std::size_t r = 0; r < failures.size(); ++r) {
        if (failures[r].empty()) continue;
        if (guard_failures[r]) throw GuardExceededError(failures[r]);
        throw Error(failures[r]);
    }

    RunSummary summary =
        summarize_traces(algorithm_name(policy_proto.algorithm), env_proto.T, traces);
    return {std::move(traces), std::move(summary)};
}

}  // namespace mnlb
