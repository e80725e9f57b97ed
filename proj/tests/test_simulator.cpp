#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mnlb/errors.hpp"
#include "mnlb/model.hpp"
#include "mnlb/policies.hpp"
#include "mnlb/simulator.hpp"

using namespace mnlb;

namespace {

EnvironmentConfig make_config(std::uint64_t base_seed, int n = 10, int k = 2, int d = 3,
                              int t = 200, ContextDist dist = ContextDist::GAUSSIAN) {
    EnvironmentConfig proto;
    proto.N = n;
    proto.K = k;
    proto.d = d;
    proto.T = t;
    proto.context_dist = dist;
    return EnvironmentConfig::from_base_seed(proto, base_seed, 0);
}

// Clairvoyant policy: plays the offline-optimal assortment every round.
class OraclePolicy : public Policy {
public:
    OraclePolicy(MnlParameter theta_star, int capacity)
        : theta_star_(std::move(theta_star)), capacity_(capacity) {}
    const char* name() const override { return "ORACLE"; }

protected:
    Assortment do_step(const ContextSlate& slate) override {
        return oracle_assortment(slate, theta_star_, capacity_);
    }
    void do_update(const ContextSlate&, const Assortment&, const ChoiceOutcome&) override {}

private:
    MnlParameter theta_star_;
    int capacity_;
};

// Uniformly random assortment of full capacity every round.
class RandomPolicy : public Policy {
public:
    RandomPolicy(std::uint64_t seed, int num_items, int capacity)
        : rng_(seed), num_items_(num_items), capacity_(capacity) {}
    const char* name() const override { return "RANDOM"; }

protected:
    Assortment do_step(const ContextSlate&) override {
        return Assortment{rng_.sample_without_replacement(num_items_, capacity_)};
    }
    void do_update(const ContextSlate&, const Assortment&, const ChoiceOutcome&) override {}

private:
    Rng rng_;
    int num_items_;
    int capacity_;
};

}  // namespace

TEST_CASE("enum names round-trip") {
    CHECK(context_dist_from_name(context_dist_name(ContextDist::GAUSSIAN)) ==
          ContextDist::GAUSSIAN);
    CHECK(context_dist_from_name(context_dist_name(ContextDist::SPHERE)) ==
          ContextDist::SPHERE);
    CHECK(revenue_mode_from_name(revenue_mode_name(RevenueMode::UNIFORM)) ==
          RevenueMode::UNIFORM);
    CHECK(revenue_mode_from_name(revenue_mode_name(RevenueMode::RANDOM_POSITIVE)) ==
          RevenueMode::RANDOM_POSITIVE);
    CHECK_THROWS_AS(context_dist_from_name("CAUCHY"), ConfigError);
    CHECK_THROWS_AS(revenue_mode_from_name("NEGATIVE"), ConfigError);
}

TEST_CASE("config validation rejects bad dimensions") {
    EnvironmentConfig cfg = make_config(1);
    CHECK_NOTHROW(cfg.validate());
    EnvironmentConfig bad = cfg;
    bad.K = bad.N + 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.d = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.T = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sub-seed derivation is deterministic and replication-sensitive") {
    EnvironmentConfig proto;
    proto.N = 5;
    proto.K = 2;
    proto.d = 3;
    proto.T = 10;
    const EnvironmentConfig a = EnvironmentConfig::from_base_seed(proto, 42, 0);
    const EnvironmentConfig b = EnvironmentConfig::from_base_seed(proto, 42, 0);
    const EnvironmentConfig c = EnvironmentConfig::from_base_seed(proto, 42, 1);
    CHECK(a.theta_star_seed == b.theta_star_seed);
    CHECK(a.context_seed == b.context_seed);
    CHECK(a.choice_seed == b.choice_seed);
    CHECK(a.policy_seed == b.policy_seed);
    CHECK(a.theta_star_seed != c.theta_star_seed);
    CHECK(a.context_seed != c.context_seed);
    // the four streams differ from each other
    CHECK(a.theta_star_seed != a.context_seed);
    CHECK(a.context_seed != a.choice_seed);
    CHECK(a.choice_seed != a.policy_seed);
}

TEST_CASE("theta_star lies in the unit cube and is seed-stable") {
    const EnvironmentConfig cfg = make_config(7, 10, 2, 6);
    Environment env_a(cfg), env_b(cfg);
    REQUIRE(env_a.theta_star().size() == 6);
    for (int i = 0; i < 6; ++i) {
        CHECK(env_a.theta_star()[i] >= 0.0);
        CHECK(env_a.theta_star()[i] <= 1.0);
    }
    CHECK(env_a.theta_star() == env_b.theta_star());

    EnvironmentConfig other = cfg;
    other.theta_star_seed += 1;
    Environment env_c(other);
    CHECK(env_a.theta_star() != env_c.theta_star());
}

TEST_CASE("sphere contexts have unit norm rows") {
    const EnvironmentConfig cfg = make_config(8, 12, 3, 4, 50, ContextDist::SPHERE);
    Environment env(cfg);
    for (int t = 1; t <= 50; ++t) {
        const ContextSlate slate = env.next_slate(t);
        REQUIRE(slate.features.rows() == 12);
        REQUIRE(slate.features.cols() == 4);
        for (int i = 0; i < 12; ++i)
            CHECK(slate.features.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("gaussian contexts respect the unit-ball constraint") {
    const EnvironmentConfig cfg = make_config(9, 12, 3, 4, 100, ContextDist::GAUSSIAN);
    Environment env(cfg);
    int strictly_inside = 0;
    int on_boundary = 0;
    for (int t = 1; t <= 100; ++t) {
        const ContextSlate slate = env.next_slate(t);
        CHECK_NOTHROW(slate.validate());
        for (int i = 0; i < 12; ++i) {
            const double norm = slate.features.row(i).norm();
            CHECK(norm <= 1.0 + 1e-12);
            if (norm < 1.0 - 1e-9)
                ++strictly_inside;
            else
                ++on_boundary;
        }
    }
    // scaled draws land both inside and on the clip boundary
    CHECK(strictly_inside > 0);
    CHECK(on_boundary > 0);
}

TEST_CASE("revenue modes") {
    const EnvironmentConfig uniform_cfg = make_config(10);
    Environment uniform_env(uniform_cfg);
    const ContextSlate s1 = uniform_env.next_slate(1);
    for (int i = 0; i < s1.revenues.size(); ++i) CHECK(s1.revenues[i] == 1.0);

    EnvironmentConfig random_cfg = make_config(10);
    random_cfg.revenue_mode = RevenueMode::RANDOM_POSITIVE;
    Environment random_env(random_cfg);
    bool any_below_one = false;
    for (int t = 1; t <= 20; ++t) {
        const ContextSlate s = random_env.next_slate(t);
        for (int i = 0; i < s.revenues.size(); ++i) {
            CHECK(s.revenues[i] > 0.0);
            CHECK(s.revenues[i] <= 1.0);
            if (s.revenues[i] < 1.0) any_below_one = true;
        }
    }
    CHECK(any_below_one);
}

TEST_CASE("sigma0 for sphere contexts is 1/d") {
    for (int d : {2, 3, 5, 8}) {
        const EnvironmentConfig cfg = make_config(11, 10, 2, d, 10, ContextDist::SPHERE);
        Environment env(cfg);
        CHECK(env.sigma0() == doctest::Approx(1.0 / d).epsilon(1e-12));
    }
}

TEST_CASE("sigma0 for gaussian contexts is positive and stable") {
    const EnvironmentConfig cfg = make_config(12, 10, 2, 5);
    Environment env_a(cfg), env_b(cfg);
    CHECK(env_a.sigma0() > 0.0);
    CHECK(env_a.sigma0() < 1.0);
    CHECK(env_a.sigma0() == env_b.sigma0());
}

TEST_CASE("choice stream is uniform01 and seed-stable") {
    const EnvironmentConfig cfg = make_config(13);
    Environment env_a(cfg), env_b(cfg);
    for (int i = 0; i < 1000; ++i) {
        const double u = env_a.next_choice_u();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == env_b.next_choice_u());
    }
}

TEST_CASE("clairvoyant policy accrues zero regret") {
    const EnvironmentConfig cfg = make_config(14, 10, 3, 4, 300);
    Environment env(cfg);
    OraclePolicy policy(env.theta_star(), cfg.K);
    const RegretTrace trace = run_one(env, policy, 300, 0);
    REQUIRE(trace.rows.size() == 300);
    for (const TraceRow& row : trace.rows) CHECK(row.inst_regret <= 1e-12);
    CHECK(trace.final_cum_regret <= 1e-9);
}

TEST_CASE("random policy accrues positive regret") {
    const EnvironmentConfig cfg = make_config(15, 20, 3, 4, 300);
    Environment env(cfg);
    RandomPolicy policy(cfg.policy_seed, cfg.N, cfg.K);
    const RegretTrace trace = run_one(env, policy, 300, 0);
    CHECK(trace.final_cum_regret > 1.0);
    // instantaneous regret is never negative: the oracle is optimal
    for (const TraceRow& row : trace.rows) CHECK(row.inst_regret >= -1e-12);
}

TEST_CASE("trace bookkeeping: prefix sums, rounds, monotone time") {
    const EnvironmentConfig cfg = make_config(16, 10, 2, 3, 120);
    Environment env(cfg);
    RandomPolicy policy(cfg.policy_seed, cfg.N, cfg.K);
    const RegretTrace trace = run_one(env, policy, 120, 3);
    CHECK(trace.replication == 3);
    CHECK(trace.sigma0 == doctest::Approx(Environment(cfg).sigma0()));
    REQUIRE(trace.rows.size() == 120);
    double prefix = 0.0;
    std::uint64_t last_ns = 0;
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        const TraceRow& row = trace.rows[i];
        CHECK(row.t == static_cast<int>(i) + 1);
        prefix += row.inst_regret;
        CHECK(row.cum_regret == doctest::Approx(prefix).epsilon(1e-12));
        CHECK(row.cum_wall_ns >= last_ns);
        last_ns = row.cum_wall_ns;
    }
    CHECK(trace.final_cum_regret == doctest::Approx(prefix).epsilon(1e-12));
    CHECK(trace.total_wall_ns >= last_ns);
}

TEST_CASE("trace_every keeps rounds with (t-1) mod n == 0") {
    const EnvironmentConfig cfg = make_config(17, 10, 2, 3, 100);
    Environment env(cfg);
    RandomPolicy policy(cfg.policy_seed, cfg.N, cfg.K);
    const RegretTrace trace = run_one(env, policy, 100, 0, 7);
    REQUIRE(trace.rows.size() == 16);  // t = 1, 8, ..., 99 plus the final round
    for (std::size_t i = 0; i + 1 < trace.rows.size(); ++i)
        CHECK(trace.rows[i].t == static_cast<int>(i) * 7 + 1);
    CHECK(trace.rows.back().t == 100);
    // cumulative regret at a kept round still reflects every round so far
    Environment env2(cfg);
    RandomPolicy policy2(cfg.policy_seed, cfg.N, cfg.K);
    const RegretTrace dense = run_one(env2, policy2, 100, 0, 1);
    CHECK(trace.rows[14].cum_regret ==
          doctest::Approx(dense.rows[98].cum_regret).epsilon(1e-12));
    CHECK(trace.rows.back().cum_regret ==
          doctest::Approx(dense.final_cum_regret).epsilon(1e-12));
    CHECK(trace.final_cum_regret ==
          doctest::Approx(dense.final_cum_regret).epsilon(1e-12));
}

TEST_CASE("replications are deterministic and thread-count invariant") {
    EnvironmentConfig proto;
    proto.N = 10;
    proto.K = 2;
    proto.d = 3;
    proto.T = 60;
    PolicyConfig policy_proto;
    policy_proto.algorithm = Algorithm::UCB_MNL;
    policy_proto.horizon = 60;
    policy_proto.capacity = 2;

    const auto [traces_a, summary_a] = run_replications(proto, policy_proto, 99, 4, 1, 1);
    const auto [traces_b, summary_b] = run_replications(proto, policy_proto, 99, 4, 1, 2);
    REQUIRE(traces_a.size() == 4);
    REQUIRE(traces_b.size() == 4);
    for (std::size_t r = 0; r < traces_a.size(); ++r) {
        CHECK(traces_a[r].replication == static_cast<int>(r));
        CHECK(traces_a[r].final_cum_regret == traces_b[r].final_cum_regret);
        REQUIRE(traces_a[r].rows.size() == traces_b[r].rows.size());
        for (std::size_t i = 0; i < traces_a[r].rows.size(); ++i)
            CHECK(traces_a[r].rows[i].inst_regret == traces_b[r].rows[i].inst_regret);
    }
    CHECK(summary_a.mean_final_regret == summary_b.mean_final_regret);
    CHECK(summary_a.std_final_regret == summary_b.std_final_regret);

    // replications differ from each other
    CHECK(traces_a[0].final_cum_regret != traces_a[1].final_cum_regret);
}

TEST_CASE("summary aggregates known values") {
    RegretTrace a, b;
    a.algorithm = b.algorithm = "UCB_MNL";
    a.final_cum_regret = 10.0;
    b.final_cum_regret = 20.0;
    a.total_wall_ns = 1'000'000'000ull;
    b.total_wall_ns = 3'000'000'000ull;
    const RunSummary s = summarize_traces("UCB_MNL", 100, {a, b});
    CHECK(s.algorithm == "UCB_MNL");
    CHECK(s.T == 100);
    CHECK(s.replications == 2);
    CHECK(s.mean_final_regret == doctest::Approx(15.0));
    CHECK(s.std_final_regret == doctest::Approx(std::sqrt(50.0)));
    CHECK(s.mean_runtime_s == doctest::Approx(2.0));

    const RunSummary single = summarize_traces("UCB_MNL", 100, {a});
    CHECK(single.std_final_regret == 0.0);
}
