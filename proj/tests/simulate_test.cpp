#include <bit>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "doctest.h"

#include "bpve/errors.hpp"
#include "bpve/simulate.hpp"
#include "bpve/survival.hpp"

using namespace bpve;

TEST_CASE("replicate seeds never collide and look balanced")
{
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(2'000'000);
    std::uint64_t ones = 0;
    constexpr std::uint64_t count = 1'000'000;
    for (std::uint64_t i = 0; i < count; ++i)
    {
        auto const s = derive_replicate_seed(42, i);
        REQUIRE(seen.insert(s).second);
        ones += static_cast<std::uint64_t>(std::popcount(s));
    }
    double const bits = 64.0 * count;
    CHECK(std::abs(ones - bits / 2) <= 4 * std::sqrt(bits / 4));
    CHECK(derive_replicate_seed(1, 0) != derive_replicate_seed(2, 0));
}

TEST_CASE("retention sequences")
{
    auto const seq = RetentionSequence::constant(0.5, 3);
    CHECK(seq.span() == 3);
    CHECK(seq.at(1) == 0.5);
    CHECK_THROWS_AS(seq.at(0), OutOfRange);
    CHECK_THROWS_AS(seq.at(4), OutOfRange);
    CHECK_THROWS_AS(RetentionSequence::list({0.5, 1.5}), ConfigError);

    std::vector<BigInt> L = {2, 10};
    auto const s = build_schedule_from_thresholds(2.0, L);
    auto const from = RetentionSequence::from_schedule(s, 10);
    CHECK(from.at(3) == 1.0);
    CHECK(from.at(4) == 0.5);
    CHECK_THROWS_AS(RetentionSequence::from_schedule(s, 100), OutOfRange);
}

TEST_CASE("monte carlo agrees with the exact survival")
{
    auto const f = OffspringLaw::finite({0, 0, 1});
    auto const seq = RetentionSequence::constant(0.6, 30);
    McConfig config;
    config.replicates = 20'000;
    config.master_seed = 2024;
    config.generation_horizon = 30;
    auto const summary = simulate_bpve(f, seq, config);
    double const exact = bpve_survival_exact(f, seq.values()).value;
    double const sigma = std::sqrt(exact * (1 - exact) / config.replicates);
    CHECK(std::abs(summary.frequency - exact) <= 4 * sigma);
    CHECK(summary.ci95_low <= summary.frequency);
    CHECK(summary.ci95_high >= summary.frequency);
    CHECK(summary.truncated == 0);
}

TEST_CASE("percolation agrees with the population simulation")
{
    auto const f = OffspringLaw::power_tail(0.5, 1.5);
    auto const seq = RetentionSequence::constant(0.8, 15);
    McConfig config;
    config.replicates = 20'000;
    config.master_seed = 5;
    config.generation_horizon = 15;
    auto const pop = simulate_bpve(f, seq, config);
    config.master_seed = 6;
    auto const tree = simulate_percolation(f, seq, 15, config);
    double const pooled = double(pop.survivals + tree.survivals) / (2.0 * config.replicates);
    double const se = std::sqrt(pooled * (1 - pooled) * 2.0 / config.replicates);
    CHECK(std::abs(pop.frequency - tree.frequency) <= 4 * se);
}

TEST_CASE("worker count does not change results")
{
    auto const f = OffspringLaw::geometric(1.2);
    auto const seq = RetentionSequence::constant(0.9, 20);
    McConfig config;
    config.replicates = 5'000;
    config.master_seed = 77;
    config.generation_horizon = 20;
    config.record_trajectories = true;
    auto const one = simulate_bpve(f, seq, config);
    config.workers = 3;
    auto const three = simulate_bpve(f, seq, config);
    CHECK(one == three);
    CHECK(one.trajectories.size() == 5'000);
    CHECK(one.trajectories[0].front() == 1);
}

TEST_CASE("edge cases")
{
    auto const f = OffspringLaw::finite({0, 0, 1});
    McConfig config;
    config.replicates = 100;
    config.generation_horizon = 5;

    auto const dead = simulate_bpve(f, RetentionSequence::list({1, 1, 0, 1, 1}), config);
    CHECK(dead.survivals == 0);

    auto const sure = simulate_bpve(f, RetentionSequence::constant(1.0, 5), config);
    CHECK(sure.survivals == 100);
    CHECK(simulate_percolation(f, RetentionSequence::constant(1.0, 5), 5, config).survivals == 100);

    config.population_cap = 3;
    auto const capped = simulate_bpve(f, RetentionSequence::constant(1.0, 5), config);
    CHECK(capped.truncated == 100);
    CHECK(capped.survivals == 100);

    config.replicates = 0;
    CHECK_THROWS_AS(simulate_bpve(f, RetentionSequence::constant(1.0, 5), config), ConfigError);
    config.replicates = 1;
    config.generation_horizon = 6;
    CHECK_THROWS_AS(simulate_bpve(f, RetentionSequence::constant(1.0, 5), config), ConfigError);
}

TEST_CASE("summary serialization")
{
    auto const f = OffspringLaw::finite({0.5, 0, 0.5});
    McConfig config;
    config.replicates = 10;
    config.generation_horizon = 2;
    config.record_trajectories = true;
    auto const s = simulate_bpve(f, RetentionSequence::constant(1.0, 2), config);
    auto const j = to_json(s);
    CHECK(j["replicates"] == 10);
    CHECK(j["ci95"].size() == 2);
    std::ostringstream csv;
    write_trajectories_csv(csv, s);
    CHECK(csv.str().rfind("replicate,n,Z_n\n0,0,1\n", 0) == 0);
}
