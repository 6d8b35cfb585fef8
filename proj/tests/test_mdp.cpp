#include <doctest.h>

#include <vector>

#include "pamcts/cartpole.hpp"
#include "pamcts/mdp.hpp"
#include "test_models.hpp"

using namespace pamcts;

TEST_CASE("discounted_return") {
    const std::vector<double> ones{1, 1, 1};
    CHECK(discounted_return(ones, 1.0) == 3.0);
    CHECK(discounted_return(std::vector<double>{}, 0.999) == 0.0);
    CHECK(discounted_return(std::vector<double>{1, 1}, 0.5) == 1.5);
}

TEST_CASE("discounted_return with gamma 1 is the left-to-right sum") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> r(rng.uniform_index(50));
        double sum = 0.0;
        for (double& x : r) {
            x = rng.uniform(-10.0, 10.0);
            sum += x;
        }
        CHECK(discounted_return(r, 1.0) == sum);
    }
}

TEST_CASE("simulate_episode stops at the first terminal transition") {
    testmodels::AlwaysTerminal m;
    Rng rng(1);
    const auto ep = simulate_episode(m, [](const auto&) { return Action{1}; }, {}, 100, rng);
    CHECK(ep.steps == 1);
    CHECK(ep.total_return == 1.0);
}

TEST_CASE("simulate_episode stops at the step cap") {
    testmodels::Chain m;
    Rng rng(1);
    const auto ep = simulate_episode(m, [](const auto&) { return Action{0}; }, {}, 5, rng);
    CHECK(ep.steps == 5);
    CHECK(ep.total_return == 5.0);
    CHECK(ep.rewards.size() == 5);
}

TEST_CASE("simulate_episode rejects illegal actions and zero caps") {
    testmodels::Chain m;
    Rng rng(1);
    CHECK_THROWS_AS(simulate_episode(m, [](const auto&) { return Action{2}; }, {}, 5, rng),
                    InvalidAction);
    CHECK_THROWS_AS(simulate_episode(m, [](const auto&) { return Action{0}; }, {}, 0, rng),
                    ContractViolation);
}

TEST_CASE("simulate_episode is reproducible for a fixed seed") {
    const cartpole::Model model;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto run = [&] {
            Rng rng(seed);
            const auto s0 = model.initial_state(rng);
            Rng policy_rng(seed + 1000);
            return simulate_episode(
                model, [&](const cartpole::State&) { return Action{policy_rng.uniform_index(2)}; },
                s0, 2500, rng);
        };
        const auto a = run();
        const auto b = run();
        CHECK(a.rewards == b.rewards);
        CHECK(a.steps == b.steps);
    }
}

TEST_CASE("actions() enumerates indices in order") {
    const cartpole::Model model;
    const auto acts = actions(model, cartpole::State{});
    REQUIRE(acts.size() == 2);
    CHECK(acts[0] == cartpole::kPushLeft);
    CHECK(acts[1] == cartpole::kPushRight);
}

TEST_CASE("Rng draws are reproducible and in range") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform01();
        CHECK(u == b.uniform01());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const auto k = a.uniform_index(7);
        CHECK(k == b.uniform_index(7));
        CHECK(k < 7);
    }
    CHECK_THROWS(a.uniform_index(0));
}

TEST_CASE("SeedBuilder is order sensitive and stable") {
    const auto s1 = SeedBuilder(1).add("default").add(0.5).add(std::uint64_t{100}).finish();
    const auto s2 = SeedBuilder(1).add("default").add(0.5).add(std::uint64_t{100}).finish();
    const auto s3 = SeedBuilder(1).add(0.5).add("default").add(std::uint64_t{100}).finish();
    CHECK(s1 == s2);
    CHECK(s1 != s3);
    CHECK(SeedBuilder(1).add(0.0).finish() == SeedBuilder(1).add(-0.0).finish());
}
