#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "abcil/env.hpp"
#include "abcil/rng.hpp"

using namespace abcil;

TEST_CASE("bandit reward peaks near the two modes and dies at the mean") {
    REQUIRE(bandit_reward(1.0) >= 0.982);
    REQUIRE(bandit_reward(1.0) <= 0.9821);
    REQUIRE(bandit_reward(-1.0) == bandit_reward(1.0));
    REQUIRE(bandit_reward(0.0) < 1e-8);
    REQUIRE(bandit_reward(2.0) < 1e-6);
}

TEST_CASE("bandit reward is symmetric") {
    for (double a : {0.1, 0.5, 0.77, 1.3, 1.9})
        REQUIRE(bandit_reward(a) == Catch::Approx(bandit_reward(-a)).epsilon(1e-15));
}

TEST_CASE("bandit reward has exactly two local maxima on a fine grid") {
    const int n = 4001;
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) r[i] = bandit_reward(-2.0 + 4.0 * i / (n - 1));
    int maxima = 0;
    for (int i = 1; i + 1 < n; ++i)
        if (r[i] > r[i - 1] && r[i] > r[i + 1]) ++maxima;
    REQUIRE(maxima == 2);
}

TEST_CASE("bandit episodes are single-step and clamp the action") {
    BanditEnv env;
    Rng rng(0);
    const std::vector<double> s = env.reset(rng);
    REQUIRE(s == std::vector<double>{0.0});
    StepResult r = env.step({5.0});
    REQUIRE(r.done);
    REQUIRE(r.reward == Catch::Approx(bandit_reward(2.0)).epsilon(1e-15));
    REQUIRE_THROWS(env.step({0.0}));
}

TEST_CASE("nav step integrates, clamps and terminates in the kill square") {
    Nav2dEnv env;
    Rng rng(1);
    env.reset(rng);
    env.position[0] = 0.39;
    env.position[1] = 0.39;
    StepResult r = env.step({1.0, 1.0});
    REQUIRE(env.position[0] == Catch::Approx(0.40).epsilon(1e-12));
    REQUIRE(env.position[1] == Catch::Approx(0.40).epsilon(1e-12));
    REQUIRE(r.done);
    REQUIRE(r.reward == 0.0);
    REQUIRE_THROWS(env.step({0.0, 0.0}));
}

TEST_CASE("nav actions clamp to the unit box and positions stay in bounds") {
    Nav2dEnv env;
    Rng rng(2);
    env.reset(rng);
    env.position[0] = 0.0;
    env.position[1] = 0.0;
    StepResult r = env.step({-7.0, 3.0});
    REQUIRE(env.position[0] == 0.0);
    REQUIRE(env.position[1] == Catch::Approx(0.01).epsilon(1e-12));
    REQUIRE(env.prev_action[0] == -1.0);
    REQUIRE(env.prev_action[1] == 1.0);
    REQUIRE(r.next_state.size() == 2);
    REQUIRE(std::isfinite(r.reward));
}

TEST_CASE("nav episodes stop at the step budget") {
    Nav2dEnv env;
    Rng rng(3);
    env.reset(rng);
    int steps = 0;
    while (true) {
        StepResult r = env.step({0.0, -1.0});
        ++steps;
        if (r.done) break;
    }
    REQUIRE(steps == Nav2dEnv::max_steps);
}

TEST_CASE("nav reward is two gaussian bumps") {
    REQUIRE(nav_reward(0.05, 0.95) >= 1.0);
    REQUIRE(nav_reward(0.05, 0.95) == Catch::Approx(nav_reward(0.95, 0.05)).epsilon(1e-12));
    REQUIRE(nav_reward(0.5, 0.5) < 0.01);
    // one sigma away along y from the top-left bump
    const double one_sigma = nav_reward(0.05, 0.85);
    REQUIRE(one_sigma == Catch::Approx(std::exp(-0.5)).margin(1e-4));
}

TEST_CASE("reset starts in the corner box with cleared memory") {
    Nav2dEnv env;
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> obs = env.reset(rng);
        REQUIRE(obs.size() == 2);
        REQUIRE(obs[0] >= 0.0);
        REQUIRE(obs[0] <= 0.1);
        REQUIRE(obs[1] >= 0.0);
        REQUIRE(obs[1] <= 0.1);
        REQUIRE(env.prev_action[0] == 0.0);
        REQUIRE(env.prev_action[1] == 0.0);
    }
}

TEST_CASE("the kill square is closed") {
    REQUIRE(Nav2dEnv::in_kill(0.40, 0.40));
    REQUIRE(Nav2dEnv::in_kill(0.60, 0.60));
    REQUIRE(Nav2dEnv::in_kill(0.5, 0.5));
    REQUIRE_FALSE(Nav2dEnv::in_kill(0.39999, 0.5));
    REQUIRE_FALSE(Nav2dEnv::in_kill(0.5, 0.60001));
}

TEST_CASE("step and reset counters are instrumented") {
    EnvCounters& c = env_counters();
    const long steps0 = c.steps, resets0 = c.resets;
    Nav2dEnv env;
    Rng rng(5);
    env.reset(rng);
    env.step({0.1, 0.1});
    env.step({0.1, 0.1});
    REQUIRE(c.resets == resets0 + 1);
    REQUIRE(c.steps == steps0 + 2);
}
