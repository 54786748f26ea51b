#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "abcil/bc.hpp"
#include "abcil/dataset.hpp"
#include "abcil/env.hpp"
#include "abcil/policy.hpp"
#include "abcil/rng.hpp"

using namespace abcil;

namespace {

// constant-state dataset with actions drawn around the given modes
Dataset constant_state_mixture(const std::vector<double>& modes,
                               const std::vector<int>& counts, double noise_std,
                               uint64_t seed) {
    Dataset d;
    d.state_dim = 1;
    d.action_dim = 1;
    Rng rng(seed);
    for (size_t m = 0; m < modes.size(); ++m) {
        for (int i = 0; i < counts[m]; ++i) {
            d.push({0.0}, {modes[m] + rng.normal(0.0, noise_std)});
        }
    }
    d.trajectory_boundaries.push_back(d.size());
    return d;
}

double sample_mean_action(const Dataset& d) {
    double s = 0.0;
    for (size_t i = 0; i < d.size(); ++i) s += d.action(i)[0];
    return s / static_cast<double>(d.size());
}

} // namespace

TEST_CASE("regression on a symmetric bimodal action set lands on the mean") {
    Dataset d = constant_state_mixture({-1.0, 1.0}, {600, 600}, 0.05, 42);
    BcConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 7;
    BcResult res = train_bc(d, cfg, 2.0);
    const double m = sample_mean_action(d);
    const double pred = res.policy.act({0.0})[0];
    REQUIRE(std::abs(pred - m) < 0.05);
    // the mean of the two modes scores essentially zero reward
    REQUIRE(bandit_reward(pred) < 0.01);
}

TEST_CASE("regression on a lopsided bimodal action set lands on the weighted mean") {
    Dataset d = constant_state_mixture({-1.0, 1.0}, {300, 900}, 0.05, 43);
    BcConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 8;
    BcResult res = train_bc(d, cfg, 2.0);
    const double m = sample_mean_action(d); // close to +0.5
    REQUIRE(std::abs(m - 0.5) < 0.05);
    const double pred = res.policy.act({0.0})[0];
    REQUIRE(std::abs(pred - m) < 0.05);
}

TEST_CASE("training loss decreases and reaches the noise floor on unimodal data") {
    Dataset d = constant_state_mixture({0.7}, {1200}, 0.05, 44);
    BcConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 9;
    BcResult res = train_bc(d, cfg, 2.0);
    REQUIRE(res.loss_history.size() == 200);
    REQUIRE(res.loss_history.front() > res.loss_history.back());
    REQUIRE(res.loss_history.back() < 0.01); // noise variance is 0.0025
    const double pred = res.policy.act({0.0})[0];
    REQUIRE(std::abs(pred - 0.7) < 0.05);
}

TEST_CASE("action scale lets the policy reach targets outside the raw tanh range") {
    Dataset d = constant_state_mixture({1.6}, {1200}, 0.02, 45);
    BcConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 10;
    BcResult res = train_bc(d, cfg, 2.0);
    const double pred = res.policy.act({0.0})[0];
    REQUIRE(std::abs(pred - 1.6) < 0.05);
    REQUIRE(std::abs(pred) <= 2.0);
}

TEST_CASE("same config and seed give a bit-identical policy") {
    Dataset d = constant_state_mixture({-1.0, 1.0}, {200, 200}, 0.1, 46);
    BcConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 11;
    BcResult a = train_bc(d, cfg, 2.0);
    BcResult b = train_bc(d, cfg, 2.0);
    REQUIRE(a.policy.net.serialize() == b.policy.net.serialize());
}

TEST_CASE("navigation regression fits the expert direction near the start") {
    Dataset d = generate_expert_nav(NavTarget::TopLeft, 4, 123, 0.05);
    BcConfig cfg;
    cfg.epochs = 60;
    cfg.seed = 12;
    BcResult res = train_bc(d, cfg, 1.0);
    REQUIRE(res.loss_history.front() > res.loss_history.back());
    std::vector<double> obs(d.state_dim, 0.05);
    for (int i = 2; i < d.state_dim; ++i) obs[i] = 0.0;
    std::vector<double> a = res.policy.act(obs);
    REQUIRE(a[1] > 0.5);              // mostly upward
    REQUIRE(a[1] > std::abs(a[0]));   // toward the top-left target
}

TEST_CASE("degenerate inputs are rejected") {
    Dataset empty;
    empty.state_dim = 1;
    empty.action_dim = 1;
    BcConfig cfg;
    REQUIRE_THROWS(train_bc(empty, cfg, 1.0));

    Dataset d = constant_state_mixture({0.0}, {10}, 0.01, 47);
    BcConfig bad;
    bad.epochs = 0;
    REQUIRE_THROWS(train_bc(d, bad, 1.0));
    bad = BcConfig{};
    bad.lr = -1.0;
    REQUIRE_THROWS(train_bc(d, bad, 1.0));
}
