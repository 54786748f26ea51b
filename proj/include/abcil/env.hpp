#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace abcil {

// process-wide interaction counters; training code must leave these untouched
struct EnvCounters {
    long steps = 0;
    long resets = 0;
};

inline EnvCounters& env_counters() {
    static EnvCounters c;
    return c;
}

struct StepResult {
    std::vector<double> next_state;
    double reward = 0.0;
    bool done = false;
};

inline double clamp(double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

// ---- bandit ----

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// R(a) = sigmoid(4 - (5(a-1))^2) + sigmoid(4 - (5(a+1))^2), two bumps at +-1
inline double bandit_reward(double a) {
    const double mr = 4.0 - 25.0 * (a - 1.0) * (a - 1.0);
    const double ml = 4.0 - 25.0 * (a + 1.0) * (a + 1.0);
    return sigmoid(mr) + sigmoid(ml);
}

// single-step environment, the state is the constant scalar 0
struct BanditEnv {
    static constexpr double action_low = -2.0;
    static constexpr double action_high = 2.0;

    bool done = true;

    static int state_dim() { return 1; }
    static int action_dim() { return 1; }
    static double action_bound() { return action_high; }

    std::vector<double> reset(Rng&) {
        env_counters().resets += 1;
        done = false;
        return {0.0};
    }

    StepResult step(const std::vector<double>& action) {
        if (done) throw std::runtime_error("bandit: step on finished episode");
        env_counters().steps += 1;
        done = true;
        const double a = clamp(action.at(0), action_low, action_high);
        return {{0.0}, bandit_reward(a), true};
    }
};

// ---- 2d navigation ----

struct Nav2dEnv {
    static constexpr double dt = 0.01;
    static constexpr int max_steps = 1000;
    static constexpr double start_lo = 0.00, start_hi = 0.10;
    static constexpr double target_tl[2] = {0.05, 0.95};
    static constexpr double target_br[2] = {0.95, 0.05};
    static constexpr double kill_lo = 0.40, kill_hi = 0.60;
    static constexpr double reward_sigma = 0.10;

    double position[2] = {0.0, 0.0};
    double prev_action[2] = {0.0, 0.0}; // last executed (clamped) action
    int step_index = 0;
    bool done = true;

    static int state_dim() { return 2; }
    static int action_dim() { return 2; }
    static double action_bound() { return 1.0; }

    static bool in_kill(double x, double y) {
        return x >= kill_lo && x <= kill_hi && y >= kill_lo && y <= kill_hi;
    }

    std::vector<double> observation() const { return {position[0], position[1]}; }

    std::vector<double> reset(Rng& rng) {
        env_counters().resets += 1;
        position[0] = rng.uniform(start_lo, start_hi);
        position[1] = rng.uniform(start_lo, start_hi);
        prev_action[0] = prev_action[1] = 0.0;
        step_index = 0;
        done = false;
        return observation();
    }

    StepResult step(const std::vector<double>& action) {
        if (done) throw std::runtime_error("nav2d: step on finished episode");
        env_counters().steps += 1;
        const double ax = clamp(action.at(0), -1.0, 1.0);
        const double ay = clamp(action.at(1), -1.0, 1.0);
        position[0] = clamp(position[0] + dt * ax, 0.0, 1.0);
        position[1] = clamp(position[1] + dt * ay, 0.0, 1.0);
        prev_action[0] = ax;
        prev_action[1] = ay;
        step_index += 1;

        StepResult res;
        if (in_kill(position[0], position[1])) {
            res.reward = 0.0;
            res.done = true;
        } else {
            res.reward = nav_reward(position[0], position[1]);
            res.done = step_index >= max_steps;
        }
        done = res.done;
        res.next_state = observation();
        return res;
    }

    static double nav_reward(double x, double y) {
        const double s2 = 2.0 * reward_sigma * reward_sigma;
        const double d_tl = (x - target_tl[0]) * (x - target_tl[0]) + (y - target_tl[1]) * (y - target_tl[1]);
        const double d_br = (x - target_br[0]) * (x - target_br[0]) + (y - target_br[1]) * (y - target_br[1]);
        return std::exp(-d_tl / s2) + std::exp(-d_br / s2);
    }
};

inline double nav_reward(double x, double y) { return Nav2dEnv::nav_reward(x, y); }

} // namespace abcil
