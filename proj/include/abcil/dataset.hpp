#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "env.hpp"
#include "io.hpp"
#include "policy.hpp"
#include "rng.hpp"

namespace abcil {

struct Transition {
    std::vector<double> state;
    std::vector<double> action;
};

// flat storage, one row per transition
struct Dataset {
    int state_dim = 0;
    int action_dim = 0;
    std::vector<double> states;   // n x state_dim
    std::vector<double> actions;  // n x action_dim
    std::vector<size_t> trajectory_boundaries; // start indices, first is 0
    std::string meta;
    double mean_return = std::numeric_limits<double>::quiet_NaN();

    size_t size() const { return state_dim ? states.size() / state_dim : 0; }
    size_t n_traj() const { return trajectory_boundaries.size(); }

    const double* state(size_t i) const { return states.data() + i * state_dim; }
    const double* action(size_t i) const { return actions.data() + i * action_dim; }

    Transition transition(size_t i) const {
        return {{state(i), state(i) + state_dim}, {action(i), action(i) + action_dim}};
    }

    void begin_trajectory() { trajectory_boundaries.push_back(size()); }

    void push(const std::vector<double>& s, const std::vector<double>& a) {
        if (static_cast<int>(s.size()) != state_dim || static_cast<int>(a.size()) != action_dim)
            throw std::runtime_error("dataset: transition dim mismatch");
        states.insert(states.end(), s.begin(), s.end());
        actions.insert(actions.end(), a.begin(), a.end());
    }

    bool finite() const {
        for (double v : states)
            if (!std::isfinite(v)) return false;
        for (double v : actions)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// ---- generation ----

inline Dataset sample_bandit_dataset(int n, double mode_std, uint64_t seed) {
    if (n < 1) throw std::runtime_error("sample_bandit_dataset: n must be >= 1");
    if (mode_std <= 0.0) throw std::runtime_error("sample_bandit_dataset: mode_std must be > 0");
    Rng rng(seed);
    Dataset d;
    d.state_dim = 1;
    d.action_dim = 1;
    for (int i = 0; i < n; ++i) {
        d.begin_trajectory();
        const double mode = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double a = rng.normal(mode, mode_std);
        d.push({0.0}, {a});
    }
    std::ostringstream m;
    m << "bandit bimodal n=" << n << " mode_std=" << mode_std << " seed=" << seed;
    d.meta = m.str();
    return d;
}

enum class NavTarget { TopLeft, BottomRight };

inline Dataset generate_expert_nav(const ExpertScript& expert, int n_traj, uint64_t seed,
                                   const std::string& label) {
    if (n_traj < 1) throw std::runtime_error("generate_expert_nav: n_traj must be >= 1");
    Rng rng(seed);
    Nav2dEnv env;
    Dataset d;
    d.state_dim = Nav2dEnv::state_dim();
    d.action_dim = Nav2dEnv::action_dim();
    double total_return = 0.0;
    for (int k = 0; k < n_traj; ++k) {
        d.begin_trajectory();
        std::vector<double> obs = env.reset(rng);
        double ep_return = 0.0;
        while (true) {
            const std::vector<double> a = expert.act(obs, rng);
            StepResult res = env.step(a);
            d.push(obs, a);
            ep_return += res.reward;
            if (res.done) {
                if (env.step_index < Nav2dEnv::max_steps)
                    throw std::runtime_error(
                        "generate_expert_nav: expert entered the kill square "
                        "(bad noise/geometry settings)");
                break;
            }
            obs = res.next_state;
        }
        total_return += ep_return;
    }
    d.mean_return = total_return / n_traj;
    std::ostringstream m;
    m << "expert " << label << " n_traj=" << n_traj << " seed=" << seed
      << " noise_std=" << expert.noise_std << " mean_return=" << fmt_double(d.mean_return);
    d.meta = m.str();
    return d;
}

inline Dataset generate_expert_nav(NavTarget target, int n_traj, uint64_t seed,
                                   double noise_std = 0.05) {
    ExpertScript expert;
    expert.noise_std = noise_std;
    if (target == NavTarget::TopLeft) {
        expert.target[0] = Nav2dEnv::target_tl[0];
        expert.target[1] = Nav2dEnv::target_tl[1];
    } else {
        expert.target[0] = Nav2dEnv::target_br[0];
        expert.target[1] = Nav2dEnv::target_br[1];
    }
    return generate_expert_nav(expert, n_traj, seed,
                               target == NavTarget::TopLeft ? "tl" : "br");
}

inline Dataset generate_random_nav(int n_traj, uint64_t seed) {
    if (n_traj < 1) throw std::runtime_error("generate_random_nav: n_traj must be >= 1");
    Rng rng(seed);
    Nav2dEnv env;
    UniformRandomPolicy pol;
    Dataset d;
    d.state_dim = Nav2dEnv::state_dim();
    d.action_dim = Nav2dEnv::action_dim();
    double total_return = 0.0;
    for (int k = 0; k < n_traj; ++k) {
        d.begin_trajectory();
        std::vector<double> obs = env.reset(rng);
        while (true) {
            const std::vector<double> a = pol.act(obs, rng);
            StepResult res = env.step(a);
            d.push(obs, a);
            total_return += res.reward;
            if (res.done) break;
            obs = res.next_state;
        }
    }
    d.mean_return = total_return / n_traj;
    std::ostringstream m;
    m << "random nav n_traj=" << n_traj << " seed=" << seed
      << " mean_return=" << fmt_double(d.mean_return);
    d.meta = m.str();
    return d;
}

inline Dataset mix(const Dataset& a, const Dataset& b) {
    if (a.state_dim != b.state_dim || a.action_dim != b.action_dim)
        throw std::runtime_error("mix: dimension mismatch");
    Dataset d = a;
    const size_t offset = a.size();
    for (size_t s : b.trajectory_boundaries) d.trajectory_boundaries.push_back(s + offset);
    d.states.insert(d.states.end(), b.states.begin(), b.states.end());
    d.actions.insert(d.actions.end(), b.actions.begin(), b.actions.end());
    d.meta = "mix[" + a.meta + " + " + b.meta + "]";
    d.mean_return = std::numeric_limits<double>::quiet_NaN();
    return d;
}

// ---- replay buffer ----

// FIFO ring of negative (state, action) examples
struct ReplayBuffer {
    int state_dim = 0;
    int action_dim = 0;
    size_t capacity = 0;
    size_t count = 0;
    size_t write_pos = 0;
    size_t total_pushed = 0;
    std::vector<double> states;
    std::vector<double> actions;

    ReplayBuffer() = default;
    ReplayBuffer(int sd, int ad, size_t cap) : state_dim(sd), action_dim(ad), capacity(cap) {
        states.resize(capacity * sd);
        actions.resize(capacity * ad);
    }

    size_t size() const { return count; }

    void push(const double* s, const double* a) {
        const size_t at = count < capacity ? count : write_pos;
        for (int i = 0; i < state_dim; ++i) states[at * state_dim + i] = s[i];
        for (int i = 0; i < action_dim; ++i) actions[at * action_dim + i] = a[i];
        if (count < capacity) {
            ++count;
        } else {
            write_pos = (write_pos + 1) % capacity;
        }
        ++total_pushed;
    }

    const double* state(size_t i) const { return states.data() + i * state_dim; }
    const double* action(size_t i) const { return actions.data() + i * action_dim; }

    // seeded entries still alive under FIFO overwrite
    size_t seeded_remaining(size_t n_seeded) const {
        const size_t overwritten = total_pushed > n_seeded ? total_pushed - n_seeded : 0;
        return overwritten >= n_seeded ? 0 : n_seeded - overwritten;
    }
};

inline ReplayBuffer seed_replay(const Dataset& dataset, const std::vector<double>& action_low,
                                const std::vector<double>& action_high, size_t n, uint64_t seed) {
    if (dataset.size() == 0) throw std::runtime_error("seed_replay: empty state list");
    if (n < 1) throw std::runtime_error("seed_replay: n must be >= 1");
    if (static_cast<int>(action_low.size()) != dataset.action_dim ||
        static_cast<int>(action_high.size()) != dataset.action_dim)
        throw std::runtime_error("seed_replay: bounds dim mismatch");
    Rng rng(seed);
    ReplayBuffer buf(dataset.state_dim, dataset.action_dim, n);
    std::vector<double> a(dataset.action_dim);
    for (size_t k = 0; k < n; ++k) {
        const size_t idx = rng.uniform_index(dataset.size());
        for (int i = 0; i < dataset.action_dim; ++i)
            a[i] = rng.uniform(action_low[i], action_high[i]);
        buf.push(dataset.state(idx), a.data());
    }
    return buf;
}

inline void push_policy_samples(ReplayBuffer& buffer, const NetPolicy& policy,
                                const Dataset& dataset, size_t n, uint64_t seed) {
    if (dataset.size() == 0) throw std::runtime_error("push_policy_samples: empty dataset");
    Rng rng(seed);
    const int sd = dataset.state_dim, ad = dataset.action_dim;
    const size_t chunk = 256;
    Mlp::BatchCache cache;
    std::vector<double> x, out;
    std::vector<size_t> idx;
    size_t left = n;
    while (left > 0) {
        const size_t bs = std::min(chunk, left);
        idx.resize(bs);
        x.resize(bs * sd);
        for (size_t r = 0; r < bs; ++r) {
            idx[r] = rng.uniform_index(dataset.size());
            const double* s = dataset.state(idx[r]);
            for (int i = 0; i < sd; ++i) x[r * sd + i] = s[i];
        }
        policy.act_batch(x, static_cast<int>(bs), cache, out);
        for (size_t r = 0; r < bs; ++r)
            buffer.push(dataset.state(idx[r]), out.data() + r * ad);
        left -= bs;
    }
}

// ---- serialization ----

inline void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "dataset " << d.state_dim << ' ' << d.action_dim << ' ' << d.n_traj() << '\n';
    if (!d.meta.empty()) out << "# " << d.meta << '\n';
    size_t next_boundary = 0;
    for (size_t i = 0; i < d.size(); ++i) {
        while (next_boundary < d.trajectory_boundaries.size() &&
               d.trajectory_boundaries[next_boundary] == i) {
            out << "traj\n";
            ++next_boundary;
        }
        const double* s = d.state(i);
        for (int k = 0; k < d.state_dim; ++k) out << (k ? " " : "") << fmt_double(s[k]);
        out << " |";
        const double* a = d.action(i);
        for (int k = 0; k < d.action_dim; ++k) out << ' ' << fmt_double(a[k]);
        out << '\n';
    }
    // trailing empty trajectories, if any
    while (next_boundary < d.trajectory_boundaries.size()) {
        out << "traj\n";
        ++next_boundary;
    }
    atomic_write(path, out.str());
}

inline Dataset load_dataset_text(const std::string& text, const std::string& origin = "<memory>") {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + what);
    };
    if (!std::getline(in, line)) {
        line_no = 1;
        fail("empty dataset file");
    }
    ++line_no;
    std::istringstream hs(line);
    std::string tag;
    size_t n_traj = 0;
    Dataset d;
    if (!(hs >> tag >> d.state_dim >> d.action_dim >> n_traj) || tag != "dataset")
        fail("bad header, expected 'dataset <state_dim> <action_dim> <n_traj>'");
    if (d.state_dim < 1 || d.action_dim < 1) fail("bad dimensions in header");
    std::vector<double> s(d.state_dim), a(d.action_dim);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (d.meta.empty()) d.meta = line.size() > 2 ? line.substr(2) : "";
            continue;
        }
        if (line == "traj") {
            d.begin_trajectory();
            continue;
        }
        std::istringstream ls(line);
        for (int i = 0; i < d.state_dim; ++i)
            if (!(ls >> s[i])) fail("short state row");
        std::string sep;
        if (!(ls >> sep) || sep != "|") fail("missing '|' separator");
        for (int i = 0; i < d.action_dim; ++i)
            if (!(ls >> a[i])) fail("short action row");
        std::string extra;
        if (ls >> extra) fail("trailing values");
        if (d.trajectory_boundaries.empty()) fail("transition before first 'traj'");
        d.push(s, a);
    }
    if (d.n_traj() != n_traj) fail("header declares " + std::to_string(n_traj) +
                                   " trajectories, file has " + std::to_string(d.n_traj()));
    const std::string key = "mean_return=";
    const size_t at = d.meta.find(key);
    if (at != std::string::npos) d.mean_return = std::stod(d.meta.substr(at + key.size()));
    return d;
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    return load_dataset_text(read_file(path), path.string());
}

// ---- corruption statistic ----

struct ModeStats {
    static constexpr int n_bins = 20; // [-1,1] at width 0.1
    size_t n_samples = 0;
    std::array<std::array<long, n_bins>, 2> hist = {};
    std::array<int, 2> mode_bin = {-1, -1};
    std::array<double, 2> mean = {0.0, 0.0};
};

// action statistics over transitions whose position lies in the given box
inline ModeStats near_start_mode_stats(const Dataset& d, double box_lo = Nav2dEnv::start_lo,
                                       double box_hi = Nav2dEnv::start_hi) {
    if (d.action_dim != 2) throw std::runtime_error("near_start_mode_stats: nav datasets only");
    ModeStats st;
    for (size_t i = 0; i < d.size(); ++i) {
        const double* s = d.state(i);
        if (s[0] < box_lo || s[0] > box_hi || s[1] < box_lo || s[1] > box_hi) continue;
        const double* a = d.action(i);
        ++st.n_samples;
        for (int c = 0; c < 2; ++c) {
            int bin = static_cast<int>(std::floor((a[c] + 1.0) / 0.1));
            if (bin < 0) bin = 0;
            if (bin >= ModeStats::n_bins) bin = ModeStats::n_bins - 1;
            st.hist[c][bin] += 1;
            st.mean[c] += a[c];
        }
    }
    if (st.n_samples > 0) {
        for (int c = 0; c < 2; ++c) {
            st.mean[c] /= static_cast<double>(st.n_samples);
            long best = -1;
            for (int b = 0; b < ModeStats::n_bins; ++b)
                if (st.hist[c][b] > best) {
                    best = st.hist[c][b];
                    st.mode_bin[c] = b;
                }
        }
    }
    return st;
}

} // namespace abcil
