#pragma once

#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "env.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace abcil {

struct EvalReport {
    std::vector<double> returns;
    double mean = 0.0;
    double std_dev = 0.0;
    int n_episodes = 0;
    std::string ckpt_id;
    std::string env_id;
    uint64_t seed = 0;
};

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw std::runtime_error("mean_of: empty list");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double population_std(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// policy must expose act(obs, rng) -> action vector
template <class Env, class Policy>
EvalReport rollout(Policy& policy, Env env, int n_episodes, uint64_t seed,
                   const std::string& ckpt_id = "", const std::string& env_id = "") {
    if (n_episodes < 1) throw std::runtime_error("rollout: n_episodes must be >= 1");
    Rng rng(seed);
    EvalReport rep;
    rep.n_episodes = n_episodes;
    rep.ckpt_id = ckpt_id;
    rep.env_id = env_id;
    rep.seed = seed;
    for (int ep = 0; ep < n_episodes; ++ep) {
        std::vector<double> obs = env.reset(rng);
        double total = 0.0;
        while (true) {
            const std::vector<double> a = policy.act(obs, rng);
            StepResult r = env.step(a);
            total += r.reward;
            if (r.done) break;
            obs = std::move(r.next_state);
        }
        rep.returns.push_back(total);
    }
    rep.mean = mean_of(rep.returns);
    rep.std_dev = population_std(rep.returns);
    return rep;
}

inline std::string report_csv(const EvalReport& rep) {
    std::ostringstream out;
    out << "# env=" << rep.env_id << " ckpt=" << rep.ckpt_id << " seed=" << rep.seed
        << " episodes=" << rep.n_episodes << '\n';
    out << "# mean=" << fmt_double(rep.mean) << " std=" << fmt_double(rep.std_dev) << '\n';
    out << "episode,return\n";
    for (size_t i = 0; i < rep.returns.size(); ++i)
        out << i << ',' << fmt_double(rep.returns[i]) << '\n';
    return out.str();
}

inline void save_report(const EvalReport& rep, const std::filesystem::path& path) {
    atomic_write(path, report_csv(rep));
}

struct Aggregate {
    double mean = 0.0;     // mean of per-report means
    double std_dev = 0.0;  // population std across reports
};

inline Aggregate summarize(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw std::runtime_error("summarize: no reports");
    std::vector<double> means;
    means.reserve(reports.size());
    for (const EvalReport& r : reports) means.push_back(r.mean);
    return {mean_of(means), population_std(means)};
}

} // namespace abcil
