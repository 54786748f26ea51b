#pragma once

#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "abc.hpp"
#include "bc.hpp"
#include "dataset.hpp"
#include "eval.hpp"

namespace abcil {

enum class Experiment { fig1, table1, fig3_analog };

inline Experiment experiment_from_name(const std::string& s) {
    if (s == "fig1") return Experiment::fig1;
    if (s == "table1") return Experiment::table1;
    if (s == "fig3-analog" || s == "fig3_analog") return Experiment::fig3_analog;
    throw std::runtime_error("unknown experiment: " + s);
}

struct RunManifest {
    std::string name;
    std::vector<uint64_t> seeds;
    std::vector<std::string> files;
};

inline BcConfig bc_default_config(uint64_t seed) {
    BcConfig cfg;
    cfg.seed = seed;
    return cfg;
}

// one outer iteration, no refreshes; the long ascent lets the policy walk
// out of the valley between the two logit peaks
inline AbcConfig abc_bandit_config(uint64_t seed) {
    AbcConfig cfg;
    cfg.n_iters = 1;
    cfg.refresh_period = 1;
    cfg.policy_steps_per_iter = 3000;
    cfg.lr_policy = 1e-3;
    cfg.seed = seed;
    return cfg;
}

// gentle frequent refreshes and a slow policy: the discriminator tracks the
// policy closely enough that the ascent never overshoots into a collapse
inline AbcConfig abc_nav_config(uint64_t seed) {
    AbcConfig cfg;
    cfg.n_iters = 400;
    cfg.refresh_period = 10;
    cfg.disc_epochs_refresh = 2;
    cfg.push_per_refresh = 1000;
    cfg.policy_batch_size = 128;
    cfg.seed = seed;
    return cfg;
}

constexpr int kNavTrajPerCorner = 20;
constexpr int kEvalEpisodes = 20;

namespace detail {

inline void emit(RunManifest& man, const std::filesystem::path& out_dir, const std::string& rel,
                 const std::string& content) {
    atomic_write(out_dir / rel, content);
    man.files.push_back(rel);
}

inline void emit_manifest(RunManifest& man, const std::filesystem::path& out_dir) {
    std::ostringstream out;
    out << "experiment " << man.name << '\n';
    out << "seeds";
    for (uint64_t s : man.seeds) out << ' ' << s;
    out << '\n';
    for (const std::string& f : man.files) out << "file " << f << '\n';
    atomic_write(out_dir / "manifest.txt", out.str());
    man.files.push_back("manifest.txt");
}

inline std::string sweep_csv(const std::vector<std::pair<double, double>>& sweep) {
    std::ostringstream out;
    out << "action,logit\n";
    for (const auto& [a, z] : sweep) out << fmt_double(a) << ',' << fmt_double(z) << '\n';
    return out.str();
}

} // namespace detail

inline RunManifest run_fig1(const std::filesystem::path& out_dir,
                            const std::vector<uint64_t>& seeds) {
    RunManifest man{"fig1", seeds, {}};
    std::ostringstream actions;
    actions << "seed,sample_mean,bc_action,bc_reward,abc_action,abc_reward\n";
    bool first = true;
    for (uint64_t seed : seeds) {
        Dataset d = sample_bandit_dataset(10000, 0.1, 1000 + seed);
        double sample_mean = 0.0;
        for (size_t i = 0; i < d.size(); ++i) sample_mean += d.action(i)[0];
        sample_mean /= static_cast<double>(d.size());

        BcResult bc = train_bc(d, bc_default_config(seed), BanditEnv::action_bound());
        AbcResult abc = abc_train(d, abc_bandit_config(seed), {BanditEnv::action_low},
                                  {BanditEnv::action_high}, BanditEnv::action_bound(), nullptr,
                                  first);
        const double a_bc = bc.policy.act({0.0})[0];
        const double a_abc = abc.policy.act({0.0})[0];
        actions << seed << ',' << fmt_double(sample_mean) << ',' << fmt_double(a_bc) << ','
                << fmt_double(bandit_reward(a_bc)) << ',' << fmt_double(a_abc) << ','
                << fmt_double(bandit_reward(a_abc)) << '\n';

        if (first) {
            std::ostringstream hist;
            hist << "bin_lo,bin_hi,count\n";
            const int bins = 40;
            std::vector<int> counts(bins, 0);
            for (size_t i = 0; i < d.size(); ++i) {
                const double a = d.action(i)[0];
                int b = static_cast<int>((a + 2.0) / 0.1);
                if (b < 0) b = 0;
                if (b >= bins) b = bins - 1;
                ++counts[b];
            }
            for (int b = 0; b < bins; ++b)
                hist << fmt_double(-2.0 + 0.1 * b) << ',' << fmt_double(-2.0 + 0.1 * (b + 1))
                     << ',' << counts[b] << '\n';
            detail::emit(man, out_dir, "dataset_hist.csv", hist.str());
            for (const auto& [iter, sweep] : abc.diagnostics.logit_sweeps) {
                const std::string tag = iter == 0 ? "initial" : "final";
                detail::emit(man, out_dir, "logit_sweep_" + tag + ".csv",
                             detail::sweep_csv(sweep));
            }
            first = false;
        }
    }
    detail::emit(man, out_dir, "actions.csv", actions.str());
    detail::emit_manifest(man, out_dir);
    return man;
}

namespace detail {

struct NavCells {
    std::ostringstream returns;  // dataset,algo,seed,mean_return
    std::vector<std::vector<double>> per_cell;  // cell-major means per seed

    explicit NavCells(int n_cells) : per_cell(n_cells) {}

    void record(const std::string& dataset_name, const std::string& algo, uint64_t seed,
                int cell, double mean_return) {
        returns << dataset_name << ',' << algo << ',' << seed << ',' << fmt_double(mean_return)
                << '\n';
        per_cell[cell].push_back(mean_return);
    }
};

// bc then warm-started abc on one dataset; returns {bc mean, abc mean}
inline std::pair<double, double> nav_pair(const Dataset& data, uint64_t seed,
                                          uint64_t eval_seed) {
    BcResult bc = train_bc(data, bc_default_config(seed), Nav2dEnv::action_bound());
    AbcResult abc = abc_train(data, abc_nav_config(seed), {-1.0, -1.0}, {1.0, 1.0},
                              Nav2dEnv::action_bound(), &bc.policy.net, false);
    EvalReport rb = rollout(bc.policy, Nav2dEnv{}, kEvalEpisodes, eval_seed);
    EvalReport ra = rollout(abc.policy, Nav2dEnv{}, kEvalEpisodes, eval_seed + 1);
    return {rb.mean, ra.mean};
}

} // namespace detail

inline RunManifest run_table1(const std::filesystem::path& out_dir,
                              const std::vector<uint64_t>& seeds) {
    RunManifest man{"table1", seeds, {}};
    detail::NavCells cells(6);
    cells.returns << "dataset,algo,seed,mean_return\n";
    std::ostringstream expert;
    expert << "seed,expert_return_tl,expert_return_br\n";
    for (uint64_t seed : seeds) {
        Dataset tl = generate_expert_nav(NavTarget::TopLeft, kNavTrajPerCorner, 1000 + seed * 997);
        Dataset br =
            generate_expert_nav(NavTarget::BottomRight, kNavTrajPerCorner, 3000 + seed * 997);
        Dataset comb = mix(tl, br);
        expert << seed << ',' << fmt_double(tl.mean_return) << ',' << fmt_double(br.mean_return)
               << '\n';
        const auto [bc_tl, abc_tl] = detail::nav_pair(tl, seed, 90000 + seed * 31);
        const auto [bc_br, abc_br] = detail::nav_pair(br, seed, 91000 + seed * 31);
        const auto [bc_co, abc_co] = detail::nav_pair(comb, seed, 92000 + seed * 31);
        cells.record("tl", "bc", seed, 0, bc_tl);
        cells.record("tl", "abc", seed, 1, abc_tl);
        cells.record("br", "bc", seed, 2, bc_br);
        cells.record("br", "abc", seed, 3, abc_br);
        cells.record("combined", "bc", seed, 4, bc_co);
        cells.record("combined", "abc", seed, 5, abc_co);
    }
    std::ostringstream grid;
    grid << "dataset,algo,mean_return,std_return\n";
    const char* names[6] = {"tl,bc", "tl,abc", "br,bc", "br,abc", "combined,bc", "combined,abc"};
    for (int c = 0; c < 6; ++c)
        grid << names[c] << ',' << fmt_double(mean_of(cells.per_cell[c])) << ','
             << fmt_double(population_std(cells.per_cell[c])) << '\n';
    detail::emit(man, out_dir, "returns.csv", cells.returns.str());
    detail::emit(man, out_dir, "grid.csv", grid.str());
    detail::emit(man, out_dir, "expert.csv", expert.str());
    detail::emit_manifest(man, out_dir);
    return man;
}

inline RunManifest run_fig3_analog(const std::filesystem::path& out_dir,
                                   const std::vector<uint64_t>& seeds) {
    RunManifest man{"fig3-analog", seeds, {}};
    detail::NavCells cells(4);
    cells.returns << "dataset,algo,seed,mean_return\n";
    std::ostringstream expert;
    expert << "seed,expert_return_tl\n";
    for (uint64_t seed : seeds) {
        Dataset tl = generate_expert_nav(NavTarget::TopLeft, kNavTrajPerCorner, 1000 + seed * 997);
        Dataset rnd = generate_random_nav(kNavTrajPerCorner, 5000 + seed * 997);
        Dataset corr = mix(tl, rnd);
        expert << seed << ',' << fmt_double(tl.mean_return) << '\n';
        const auto [bc_cl, abc_cl] = detail::nav_pair(tl, seed, 90000 + seed * 31);
        const auto [bc_cr, abc_cr] = detail::nav_pair(corr, seed, 93000 + seed * 31);
        cells.record("clean", "bc", seed, 0, bc_cl);
        cells.record("clean", "abc", seed, 1, abc_cl);
        cells.record("corrupted", "bc", seed, 2, bc_cr);
        cells.record("corrupted", "abc", seed, 3, abc_cr);
    }
    std::ostringstream grid;
    grid << "dataset,algo,mean_return,std_return\n";
    const char* names[4] = {"clean,bc", "clean,abc", "corrupted,bc", "corrupted,abc"};
    for (int c = 0; c < 4; ++c)
        grid << names[c] << ',' << fmt_double(mean_of(cells.per_cell[c])) << ','
             << fmt_double(population_std(cells.per_cell[c])) << '\n';
    detail::emit(man, out_dir, "returns.csv", cells.returns.str());
    detail::emit(man, out_dir, "grid.csv", grid.str());
    detail::emit(man, out_dir, "expert.csv", expert.str());
    detail::emit_manifest(man, out_dir);
    return man;
}

inline RunManifest run_experiment(Experiment which, const std::filesystem::path& out_dir,
                                  const std::vector<uint64_t>& seeds) {
    if (seeds.empty()) throw std::runtime_error("run_experiment: need at least one seed");
    switch (which) {
        case Experiment::fig1: return run_fig1(out_dir, seeds);
        case Experiment::table1: return run_table1(out_dir, seeds);
        case Experiment::fig3_analog: return run_fig3_analog(out_dir, seeds);
    }
    throw std::runtime_error("run_experiment: bad enum");
}

} // namespace abcil

