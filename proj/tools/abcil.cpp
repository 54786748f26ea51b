#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "abcil/abc.hpp"
#include "abcil/bc.hpp"
#include "abcil/dataset.hpp"
#include "abcil/env.hpp"
#include "abcil/eval.hpp"
#include "abcil/experiments.hpp"
#include "abcil/io.hpp"
#include "abcil/nn.hpp"

namespace {

using namespace abcil;

double scale_for_env(const std::string& env) {
    if (env == "bandit") return BanditEnv::action_bound();
    if (env == "nav2d") return Nav2dEnv::action_bound();
    throw std::runtime_error("unknown env: " + env);
}

std::vector<uint64_t> parse_seeds(const std::string& csv) {
    std::vector<uint64_t> seeds;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        seeds.push_back(std::stoull(tok));
    }
    if (seeds.empty()) throw std::runtime_error("--seeds: no seeds given");
    return seeds;
}

void cmd_data_gen(const std::string& env, const std::string& variant, int n, uint64_t seed,
                  const std::string& out, double mode_std, double noise_std) {
    Dataset d;
    if (env == "bandit") {
        d = sample_bandit_dataset(n, mode_std, seed);
    } else if (env == "nav2d") {
        if (variant == "tl") {
            d = generate_expert_nav(NavTarget::TopLeft, n, seed, noise_std);
        } else if (variant == "br") {
            d = generate_expert_nav(NavTarget::BottomRight, n, seed, noise_std);
        } else if (variant == "combined") {
            d = mix(generate_expert_nav(NavTarget::TopLeft, n, seed, noise_std),
                    generate_expert_nav(NavTarget::BottomRight, n, seed + 7919, noise_std));
        } else if (variant == "random") {
            d = generate_random_nav(n, seed);
        } else if (variant == "corrupted") {
            d = mix(generate_expert_nav(NavTarget::TopLeft, n, seed, noise_std),
                    generate_random_nav(n, seed + 15161));
        } else {
            throw std::runtime_error("unknown variant: " + variant);
        }
    } else {
        throw std::runtime_error("unknown env: " + env);
    }
    save_dataset(d, out);
    std::cout << "wrote " << out << " (" << d.size() << " transitions, " << d.n_traj()
              << " trajectories)\n";
}

void cmd_train_bc(const std::string& data_path, const std::string& out, int epochs, uint64_t seed,
                  int batch, double lr, const std::string& env) {
    Dataset d = load_dataset(data_path);
    BcConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.lr = lr;
    cfg.seed = seed;
    BcResult res = train_bc(d, cfg, scale_for_env(env));
    res.policy.net.save(out);
    std::ostringstream loss;
    loss << "epoch,mse\n";
    for (size_t e = 0; e < res.loss_history.size(); ++e)
        loss << e << ',' << fmt_double(res.loss_history[e]) << '\n';
    atomic_write(out + ".loss.csv", loss.str());
    std::cout << "wrote " << out << " (final mse " << fmt_double(res.loss_history.back())
              << ")\n";
}

void cmd_train_abc(const std::string& data_path, const std::string& env, const std::string& out,
                   int n, int nd, uint64_t seed, const AbcConfig& base,
                   const std::string& warm_start, const std::string& diag_dir) {
    Dataset d = load_dataset(data_path);
    AbcConfig cfg = base;
    cfg.n_iters = n > 0 ? n : (env == "bandit" ? 1 : 200);
    cfg.refresh_period = nd;
    cfg.seed = seed;
    std::vector<double> lo(d.action_dim), hi(d.action_dim);
    const double bound = scale_for_env(env);
    for (int i = 0; i < d.action_dim; ++i) {
        lo[i] = -bound;
        hi[i] = bound;
    }
    Mlp init;
    const Mlp* init_ptr = nullptr;
    if (!warm_start.empty()) {
        init = Mlp::load(warm_start);
        if (init.input_dim() != d.state_dim)
            throw std::runtime_error("--warm-start: checkpoint input dim does not match data");
        init_ptr = &init;
    }
    AbcResult res = abc_train(d, cfg, lo, hi, bound, init_ptr);
    res.policy.net.save(out);

    const std::filesystem::path diag = diag_dir.empty() ? out + ".diag" : diag_dir;
    std::ostringstream obj;
    obj << "iter,mean_logit\n";
    for (const auto& [it, v] : res.diagnostics.objective) obj << it << ',' << fmt_double(v) << '\n';
    atomic_write(diag / "objective.csv", obj.str());
    for (const auto& [it, sweep] : res.diagnostics.logit_sweeps) {
        std::ostringstream sw;
        sw << "action,logit\n";
        for (const auto& [a, z] : sweep) sw << fmt_double(a) << ',' << fmt_double(z) << '\n';
        atomic_write(diag / ("logit_sweep_" + std::to_string(it) + ".csv"), sw.str());
    }
    std::ostringstream bs;
    bs << "iter,size,seeded_remaining,policy_pushed,mean_logit_pushed_pre,mean_logit_pushed_post\n";
    for (const BufferStat& b : res.diagnostics.buffer_stats)
        bs << b.iter << ',' << b.size << ',' << b.seeded_remaining << ',' << b.policy_pushed << ','
           << fmt_double(b.mean_logit_pushed_pre) << ',' << fmt_double(b.mean_logit_pushed_post)
           << '\n';
    atomic_write(diag / "buffer_stats.csv", bs.str());
    std::cout << "wrote " << out << " (diagnostics in " << diag.string() << ")\n";
}

void cmd_eval_rollout(const std::string& ckpt, const std::string& env, int episodes,
                      uint64_t seed, const std::string& out) {
    NetPolicy policy{Mlp::load(ckpt), scale_for_env(env)};
    EvalReport rep;
    if (env == "bandit") {
        if (policy.net.input_dim() != BanditEnv::state_dim())
            throw std::runtime_error("checkpoint input dim does not match bandit");
        rep = rollout(policy, BanditEnv{}, episodes, seed, ckpt, env);
    } else {
        if (policy.net.input_dim() != Nav2dEnv::state_dim())
            throw std::runtime_error("checkpoint input dim does not match nav2d");
        rep = rollout(policy, Nav2dEnv{}, episodes, seed, ckpt, env);
    }
    save_report(rep, out);
    std::cout << "mean " << fmt_double(rep.mean) << " std " << fmt_double(rep.std_dev) << " over "
              << episodes << " episodes\n";
}

void cmd_dump_reward(const std::string& env, int resolution, const std::string& out) {
    if (resolution < 2) throw std::runtime_error("--resolution must be >= 2");
    std::ostringstream csv;
    if (env == "bandit") {
        csv << "action,reward\n";
        for (int i = 0; i < resolution; ++i) {
            const double a = -2.0 + 4.0 * static_cast<double>(i) / (resolution - 1);
            csv << fmt_double(a) << ',' << fmt_double(bandit_reward(a)) << '\n';
        }
    } else if (env == "nav2d") {
        csv << "x,y,reward\n";
        for (int i = 0; i < resolution; ++i)
            for (int j = 0; j < resolution; ++j) {
                const double x = static_cast<double>(i) / (resolution - 1);
                const double y = static_cast<double>(j) / (resolution - 1);
                csv << fmt_double(x) << ',' << fmt_double(y) << ','
                    << fmt_double(nav_reward(x, y)) << '\n';
            }
    } else {
        throw std::runtime_error("unknown env: " + env);
    }
    atomic_write(out, csv.str());
    std::cout << "wrote " << out << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"offline imitation learning toolkit: behavioral cloning and its "
                 "adversarial, mode-seeking variant on bandit and 2D navigation tasks"};
    app.require_subcommand(1);

    std::string env = "nav2d", variant = "tl", out, data_path, ckpt, warm_start, diag_dir;
    std::string seeds_csv;
    int n = 0, epochs = 200, episodes = 20, resolution = 101, nd = 10;
    uint64_t seed = 0;
    double mode_std = 0.1, noise_std = 0.05;

    // data gen
    CLI::App* data = app.add_subcommand("data", "dataset generation");
    data->require_subcommand(1);
    CLI::App* gen = data->add_subcommand("gen", "generate a dataset");
    gen->add_option("--env", env, "bandit or nav2d")->required();
    gen->add_option("--variant", variant, "tl|br|combined|random|corrupted (nav2d only)");
    gen->add_option("--n", n, "bandit: samples; nav2d: trajectories per source")->required();
    gen->add_option("--seed", seed, "rng seed");
    gen->add_option("--out", out, "output dataset path")->required();
    gen->add_option("--mode-std", mode_std, "bandit mode std");
    gen->add_option("--noise-std", noise_std, "nav expert action noise std");

    // train bc / abc
    CLI::App* train = app.add_subcommand("train", "train a policy");
    train->require_subcommand(1);
    CLI::App* bc = train->add_subcommand("bc", "behavioral cloning");
    BcConfig bc_defaults;
    int bc_batch = bc_defaults.batch_size;
    double bc_lr = bc_defaults.lr;
    bc->add_option("--data", data_path, "dataset path")->required();
    bc->add_option("--out", out, "checkpoint path")->required();
    bc->add_option("--epochs", epochs, "training epochs");
    bc->add_option("--seed", seed, "rng seed");
    bc->add_option("--batch", bc_batch, "minibatch size");
    bc->add_option("--lr", bc_lr, "learning rate");
    bc->add_option("--env", env, "env the policy is for (sets action scale)");

    CLI::App* abc = train->add_subcommand("abc", "adversarial behavioral cloning");
    AbcConfig abc_defaults;
    int abc_n = -1;
    abc->add_option("--data", data_path, "dataset path")->required();
    abc->add_option("--env", env, "bandit or nav2d")->required();
    abc->add_option("--out", out, "checkpoint path")->required();
    abc->add_option("--n", abc_n, "outer iterations (default: 1 bandit, 200 nav2d)");
    abc->add_option("--nd", nd, "iterations between buffer refreshes");
    abc->add_option("--seed", seed, "rng seed");
    abc->add_option("--buffer", abc_defaults.buffer_size, "replay buffer capacity");
    abc->add_option("--de0", abc_defaults.disc_epochs_initial, "initial discriminator epochs");
    abc->add_option("--der", abc_defaults.disc_epochs_refresh, "refresh discriminator epochs");
    abc->add_option("--psteps", abc_defaults.policy_steps_per_iter, "policy steps per iteration");
    abc->add_option("--push", abc_defaults.push_per_refresh, "policy samples pushed per refresh");
    abc->add_option("--batch", abc_defaults.batch_size, "discriminator minibatch size");
    abc->add_option("--pbs", abc_defaults.policy_batch_size, "policy minibatch size");
    abc->add_option("--lr-disc", abc_defaults.lr_disc, "discriminator learning rate");
    abc->add_option("--lr-policy", abc_defaults.lr_policy, "policy learning rate");
    abc->add_option("--warm-start", warm_start, "initialize the policy from a checkpoint");
    abc->add_option("--diag-dir", diag_dir, "diagnostics directory (default <out>.diag)");

    // eval rollout
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a policy");
    eval_cmd->require_subcommand(1);
    CLI::App* roll = eval_cmd->add_subcommand("rollout", "roll out a checkpoint");
    roll->add_option("--ckpt", ckpt, "policy checkpoint")->required();
    roll->add_option("--env", env, "bandit or nav2d")->required();
    roll->add_option("--episodes", episodes, "episode count");
    roll->add_option("--seed", seed, "rng seed");
    roll->add_option("--out", out, "report CSV path")->required();

    // reproduce
    CLI::App* rep = app.add_subcommand("reproduce", "rerun a packaged experiment");
    rep->require_subcommand(1);
    struct RepSub {
        CLI::App* sub;
        std::string name;
        std::string default_seeds;
    };
    std::string out_dir;
    std::vector<RepSub> rep_subs = {
        {rep->add_subcommand("fig1", "bandit mean-vs-mode comparison"), "fig1",
         "0,1,2,3,4,5,6,7,8,9"},
        {rep->add_subcommand("table1", "navigation dataset grid"), "table1", "0,1,2,3,4"},
        {rep->add_subcommand("fig3-analog", "clean-vs-corrupted grid"), "fig3-analog",
         "0,1,2,3,4"},
    };
    for (RepSub& rs : rep_subs) {
        rs.sub->add_option("--out-dir", out_dir, "output directory")->required();
        rs.sub->add_option("--seeds", seeds_csv, "comma-separated seed list");
    }

    // env dump-reward
    CLI::App* env_cmd = app.add_subcommand("env", "environment utilities");
    env_cmd->require_subcommand(1);
    CLI::App* dump = env_cmd->add_subcommand("dump-reward", "emit the reward landscape as CSV");
    dump->add_option("--env", env, "bandit or nav2d")->required();
    dump->add_option("--resolution", resolution, "grid points per axis");
    dump->add_option("--out", out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            cmd_data_gen(env, variant, n, seed, out, mode_std, noise_std);
        } else if (bc->parsed()) {
            cmd_train_bc(data_path, out, epochs, seed, bc_batch, bc_lr, env);
        } else if (abc->parsed()) {
            cmd_train_abc(data_path, env, out, abc_n, nd, seed, abc_defaults, warm_start,
                          diag_dir);
        } else if (roll->parsed()) {
            cmd_eval_rollout(ckpt, env, episodes, seed, out);
        } else if (dump->parsed()) {
            cmd_dump_reward(env, resolution, out);
        } else {
            for (const RepSub& rs : rep_subs) {
                if (!rs.sub->parsed()) continue;
                const std::vector<uint64_t> seeds =
                    parse_seeds(seeds_csv.empty() ? rs.default_seeds : seeds_csv);
                RunManifest man =
                    run_experiment(experiment_from_name(rs.name), out_dir, seeds);
                std::cout << "wrote " << man.files.size() << " files to " << out_dir << '\n';
                break;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
