#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "nn.hpp"
#include "policy.hpp"
#include "rng.hpp"

namespace abcil {

struct AbcConfig {
    int n_iters = 200;               // N; the bandit runs with 1
    int refresh_period = 10;         // N_D
    size_t buffer_size = 50000;      // N_R, also the ring capacity
    int disc_epochs_initial = 50;
    int disc_epochs_refresh = 5;
    int policy_steps_per_iter = 50;
    size_t push_per_refresh = 5000;
    int batch_size = 256;            // discriminator minibatch
    int policy_batch_size = 256;     // ascent minibatch
    double lr_disc = 1e-3;
    double lr_policy = 1e-4;
    uint64_t seed = 0;
    std::vector<int> hidden = {64, 64};      // generator hidden widths
    std::vector<int> disc_hidden = {64, 64}; // discriminator hidden widths

    void validate() const {
        if (n_iters < 1 || refresh_period < 1 || buffer_size < 1 || disc_epochs_initial < 1 ||
            disc_epochs_refresh < 1 || policy_steps_per_iter < 1 || push_per_refresh < 1 ||
            batch_size < 2 || policy_batch_size < 1 || lr_disc <= 0.0 || lr_policy <= 0.0)
            throw std::runtime_error("abc config: all fields must be positive");
        if (refresh_period > n_iters && n_iters > 1)
            throw std::runtime_error("abc config: refresh period exceeds iteration count");
    }
};

struct BufferStat {
    int iter = 0;
    size_t size = 0;
    size_t seeded_remaining = 0;
    size_t policy_pushed = 0;
    double mean_logit_pushed_pre = 0.0;  // current D on the fresh policy samples
    double mean_logit_pushed_post = 0.0; // same samples after the refresh retrain
};

struct AbcDiagnostics {
    std::vector<std::pair<int, double>> objective;           // (iter, mean logit)
    std::vector<BufferStat> buffer_stats;
    std::vector<std::pair<int, std::vector<std::pair<double, double>>>> logit_sweeps;
    std::string notes;
};

// binary cross-entropy on raw logits, numerically stable
inline double bce_with_logits(double z, double label) {
    return std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::fabs(z)));
}

inline std::vector<std::pair<double, double>> sweep_logits(const Mlp& disc,
                                                           const std::vector<double>& state,
                                                           int action_coord, double lo, double hi,
                                                           int points) {
    if (points < 2) throw std::runtime_error("sweep_logits: need at least 2 grid points");
    const int sd = static_cast<int>(state.size());
    const int ad = disc.input_dim() - sd;
    if (ad < 1 || action_coord < 0 || action_coord >= ad)
        throw std::runtime_error("sweep_logits: bad action coordinate");
    std::vector<double> x(disc.input_dim(), 0.0);
    for (int i = 0; i < sd; ++i) x[i] = state[i];
    std::vector<std::pair<double, double>> out;
    out.reserve(points);
    for (int i = 0; i < points; ++i) {
        const double a = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        x[sd + action_coord] = a;
        out.emplace_back(a, disc.forward(x)[0]);
    }
    return out;
}

namespace detail {

// scratch buffers shared across discriminator/policy minibatches
struct AbcWorkspace {
    Mlp::BatchCache dcache, pcache;
    std::vector<double> x, dx, og, grads, dig, pog;
};

struct DiscTrainer {
    Mlp& disc;
    AdamState& opt;
    const Dataset& expert;
    ReplayBuffer& buffer;
    int batch_size;
    AbcWorkspace& ws;

    // epochs are counted in passes over the expert set, half of every
    // minibatch expert (label 1), half buffer (label 0)
    double train(int epochs, Rng& rng) {
        const int half = batch_size / 2;
        const int bs = half * 2;
        const int sd = expert.state_dim, ad = expert.action_dim;
        const int in = sd + ad;
        const int batches = std::max<size_t>(1, expert.size() / half);
        ws.x.resize(static_cast<size_t>(bs) * in);
        ws.og.resize(bs);
        double last_epoch_loss = 0.0;
        for (int ep = 0; ep < epochs; ++ep) {
            double ep_loss = 0.0;
            for (int b = 0; b < batches; ++b) {
                for (int r = 0; r < bs; ++r) {
                    const bool is_expert = r < half;
                    const double* s;
                    const double* a;
                    if (is_expert) {
                        const size_t i = rng.uniform_index(expert.size());
                        s = expert.state(i);
                        a = expert.action(i);
                    } else {
                        const size_t i = rng.uniform_index(buffer.size());
                        s = buffer.state(i);
                        a = buffer.action(i);
                    }
                    double* row = ws.x.data() + static_cast<size_t>(r) * in;
                    for (int i2 = 0; i2 < sd; ++i2) row[i2] = s[i2];
                    for (int i2 = 0; i2 < ad; ++i2) row[sd + i2] = a[i2];
                }
                disc.forward_batch(ws.x, bs, ws.dcache);
                const std::vector<double>& z = disc.batch_output(ws.dcache);
                double loss = 0.0;
                for (int r = 0; r < bs; ++r) {
                    const double label = r < half ? 1.0 : 0.0;
                    loss += bce_with_logits(z[r], label);
                    ws.og[r] = (sigmoid(z[r]) - label) / bs;
                }
                loss /= bs;
                if (!std::isfinite(loss))
                    throw std::runtime_error("train_discriminator: loss became non-finite");
                ep_loss += loss;
                disc.backward_batch(ws.dcache, ws.og, ws.grads);
                adam_step(disc, ws.grads, opt);
            }
            last_epoch_loss = ep_loss / batches;
        }
        return last_epoch_loss;
    }
};

} // namespace detail

inline void train_discriminator(Mlp& disc, AdamState& opt, const Dataset& expert,
                                ReplayBuffer& buffer, int epochs, int batch_size, Rng& rng) {
    if (buffer.size() == 0) throw std::runtime_error("train_discriminator: empty buffer");
    detail::AbcWorkspace ws;
    detail::DiscTrainer t{disc, opt, expert, buffer, batch_size, ws};
    t.train(epochs, rng);
}

// one ascent step of the policy on mean D(s, pi(s)); D is read-only here.
// Returns the pre-step objective value.
inline double policy_update(NetPolicy& policy, const Mlp& disc, AdamState& opt,
                            const Dataset& data, int batch_size, Rng& rng,
                            detail::AbcWorkspace& ws) {
    const int sd = data.state_dim, ad = data.action_dim;
    const int in = sd + ad;
    const int bs = batch_size;
    ws.x.resize(static_cast<size_t>(bs) * sd);
    for (int r = 0; r < bs; ++r) {
        const size_t i = rng.uniform_index(data.size());
        const double* s = data.state(i);
        for (int k = 0; k < sd; ++k) ws.x[static_cast<size_t>(r) * sd + k] = s[k];
    }
    policy.net.forward_batch(ws.x, bs, ws.pcache);
    const std::vector<double>& raw = policy.net.batch_output(ws.pcache);

    ws.dx.resize(static_cast<size_t>(bs) * in);
    for (int r = 0; r < bs; ++r) {
        const double* s = ws.x.data() + static_cast<size_t>(r) * sd;
        double* row = ws.dx.data() + static_cast<size_t>(r) * in;
        for (int k = 0; k < sd; ++k) row[k] = s[k];
        for (int k = 0; k < ad; ++k) row[sd + k] = policy.scale * raw[static_cast<size_t>(r) * ad + k];
    }
    disc.forward_batch(ws.dx, bs, ws.dcache);
    const std::vector<double>& z = disc.batch_output(ws.dcache);
    double objective = 0.0;
    for (int r = 0; r < bs; ++r) objective += z[r];
    objective /= bs;

    // minimize -objective: output grad -1/bs per logit
    ws.og.assign(bs, -1.0 / bs);
    disc.backward_batch(ws.dcache, ws.og, ws.grads, &ws.dig);
    ws.pog.resize(static_cast<size_t>(bs) * ad);
    for (int r = 0; r < bs; ++r)
        for (int k = 0; k < ad; ++k)
            ws.pog[static_cast<size_t>(r) * ad + k] =
                policy.scale * ws.dig[static_cast<size_t>(r) * in + sd + k];
    policy.net.backward_batch(ws.pcache, ws.pog, ws.grads);
    adam_step(policy.net, ws.grads, opt);
    return objective;
}

inline double policy_update(NetPolicy& policy, const Mlp& disc, AdamState& opt,
                            const Dataset& data, int batch_size, Rng& rng) {
    detail::AbcWorkspace ws;
    return policy_update(policy, disc, opt, data, batch_size, rng, ws);
}

struct AbcResult {
    NetPolicy policy;
    AbcDiagnostics diagnostics;
};

// the full loop: seed buffer with uniform negatives, train D, then alternate
// policy ascent with periodic buffer refreshes and short D retrains
inline AbcResult abc_train(const Dataset& data, const AbcConfig& cfg,
                           const std::vector<double>& action_low,
                           const std::vector<double>& action_high, double action_scale,
                           const Mlp* policy_init = nullptr, bool want_sweeps = true) {
    cfg.validate();
    if (data.size() == 0) throw std::runtime_error("abc_train: empty dataset");
    Rng rng(cfg.seed);

    AbcResult res;
    res.policy.scale = action_scale;
    std::vector<int> psizes{data.state_dim};
    for (int h : cfg.hidden) psizes.push_back(h);
    psizes.push_back(data.action_dim);
    const uint64_t pol_seed = rng.next_u64();
    if (policy_init) {
        res.policy.net = *policy_init;
        res.diagnostics.notes = "policy warm-started";
    } else {
        res.policy.net = Mlp(psizes, Act::tanh_sat, Act::tanh_sat, pol_seed);
    }

    std::vector<int> dsizes{data.state_dim + data.action_dim};
    for (int h : cfg.disc_hidden) dsizes.push_back(h);
    dsizes.push_back(1);
    Mlp disc(dsizes, Act::tanh_sat, Act::identity, rng.next_u64());

    AdamState opt_p(res.policy.net.n_params(), cfg.lr_policy);
    AdamState opt_d(disc.n_params(), cfg.lr_disc);

    ReplayBuffer buffer = seed_replay(data, action_low, action_high, cfg.buffer_size, rng.next_u64());
    detail::AbcWorkspace ws;
    detail::DiscTrainer disc_trainer{disc, opt_d, data, buffer, cfg.batch_size, ws};
    disc_trainer.train(cfg.disc_epochs_initial, rng);

    auto take_sweep = [&](int iter) {
        if (!want_sweeps) return;
        const std::vector<double> s0(data.state(0), data.state(0) + data.state_dim);
        res.diagnostics.logit_sweeps.emplace_back(
            iter, sweep_logits(disc, s0, 0, action_low[0], action_high[0], 4001));
    };
    take_sweep(0);

    Mlp::BatchCache eval_cache;
    std::vector<double> eval_x, eval_a;
    auto mean_logit_on = [&](const std::vector<double>& xs, const std::vector<double>& as,
                             size_t count) {
        const int sd = data.state_dim, ad = data.action_dim, in = sd + ad;
        eval_x.resize(count * in);
        for (size_t r = 0; r < count; ++r) {
            for (int k = 0; k < sd; ++k) eval_x[r * in + k] = xs[r * sd + k];
            for (int k = 0; k < ad; ++k) eval_x[r * in + sd + k] = as[r * ad + k];
        }
        disc.forward_batch(eval_x, static_cast<int>(count), eval_cache);
        const std::vector<double>& z = disc.batch_output(eval_cache);
        double m = 0.0;
        for (size_t r = 0; r < count; ++r) m += z[r];
        return m / static_cast<double>(count);
    };

    for (int it = 1; it <= cfg.n_iters; ++it) {
        double obj_sum = 0.0;
        for (int k = 0; k < cfg.policy_steps_per_iter; ++k)
            obj_sum += policy_update(res.policy, disc, opt_p, data, cfg.policy_batch_size, rng, ws);
        res.diagnostics.objective.emplace_back(it, obj_sum / cfg.policy_steps_per_iter);

        if (it % cfg.refresh_period == 0 && it < cfg.n_iters) {
            // push fresh policy samples at expert states, then short retrain
            const size_t n_push = cfg.push_per_refresh;
            const int sd = data.state_dim, ad = data.action_dim;
            std::vector<double> push_s(n_push * sd), push_a(n_push * ad);
            {
                Rng push_rng(rng.next_u64());
                Mlp::BatchCache pc;
                std::vector<double> x, out;
                size_t done = 0;
                while (done < n_push) {
                    const size_t bs = std::min<size_t>(256, n_push - done);
                    x.resize(bs * sd);
                    std::vector<size_t> idx(bs);
                    for (size_t r = 0; r < bs; ++r) {
                        idx[r] = push_rng.uniform_index(data.size());
                        const double* s = data.state(idx[r]);
                        for (int k2 = 0; k2 < sd; ++k2) x[r * sd + k2] = s[k2];
                    }
                    res.policy.act_batch(x, static_cast<int>(bs), pc, out);
                    for (size_t r = 0; r < bs; ++r) {
                        const double* s = data.state(idx[r]);
                        const double* a = out.data() + r * ad;
                        for (int k2 = 0; k2 < sd; ++k2) push_s[(done + r) * sd + k2] = s[k2];
                        for (int k2 = 0; k2 < ad; ++k2) push_a[(done + r) * ad + k2] = a[k2];
                        buffer.push(s, a);
                    }
                    done += bs;
                }
            }
            BufferStat bstat;
            bstat.iter = it;
            bstat.mean_logit_pushed_pre = mean_logit_on(push_s, push_a, n_push);
            disc_trainer.train(cfg.disc_epochs_refresh, rng);
            bstat.mean_logit_pushed_post = mean_logit_on(push_s, push_a, n_push);
            bstat.size = buffer.size();
            bstat.seeded_remaining = buffer.seeded_remaining(cfg.buffer_size);
            bstat.policy_pushed = buffer.total_pushed - cfg.buffer_size;
            res.diagnostics.buffer_stats.push_back(bstat);
        }
    }
    take_sweep(cfg.n_iters);
    if (!res.policy.net.finite()) throw std::runtime_error("abc_train: non-finite policy parameters");
    return res;
}

} // namespace abcil
