#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dataset.hpp"
#include "nn.hpp"
#include "policy.hpp"
#include "rng.hpp"

namespace abcil {

struct BcConfig {
    int epochs = 200;
    int batch_size = 256;
    double lr = 1e-3;
    std::vector<int> policy_layers = {64, 64}; // hidden widths
    uint64_t seed = 0;
};

struct BcResult {
    NetPolicy policy;
    std::vector<double> loss_history; // mean minibatch MSE per epoch
};

// plain MSE regression of actions on states; with a fixed-variance Gaussian
// policy this is exactly the maximum-likelihood mean predictor
inline BcResult train_bc(const Dataset& data, const BcConfig& cfg, double action_scale = 1.0) {
    if (data.size() == 0) throw std::runtime_error("train_bc: empty dataset");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.lr <= 0.0)
        throw std::runtime_error("train_bc: bad config");

    Rng rng(cfg.seed);
    std::vector<int> sizes;
    sizes.push_back(data.state_dim);
    for (int h : cfg.policy_layers) sizes.push_back(h);
    sizes.push_back(data.action_dim);

    BcResult res;
    res.policy.scale = action_scale;
    res.policy.net = Mlp(sizes, Act::tanh_sat, Act::tanh_sat, rng.next_u64());
    Mlp& net = res.policy.net;
    AdamState opt(net.n_params(), cfg.lr);

    const int bs = cfg.batch_size;
    const int sd = data.state_dim, ad = data.action_dim;
    const size_t n = data.size();
    const int batches_per_epoch = std::max<size_t>(1, n / bs);

    Mlp::BatchCache cache;
    std::vector<double> x(static_cast<size_t>(bs) * sd);
    std::vector<double> target(static_cast<size_t>(bs) * ad);
    std::vector<double> og(static_cast<size_t>(bs) * ad);
    std::vector<double> grads;

    for (int ep = 0; ep < cfg.epochs; ++ep) {
        double ep_loss = 0.0;
        for (int b = 0; b < batches_per_epoch; ++b) {
            for (int r = 0; r < bs; ++r) {
                const size_t idx = rng.uniform_index(n);
                const double* s = data.state(idx);
                for (int i = 0; i < sd; ++i) x[static_cast<size_t>(r) * sd + i] = s[i];
                const double* a = data.action(idx);
                for (int i = 0; i < ad; ++i) target[static_cast<size_t>(r) * ad + i] = a[i];
            }
            net.forward_batch(x, bs, cache);
            const std::vector<double>& out = net.batch_output(cache);
            double loss = 0.0;
            const double inv = 1.0 / (static_cast<double>(bs) * ad);
            for (size_t i = 0; i < out.size(); ++i) {
                const double diff = action_scale * out[i] - target[i];
                loss += diff * diff;
                og[i] = 2.0 * diff * action_scale * inv;
            }
            loss *= inv;
            if (!std::isfinite(loss)) throw std::runtime_error("train_bc: loss became non-finite");
            ep_loss += loss;
            net.backward_batch(cache, og, grads);
            adam_step(net, grads, opt);
        }
        res.loss_history.push_back(ep_loss / batches_per_epoch);
    }
    if (!net.finite()) throw std::runtime_error("train_bc: non-finite parameters after training");
    return res;
}

} // namespace abcil
