#pragma once

#include <vector>

#include "env.hpp"
#include "nn.hpp"
#include "rng.hpp"

namespace abcil {

// deterministic net policy: tanh-headed Mlp scaled to the env action bound.
// Checkpoints store the bare Mlp; the scale is re-derived from the env id.
struct NetPolicy {
    Mlp net;
    double scale = 1.0;

    std::vector<double> act(const std::vector<double>& obs) const {
        std::vector<double> a = net.forward(obs);
        for (double& v : a) v *= scale;
        return a;
    }

    std::vector<double> act(const std::vector<double>& obs, Rng&) const { return act(obs); }

    // out <- scale * net(x), row-major bs x action_dim
    void act_batch(const std::vector<double>& x, int bs, Mlp::BatchCache& cache,
                   std::vector<double>& out) const {
        net.forward_batch(x, bs, cache);
        out = net.batch_output(cache);
        for (double& v : out) v *= scale;
    }
};

// unit-vector pursuit of a fixed target plus Gaussian noise, clamped
struct ExpertScript {
    double target[2] = {0.0, 0.0};
    double noise_std = 0.05;
    double speed = 1.0;

    std::vector<double> act(const std::vector<double>& obs, Rng& rng) const {
        const double dx = target[0] - obs[0];
        const double dy = target[1] - obs[1];
        const double n = std::sqrt(dx * dx + dy * dy);
        double ux = 0.0, uy = 0.0;
        if (n > 1e-12) {
            ux = dx / n;
            uy = dy / n;
        }
        const double nx = rng.normal(0.0, noise_std);
        const double ny = rng.normal(0.0, noise_std);
        return {clamp(speed * ux + nx, -1.0, 1.0), clamp(speed * uy + ny, -1.0, 1.0)};
    }
};

struct UniformRandomPolicy {
    std::vector<double> act(const std::vector<double>&, Rng& rng) const {
        const double ax = rng.uniform(-1.0, 1.0);
        const double ay = rng.uniform(-1.0, 1.0);
        return {ax, ay};
    }
};

} // namespace abcil
