#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "abcil/io.hpp"
#include "abcil/nn.hpp"
#include "abcil/rng.hpp"

using namespace abcil;

TEST_CASE("initial weights follow 1/fan_in scaling with zero biases") {
    Mlp net({4, 256, 256, 2}, Act::tanh_sat, Act::identity, 5);
    const double* w = net.weight(0);
    double sum = 0.0, sq = 0.0;
    const int n = 4 * 256;
    for (int i = 0; i < n; ++i) {
        sum += w[i];
        sq += w[i] * w[i];
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.05);
    REQUIRE(var == Catch::Approx(0.25).margin(0.03));

    const double* w1 = net.weight(1);
    double sq1 = 0.0;
    for (int i = 0; i < 256 * 256; ++i) sq1 += w1[i] * w1[i];
    REQUIRE(sq1 / (256 * 256) == Catch::Approx(1.0 / 256).epsilon(0.1));

    for (int l = 0; l < 3; ++l) {
        const double* b = net.bias(l);
        for (int o = 0; o < net.layer_sizes()[l + 1]; ++o) REQUIRE(b[o] == 0.0);
    }
}

TEST_CASE("construction rejects degenerate shapes") {
    REQUIRE_THROWS(Mlp({3}, Act::tanh_sat, Act::identity, 0));
    REQUIRE_THROWS(Mlp({3, 0, 2}, Act::tanh_sat, Act::identity, 0));
}

TEST_CASE("forward matches a hand computation") {
    // 1 -> 2 -> 1, tanh hidden, identity out
    Mlp net({1, 2, 1}, Act::tanh_sat, Act::identity, 0);
    double* p = net.params();
    // W0 = [2; -1], b0 = [0.5, 0], W1 = [1, 3], b1 = [-0.25]
    p[0] = 2.0;
    p[1] = -1.0;
    p[2] = 0.5;
    p[3] = 0.0;
    p[4] = 1.0;
    p[5] = 3.0;
    p[6] = -0.25;
    const double x = 0.3;
    const double h0 = std::tanh(2.0 * x + 0.5);
    const double h1 = std::tanh(-1.0 * x);
    const double want = h0 + 3.0 * h1 - 0.25;
    const std::vector<double> out = net.forward({x});
    REQUIRE(out.size() == 1);
    REQUIRE(out[0] == Catch::Approx(want).epsilon(1e-14));
}

TEST_CASE("backward matches the hand chain rule") {
    Mlp net({1, 1, 1}, Act::tanh_sat, Act::identity, 0);
    double* p = net.params();
    p[0] = 0.7;  // w0
    p[1] = 0.2;  // b0
    p[2] = -1.3; // w1
    p[3] = 0.0;  // b1
    const double x = 0.4;
    Mlp::Cache cache;
    net.forward({x}, &cache);
    Mlp::GradBundle g = net.backward(cache, {1.0});
    const double z = 0.7 * x + 0.2;
    const double h = std::tanh(z);
    const double dh = 1.0 - h * h;
    REQUIRE(g.param_grads[0] == Catch::Approx(-1.3 * dh * x).epsilon(1e-13));
    REQUIRE(g.param_grads[1] == Catch::Approx(-1.3 * dh).epsilon(1e-13));
    REQUIRE(g.param_grads[2] == Catch::Approx(h).epsilon(1e-13));
    REQUIRE(g.param_grads[3] == Catch::Approx(1.0).epsilon(1e-13));
    REQUIRE(g.input_grad[0] == Catch::Approx(-1.3 * dh * 0.7).epsilon(1e-13));
}

TEST_CASE("analytic gradients agree with central differences") {
    Rng rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        Mlp net({3, 8, 8, 2}, Act::tanh_sat, trial % 2 ? Act::tanh_sat : Act::identity,
                rng.next_u64());
        std::vector<double> x(3);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        REQUIRE(finite_diff_check(net, x, 1e-5) < 1e-4);
    }
}

TEST_CASE("relu nets also pass the gradient check away from kinks") {
    Mlp net({2, 6, 1}, Act::relu, Act::identity, 17);
    REQUIRE(finite_diff_check(net, {0.37, -0.81}, 1e-6) < 1e-4);
}

TEST_CASE("batched forward agrees with the single-sample path") {
    Mlp net({4, 64, 64, 2}, Act::tanh_sat, Act::tanh_sat, 3);
    Rng rng(8);
    const int bs = 7;
    std::vector<double> x(bs * 4);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    Mlp::BatchCache cache;
    net.forward_batch(x, bs, cache);
    const std::vector<double>& out = net.batch_output(cache);
    for (int r = 0; r < bs; ++r) {
        const std::vector<double> single =
            net.forward({x[r * 4], x[r * 4 + 1], x[r * 4 + 2], x[r * 4 + 3]});
        for (int k = 0; k < 2; ++k)
            REQUIRE(out[r * 2 + k] == Catch::Approx(single[k]).margin(1e-12));
    }
}

TEST_CASE("batched backward equals the mean of single-sample gradients") {
    Mlp net({3, 5, 2}, Act::tanh_sat, Act::identity, 21);
    Rng rng(4);
    const int bs = 6;
    std::vector<double> x(bs * 3);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);

    Mlp::BatchCache cache;
    net.forward_batch(x, bs, cache);
    std::vector<double> og(bs * 2, 1.0 / bs);
    std::vector<double> got, input_grads;
    net.backward_batch(cache, og, got, &input_grads);

    std::vector<double> want(net.n_params(), 0.0);
    for (int r = 0; r < bs; ++r) {
        Mlp::Cache c;
        net.forward({x[r * 3], x[r * 3 + 1], x[r * 3 + 2]}, &c);
        Mlp::GradBundle g = net.backward(c, {1.0, 1.0});
        for (size_t i = 0; i < want.size(); ++i) want[i] += g.param_grads[i] / bs;
        for (int k = 0; k < 3; ++k)
            REQUIRE(input_grads[r * 3 + k] == Catch::Approx(g.input_grad[k] / bs).margin(1e-12));
    }
    for (size_t i = 0; i < want.size(); ++i)
        REQUIRE(got[i] == Catch::Approx(want[i]).margin(1e-12));
}

TEST_CASE("one adam step from zero moments moves a parameter by about lr") {
    std::vector<double> param{0.0};
    std::vector<double> grad{1.0};
    AdamState st(1, 0.1);
    adam_step(param.data(), grad.data(), 1, st);
    REQUIRE(param[0] == Catch::Approx(-0.1).margin(1e-7));
    REQUIRE(st.step_count == 1);
}

TEST_CASE("adam rejects non-finite gradients") {
    std::vector<double> param{0.0};
    std::vector<double> grad{std::nan("")};
    AdamState st(1, 0.1);
    REQUIRE_THROWS(adam_step(param.data(), grad.data(), 1, st));
}

TEST_CASE("checkpoint round trip is bitwise") {
    Mlp net({2, 16, 3}, Act::tanh_sat, Act::tanh_sat, 31);
    const std::string text = net.serialize();
    Mlp back = Mlp::deserialize(text);
    REQUIRE(back.n_params() == net.n_params());
    for (size_t i = 0; i < net.n_params(); ++i) REQUIRE(back.params()[i] == net.params()[i]);
    REQUIRE(back.serialize() == text);

    const std::filesystem::path path = std::filesystem::temp_directory_path() / "abcil_ckpt_test.txt";
    net.save(path);
    Mlp loaded = Mlp::load(path);
    for (size_t i = 0; i < net.n_params(); ++i) REQUIRE(loaded.params()[i] == net.params()[i]);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint parser reports malformed input") {
    Mlp net({2, 3, 1}, Act::tanh_sat, Act::identity, 1);
    const std::string good = net.serialize();

    REQUIRE_THROWS(Mlp::deserialize("not a checkpoint\n1 2 3\n"));

    // drop the last line
    std::string truncated = good;
    truncated.erase(truncated.rfind('\n', truncated.size() - 2) + 1);
    REQUIRE_THROWS(Mlp::deserialize(truncated));

    // corrupt a value row with an extra number
    std::string extra = good;
    extra.insert(extra.find('\n', extra.find('\n') + 1), " 0.5");
    REQUIRE_THROWS(Mlp::deserialize(extra));
}

TEST_CASE("deserializing preserves activations") {
    Mlp net({3, 4, 2}, Act::relu, Act::tanh_sat, 9);
    Mlp back = Mlp::deserialize(net.serialize());
    const std::vector<double> x{0.2, -0.4, 0.9};
    const std::vector<double> a = net.forward(x);
    const std::vector<double> b = back.forward(x);
    for (size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("finite_diff_check rejects a nonpositive step") {
    Mlp net({1, 2, 1}, Act::tanh_sat, Act::identity, 2);
    REQUIRE_THROWS(finite_diff_check(net, {0.1}, 0.0));
}
