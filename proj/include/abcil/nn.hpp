#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "io.hpp"
#include "rng.hpp"

#if defined(ABCIL_USE_LIBMVEC) && defined(__x86_64__)
#include <immintrin.h>
#if defined(__AVX512F__)
extern "C" __m512d _ZGVeN8v_tanh(__m512d);
#elif defined(__AVX2__)
extern "C" __m256d _ZGVdN4v_tanh(__m256d);
#endif
#endif

namespace abcil {

// elementwise tanh over a buffer; glibc's vector math kernels when available
inline void tanh_array(double* v, size_t n) {
#if defined(ABCIL_USE_LIBMVEC) && defined(__x86_64__) && defined(__AVX512F__)
    size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm512_storeu_pd(v + i, _ZGVeN8v_tanh(_mm512_loadu_pd(v + i)));
    for (; i < n; ++i) v[i] = std::tanh(v[i]);
#elif defined(ABCIL_USE_LIBMVEC) && defined(__x86_64__) && defined(__AVX2__)
    size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(v + i, _ZGVdN4v_tanh(_mm256_loadu_pd(v + i)));
    for (; i < n; ++i) v[i] = std::tanh(v[i]);
#else
    for (size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
#endif
}

enum class Act { identity, tanh_sat, relu };

inline std::string act_name(Act a) {
    switch (a) {
        case Act::identity: return "identity";
        case Act::tanh_sat: return "tanh";
        case Act::relu:     return "relu";
    }
    return "?";
}

inline Act act_from_name(const std::string& s) {
    if (s == "identity") return Act::identity;
    if (s == "tanh")     return Act::tanh_sat;
    if (s == "relu")     return Act::relu;
    throw std::runtime_error("unknown activation: " + s);
}

// Feed-forward net. Parameters live in one flat vector, per layer first the
// (out x in) row-major weight block, then the bias block. Flat storage keeps
// the optimizer and the checkpoint format trivial.
class Mlp {
public:
    Mlp() = default;

    Mlp(std::vector<int> layer_sizes, Act hidden, Act output, uint64_t seed)
        : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output) {
        if (sizes_.size() < 2) throw std::runtime_error("mlp needs at least 2 layers");
        for (int s : sizes_)
            if (s < 1) throw std::runtime_error("mlp layer width must be >= 1");
        build_offsets();
        params_.assign(total_params_, 0.0);
        Rng rng(seed);
        for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
            const double scale = std::sqrt(1.0 / sizes_[l]);
            double* w = weight(l);
            for (int i = 0; i < sizes_[l + 1] * sizes_[l]; ++i) w[i] = scale * rng.normal();
            // biases stay zero
        }
    }

    int n_layers() const { return static_cast<int>(sizes_.size()) - 1; }
    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    const std::vector<int>& layer_sizes() const { return sizes_; }
    Act hidden_activation() const { return hidden_; }
    Act output_activation() const { return output_; }

    size_t n_params() const { return total_params_; }
    double* params() { return params_.data(); }
    const double* params() const { return params_.data(); }
    std::vector<double>& param_vector() { return params_; }
    const std::vector<double>& param_vector() const { return params_; }

    double* weight(size_t l) { return params_.data() + w_off_[l]; }
    const double* weight(size_t l) const { return params_.data() + w_off_[l]; }
    double* bias(size_t l) { return params_.data() + b_off_[l]; }
    const double* bias(size_t l) const { return params_.data() + b_off_[l]; }

    bool finite() const {
        for (double p : params_)
            if (!std::isfinite(p)) return false;
        return true;
    }

    // ---- single-sample path ----

    struct Cache {
        // acts[0] is the input, acts[k] the activation leaving layer k
        std::vector<std::vector<double>> acts;
        std::vector<std::vector<double>> pre;
    };

    std::vector<double> forward(const std::vector<double>& input, Cache* cache = nullptr) const {
        if (static_cast<int>(input.size()) != input_dim())
            throw std::runtime_error("forward: input size mismatch");
        std::vector<double> a = input;
        if (cache) {
            cache->acts.assign(1, a);
            cache->pre.clear();
        }
        for (int l = 0; l < n_layers(); ++l) {
            const int nin = sizes_[l], nout = sizes_[l + 1];
            std::vector<double> z(nout);
            const double* w = weight(l);
            const double* b = bias(l);
            for (int o = 0; o < nout; ++o)
                z[o] = b[o] + dot(w + static_cast<size_t>(o) * nin, a.data(), nin);
            if (cache) cache->pre.push_back(z);
            const Act act = (l == n_layers() - 1) ? output_ : hidden_;
            for (double& v : z) v = apply_act(act, v);
            a = std::move(z);
            if (cache) cache->acts.push_back(a);
        }
        return a;
    }

    struct GradBundle {
        std::vector<double> param_grads; // flat, same layout as params
        std::vector<double> input_grad;
    };

    // gradients of (output . output_grad) wrt parameters and input
    GradBundle backward(const Cache& cache, const std::vector<double>& output_grad) const {
        if (cache.acts.size() != static_cast<size_t>(n_layers()) + 1)
            throw std::runtime_error("backward: cache does not match net");
        if (static_cast<int>(output_grad.size()) != output_dim())
            throw std::runtime_error("backward: output_grad size mismatch");
        GradBundle g;
        g.param_grads.assign(total_params_, 0.0);
        std::vector<double> delta = output_grad;
        for (int l = n_layers() - 1; l >= 0; --l) {
            const int nin = sizes_[l], nout = sizes_[l + 1];
            const Act act = (l == n_layers() - 1) ? output_ : hidden_;
            for (int o = 0; o < nout; ++o)
                delta[o] *= act_deriv(act, cache.pre[l][o], cache.acts[l + 1][o]);
            double* dw = g.param_grads.data() + w_off_[l];
            double* db = g.param_grads.data() + b_off_[l];
            const std::vector<double>& a = cache.acts[l];
            for (int o = 0; o < nout; ++o) {
                db[o] = delta[o];
                double* dwrow = dw + static_cast<size_t>(o) * nin;
                for (int i = 0; i < nin; ++i) dwrow[i] = delta[o] * a[i];
            }
            std::vector<double> prev(nin, 0.0);
            const double* w = weight(l);
            for (int o = 0; o < nout; ++o) {
                const double* wrow = w + static_cast<size_t>(o) * nin;
                for (int i = 0; i < nin; ++i) prev[i] += delta[o] * wrow[i];
            }
            delta = std::move(prev);
        }
        g.input_grad = std::move(delta);
        return g;
    }

    // ---- batched path (row-major bs x dim buffers), used by the trainers ----

    struct BatchCache {
        int bs = 0;
        std::vector<std::vector<double>> acts; // acts[k]: bs x sizes_[k]
        std::vector<std::vector<double>> pre;
    };

    void forward_batch(const std::vector<double>& x, int bs, BatchCache& cache) const {
        if (static_cast<int>(x.size()) != bs * input_dim())
            throw std::runtime_error("forward_batch: input size mismatch");
        cache.bs = bs;
        cache.acts.resize(static_cast<size_t>(n_layers()) + 1);
        cache.pre.resize(n_layers());
        cache.acts[0] = x;
        for (int l = 0; l < n_layers(); ++l) {
            const int nin = sizes_[l], nout = sizes_[l + 1];
            std::vector<double>& z = cache.pre[l];
            z.resize(static_cast<size_t>(bs) * nout);
            const std::vector<double>& a = cache.acts[l];
            const double* w = weight(l);
            const double* b = bias(l);
            for (int r = 0; r < bs; ++r) {
                const double* arow = a.data() + static_cast<size_t>(r) * nin;
                double* zrow = z.data() + static_cast<size_t>(r) * nout;
                for (int o = 0; o < nout; ++o)
                    zrow[o] = b[o] + dot(w + static_cast<size_t>(o) * nin, arow, nin);
            }
            const Act act = (l == n_layers() - 1) ? output_ : hidden_;
            std::vector<double>& out = cache.acts[l + 1];
            out = z;
            if (act == Act::tanh_sat)
                tanh_array(out.data(), out.size());
            else if (act == Act::relu)
                for (double& v : out) v = v > 0.0 ? v : 0.0;
        }
    }

    const std::vector<double>& batch_output(const BatchCache& cache) const {
        return cache.acts.back();
    }

    // output_grad rows already carry any 1/bs loss scaling; param gradients
    // accumulate the exact gradient of the scaled loss, input gradients are
    // returned per row.
    void backward_batch(const BatchCache& cache, const std::vector<double>& output_grad,
                        std::vector<double>& param_grads, std::vector<double>* input_grads = nullptr) const {
        const int bs = cache.bs;
        if (static_cast<int>(output_grad.size()) != bs * output_dim())
            throw std::runtime_error("backward_batch: output_grad size mismatch");
        param_grads.assign(total_params_, 0.0);
        std::vector<double> delta = output_grad;
        std::vector<double> prev;
        for (int l = n_layers() - 1; l >= 0; --l) {
            const int nin = sizes_[l], nout = sizes_[l + 1];
            const Act act = (l == n_layers() - 1) ? output_ : hidden_;
            const std::vector<double>& pre = cache.pre[l];
            const std::vector<double>& post = cache.acts[l + 1];
            for (size_t i = 0; i < delta.size(); ++i)
                delta[i] *= act_deriv(act, pre[i], post[i]);
            double* dw = param_grads.data() + w_off_[l];
            double* db = param_grads.data() + b_off_[l];
            const std::vector<double>& a = cache.acts[l];
            for (int r = 0; r < bs; ++r) {
                const double* arow = a.data() + static_cast<size_t>(r) * nin;
                const double* drow = delta.data() + static_cast<size_t>(r) * nout;
                for (int o = 0; o < nout; ++o) {
                    const double g = drow[o];
                    db[o] += g;
                    double* dwrow = dw + static_cast<size_t>(o) * nin;
                    for (int i = 0; i < nin; ++i) dwrow[i] += g * arow[i];
                }
            }
            const bool need_prev = (l > 0) || (input_grads != nullptr);
            if (!need_prev) break;
            prev.assign(static_cast<size_t>(bs) * nin, 0.0);
            const double* w = weight(l);
            for (int r = 0; r < bs; ++r) {
                double* prow = prev.data() + static_cast<size_t>(r) * nin;
                const double* drow = delta.data() + static_cast<size_t>(r) * nout;
                for (int o = 0; o < nout; ++o) {
                    const double g = drow[o];
                    const double* wrow = w + static_cast<size_t>(o) * nin;
                    for (int i = 0; i < nin; ++i) prow[i] += g * wrow[i];
                }
            }
            delta = std::move(prev);
        }
        if (input_grads) *input_grads = std::move(delta);
    }

    // ---- checkpoint ----

    std::string serialize() const {
        std::ostringstream out;
        out << "mlp";
        for (int s : sizes_) out << ' ' << s;
        out << ' ' << act_name(hidden_) << ' ' << act_name(output_) << '\n';
        for (int l = 0; l < n_layers(); ++l) {
            const int nw = sizes_[l + 1] * sizes_[l];
            const double* w = weight(l);
            for (int i = 0; i < nw; ++i) out << (i ? " " : "") << fmt_double(w[i]);
            out << '\n';
            const double* b = bias(l);
            for (int i = 0; i < sizes_[l + 1]; ++i) out << (i ? " " : "") << fmt_double(b[i]);
            out << '\n';
        }
        return out.str();
    }

    void save(const std::filesystem::path& path) const { atomic_write(path, serialize()); }

    static Mlp deserialize(const std::string& text) {
        std::istringstream in(text);
        std::string header;
        if (!std::getline(in, header)) throw std::runtime_error("checkpoint: empty file");
        std::istringstream hs(header);
        std::string tag;
        hs >> tag;
        if (tag != "mlp") throw std::runtime_error("checkpoint: bad header tag '" + tag + "'");
        std::vector<int> sizes;
        std::vector<std::string> words;
        std::string word;
        while (hs >> word) words.push_back(word);
        if (words.size() < 4) throw std::runtime_error("checkpoint: short header");
        for (size_t i = 0; i + 2 < words.size(); ++i) sizes.push_back(std::stoi(words[i]));
        Act hidden = act_from_name(words[words.size() - 2]);
        Act output = act_from_name(words[words.size() - 1]);
        Mlp net(sizes, hidden, output, 0);
        int line_no = 1;
        for (int l = 0; l < net.n_layers(); ++l) {
            read_tensor_line(in, net.weight(l), sizes[l + 1] * sizes[l], ++line_no);
            read_tensor_line(in, net.bias(l), sizes[l + 1], ++line_no);
        }
        return net;
    }

    static Mlp load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

private:
    // eight independent accumulators so the compiler can vectorize the
    // reduction with a fixed, run-to-run-identical summation order
    static double dot(const double* x, const double* y, int n) {
        double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        int i = 0;
        for (; i + 8 <= n; i += 8)
            for (int j = 0; j < 8; ++j) acc[j] += x[i + j] * y[i + j];
        double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
        for (; i < n; ++i) s += x[i] * y[i];
        return s;
    }

    static double apply_act(Act a, double v) {
        switch (a) {
            case Act::identity: return v;
            case Act::tanh_sat: return std::tanh(v);
            case Act::relu:     return v > 0.0 ? v : 0.0;
        }
        return v;
    }

    // derivative from pre-activation z and post-activation y
    static double act_deriv(Act a, double z, double y) {
        switch (a) {
            case Act::identity: return 1.0;
            case Act::tanh_sat: return 1.0 - y * y;
            case Act::relu:     return z > 0.0 ? 1.0 : 0.0;
        }
        return 1.0;
    }

    static void read_tensor_line(std::istream& in, double* dst, int count, int line_no) {
        std::string line;
        if (!std::getline(in, line))
            throw std::runtime_error("checkpoint: truncated at line " + std::to_string(line_no));
        std::istringstream ls(line);
        for (int i = 0; i < count; ++i) {
            if (!(ls >> dst[i]))
                throw std::runtime_error("checkpoint: short tensor at line " + std::to_string(line_no));
        }
        double extra;
        if (ls >> extra)
            throw std::runtime_error("checkpoint: extra values at line " + std::to_string(line_no));
    }

    void build_offsets() {
        w_off_.clear();
        b_off_.clear();
        size_t off = 0;
        for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
            w_off_.push_back(off);
            off += static_cast<size_t>(sizes_[l + 1]) * sizes_[l];
            b_off_.push_back(off);
            off += sizes_[l + 1];
        }
        total_params_ = off;
    }

    std::vector<int> sizes_;
    Act hidden_ = Act::tanh_sat;
    Act output_ = Act::identity;
    std::vector<double> params_;
    std::vector<size_t> w_off_, b_off_;
    size_t total_params_ = 0;
};

inline Mlp init_mlp(const std::vector<int>& layer_sizes, Act hidden, Act output, uint64_t seed) {
    return Mlp(layer_sizes, hidden, output, seed);
}

// ---- Adam ----

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long step_count = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(size_t n_params, double lr_ = 1e-3)
        : first_moment(n_params, 0.0), second_moment(n_params, 0.0), lr(lr_) {}
};

inline void adam_step(double* params, const double* grads, size_t n, AdamState& st) {
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(grads[i]))
            throw std::runtime_error("adam_step: non-finite gradient at index " + std::to_string(i));
    st.step_count += 1;
    const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
    const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
    for (size_t i = 0; i < n; ++i) {
        double& m = st.first_moment[i];
        double& v = st.second_moment[i];
        const double g = grads[i];
        m = st.beta1 * m + (1.0 - st.beta1) * g;
        v = st.beta2 * v + (1.0 - st.beta2) * g * g;
        const double mhat = m / c1;
        const double vhat = v / c2;
        params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.epsilon);
    }
}

inline void adam_step(Mlp& net, const std::vector<double>& grads, AdamState& st) {
    if (grads.size() != net.n_params()) throw std::runtime_error("adam_step: gradient size mismatch");
    adam_step(net.params(), grads.data(), grads.size(), st);
}

// ---- gradient checking ----

// max relative error between analytic and central-difference gradients of
// sum(output), over every parameter and input coordinate
inline double finite_diff_check(Mlp& net, const std::vector<double>& input, double eps) {
    if (eps <= 0.0) throw std::runtime_error("finite_diff_check: eps must be positive");
    Mlp::Cache cache;
    std::vector<double> out = net.forward(input, &cache);
    Mlp::GradBundle g = net.backward(cache, std::vector<double>(out.size(), 1.0));

    auto loss_at = [&](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : net.forward(x)) s += v;
        return s;
    };
    auto rel_err = [](double analytic, double numeric) {
        const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
        return std::fabs(analytic - numeric) / denom;
    };

    double worst = 0.0;
    for (size_t i = 0; i < net.n_params(); ++i) {
        const double keep = net.params()[i];
        net.params()[i] = keep + eps;
        const double up = loss_at(input);
        net.params()[i] = keep - eps;
        const double dn = loss_at(input);
        net.params()[i] = keep;
        worst = std::max(worst, rel_err(g.param_grads[i], (up - dn) / (2.0 * eps)));
    }
    std::vector<double> x = input;
    for (size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double up = loss_at(x);
        x[i] = keep - eps;
        const double dn = loss_at(x);
        x[i] = keep;
        worst = std::max(worst, rel_err(g.input_grad[i], (up - dn) / (2.0 * eps)));
    }
    return worst;
}

} // namespace abcil
