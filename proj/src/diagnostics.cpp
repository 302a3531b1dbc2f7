#include "volcast/diagnostics.hpp"

#include <algorithm>
#include <deque>
#include <random>

#include "volcast/model.hpp"

namespace volcast {

namespace {

/// Owns every leaf tensor of the battery so node pointers stay valid, and
/// hands out randomized values with the reproducibility the battery promises.
struct Battery {
    explicit Battery(std::uint64_t seed) : rng(seed) {}

    std::mt19937_64 rng;
    std::deque<Tensor> store;
    std::deque<LstmParams> lstm_store;
    std::deque<AttentionParams> att_store;
    std::vector<GradCheckEntry> entries;

    // Parameter bundles outlive the check so graph leaves stay valid while
    // gradcheck re-runs the forward pass.
    LstmParams& lstm(int input_dim, int units) {
        lstm_store.push_back(LstmParams::glorot(input_dim, units, rng));
        return lstm_store.back();
    }
    AttentionParams& attention(int hidden_dim, int att_dim) {
        att_store.push_back(AttentionParams::glorot(hidden_dim, att_dim, rng));
        return att_store.back();
    }

    Tensor* leaf(std::vector<int> shape, double lo, double hi) {
        Tensor t = Tensor::zeros(shape, true);
        std::uniform_real_distribution<double> u(lo, hi);
        for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values[i] = u(rng);
        store.push_back(std::move(t));
        return &store.back();
    }

    Tensor* leaf(std::vector<int> shape) { return leaf(shape, -0.9, 0.9); }

    /// Entries pairwise at least 0.05 apart and at least 0.05 from zero, so
    /// kinked operators (max, ReLU, absolute difference) are differentiable
    /// at and around the point.
    Tensor* separated(std::vector<int> shape) {
        Tensor t = Tensor::zeros(shape, true);
        const Eigen::Index n = t.values.size();
        std::vector<double> vals(n);
        std::uniform_real_distribution<double> jitter(-0.02, 0.02);
        for (Eigen::Index i = 0; i < n; ++i)
            vals[i] = 0.1 * (static_cast<double>(i) + 1.0) *
                          (i % 2 == 0 ? 1.0 : -1.0) +
                      jitter(rng);
        std::shuffle(vals.begin(), vals.end(), rng);
        for (Eigen::Index i = 0; i < n; ++i) t.values[i] = vals[i];
        store.push_back(std::move(t));
        return &store.back();
    }

    /// Mean squared error against a randomized fixed target, giving every
    /// output coordinate its own non-uniform cotangent.
    int to_loss(Graph& g, int node, const std::vector<int>& shape) {
        const int target = g.input(shape);
        Eigen::ArrayXd vals(shape_numel(shape));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = u(rng);
        g.set_input(target, vals);
        return g.mse_loss(node, target);
    }

    template <typename Build>
    void check(const std::string& name, Build&& build) {
        Graph g;
        std::vector<Tensor*> params;
        const int loss = build(g, params);
        entries.push_back({name, gradcheck(g, loss, params)});
    }
};

int param_of(Graph& g, std::vector<Tensor*>& params, Tensor* t) {
    params.push_back(t);
    return g.param(t);
}

template <typename Bundle>
void collect_into(Bundle& bundle, std::vector<Tensor*>& params) {
    std::vector<std::pair<std::string, Tensor*>> named;
    bundle.collect("x", named);
    for (auto& [name, t] : named) params.push_back(t);
}

void operator_checks(Battery& b) {
    b.check("op.matmul", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        const int c = param_of(g, p, b.leaf({3, 2}));
        return b.to_loss(g, g.matmul(a, c), {2, 2});
    });
    b.check("op.matmul_vector_sides", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({3}));
        const int m = param_of(g, p, b.leaf({3, 2}));
        const int m2 = param_of(g, p, b.leaf({2, 3}));
        const int v2 = param_of(g, p, b.leaf({3}));
        return b.to_loss(g, g.concat({g.matmul(a, m), g.matmul(m2, v2)}), {4});
    });
    b.check("op.add", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        const int c = param_of(g, p, b.leaf({2, 3}));
        return b.to_loss(g, g.add(a, c), {2, 3});
    });
    b.check("op.add_row_broadcast", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        const int c = param_of(g, p, b.leaf({3}));
        return b.to_loss(g, g.add(a, c), {2, 3});
    });
    b.check("op.concat", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 2}));
        const int c = param_of(g, p, b.leaf({2, 1}));
        const int d = param_of(g, p, b.leaf({2, 3}));
        return b.to_loss(g, g.concat({a, c, d}), {2, 6});
    });
    b.check("op.mul", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        const int c = param_of(g, p, b.leaf({2, 3}));
        return b.to_loss(g, g.mul(a, c), {2, 3});
    });
    b.check("op.absdiff", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}, -0.9, -0.1));
        const int c = param_of(g, p, b.leaf({2, 3}, 0.4, 1.2));
        return b.to_loss(g, g.absdiff(a, c), {2, 3});
    });
    b.check("op.sigmoid", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        return b.to_loss(g, g.sigmoid(a), {2, 3});
    });
    b.check("op.tanh", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        return b.to_loss(g, g.tanh(a), {2, 3});
    });
    b.check("op.relu", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.separated({2, 3}));
        return b.to_loss(g, g.relu(a), {2, 3});
    });
    b.check("op.softplus", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        return b.to_loss(g, g.softplus(a), {2, 3});
    });
    b.check("op.softmax", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 4}));
        return b.to_loss(g, g.softmax(a), {2, 4});
    });
    b.check("op.max_over_rows", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.separated({3, 4}));
        return b.to_loss(g, g.max_over_axis(a, 1), {3});
    });
    b.check("op.max_middle_axis", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.separated({2, 3, 2}));
        return b.to_loss(g, g.max_over_axis(a, 1), {2, 2});
    });
    b.check("op.mean", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        const int c = param_of(g, p, b.leaf({2, 3}));
        return g.mean(g.mul(a, c));
    });
    b.check("op.sum", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        const int c = param_of(g, p, b.leaf({2, 3}));
        return g.sum(g.mul(a, c));
    });
    b.check("op.reshape", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 6}));
        return b.to_loss(g, g.reshape(a, {3, 4}), {3, 4});
    });
    b.check("op.gather_rows", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({4, 3}));
        return b.to_loss(g, g.gather_rows(a, {2, 0, 2, 3}), {4, 3});
    });
    b.check("op.scale_rows", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({3, 4}));
        const int s = param_of(g, p, b.leaf({3}));
        return b.to_loss(g, g.scale_rows(a, s), {3, 4});
    });
    b.check("op.weighted_pool", [&](Graph& g, std::vector<Tensor*>& p) {
        const int vals = param_of(g, p, b.leaf({6, 2}));
        const int w = param_of(g, p, b.leaf({2, 3}));
        return b.to_loss(g, g.weighted_pool(vals, w), {2, 2});
    });
    b.check("op.mse_loss", [&](Graph& g, std::vector<Tensor*>& p) {
        const int a = param_of(g, p, b.leaf({2, 3}));
        const int c = param_of(g, p, b.leaf({2, 3}));
        return g.mse_loss(a, c);
    });
    b.check("op.multilabel_logloss", [&](Graph& g, std::vector<Tensor*>& p) {
        const int z = param_of(g, p, b.leaf({2, 3}));
        const int t = g.input({2, 3});
        g.set_input(t, std::vector<double>{1, 0, 1, 0, 0, 1});
        return g.multilabel_logloss(g.sigmoid(z), t);
    });
    b.check("op.categorical_logloss", [&](Graph& g, std::vector<Tensor*>& p) {
        const int z = param_of(g, p, b.leaf({2, 3}));
        const int t = g.input({2, 3});
        g.set_input(t, std::vector<double>{0, 1, 0, 1, 0, 0});
        return g.categorical_logloss(g.softmax(z), t);
    });
}

void composite_checks(Battery& b) {
    constexpr double kMask = -1e30;

    b.check("net.lstm_step", [&](Graph& g, std::vector<Tensor*>& p) {
        LstmParams& lp = b.lstm(3, 2);
        const auto nodes = build::LstmNodes::params(g, lp);
        collect_into(lp, p);
        const int x = param_of(g, p, b.leaf({2, 3}));
        const int h0 = param_of(g, p, b.leaf({2, 2}, -0.5, 0.5));
        const int c0 = param_of(g, p, b.leaf({2, 2}, -0.5, 0.5));
        const auto [h, c] = nodes.step(g, x, h0, c0);
        return b.to_loss(g, g.concat({h, c}), {2, 4});
    });

    auto bilstm_block = [&](Graph& g, std::vector<Tensor*>& p,
                            std::vector<int>& xs, std::vector<int>& mask,
                            std::vector<int>& mask_inv) {
        for (int t = 0; t < 3; ++t) xs.push_back(param_of(g, p, b.leaf({2, 3})));
        const double m[3][2] = {{1, 1}, {1, 1}, {1, 0}};
        for (int t = 0; t < 3; ++t) {
            const int mt = g.input({2});
            const int it = g.input({2});
            g.set_input(mt, std::vector<double>{m[t][0], m[t][1]});
            g.set_input(it, std::vector<double>{1 - m[t][0], 1 - m[t][1]});
            mask.push_back(mt);
            mask_inv.push_back(it);
        }
    };

    b.check("net.bilstm_attention", [&](Graph& g, std::vector<Tensor*>& p) {
        LstmParams& fw = b.lstm(3, 2);
        LstmParams& bw = b.lstm(3, 2);
        AttentionParams& at = b.attention(4, 3);
        const auto fn = build::LstmNodes::params(g, fw);
        const auto bn = build::LstmNodes::params(g, bw);
        const auto an = build::AttentionNodes::params(g, at);
        collect_into(fw, p);
        collect_into(bw, p);
        collect_into(at, p);
        std::vector<int> xs, mask, mask_inv;
        bilstm_block(g, p, xs, mask, mask_inv);
        const auto steps = build::bilstm_steps(g, xs, fn, bn, mask, mask_inv);
        const int bias = g.input({2, 3});
        g.set_input(bias, std::vector<double>{0, 0, 0, 0, 0, kMask});
        return b.to_loss(g, build::attention_pool(g, steps, an, bias), {2, 4});
    });

    b.check("net.bilstm_maxpool", [&](Graph& g, std::vector<Tensor*>& p) {
        LstmParams& fw = b.lstm(3, 2);
        LstmParams& bw = b.lstm(3, 2);
        const auto fn = build::LstmNodes::params(g, fw);
        const auto bn = build::LstmNodes::params(g, bw);
        collect_into(fw, p);
        collect_into(bw, p);
        std::vector<int> xs, mask, mask_inv;
        bilstm_block(g, p, xs, mask, mask_inv);
        const auto steps = build::bilstm_steps(g, xs, fn, bn, mask, mask_inv);
        std::vector<int> bias;
        const double m[3][2] = {{1, 1}, {1, 1}, {1, 0}};
        for (int t = 0; t < 3; ++t) {
            const int bt = g.input({2, 4});
            std::vector<double> vals(8, 0.0);
            for (int r = 0; r < 2; ++r)
                if (m[t][r] == 0)
                    for (int c = 0; c < 4; ++c) vals[r * 4 + c] = kMask;
            g.set_input(bt, vals);
            bias.push_back(bt);
        }
        return b.to_loss(g, build::max_pool(g, steps, bias), {2, 4});
    });

    b.check("net.word_attention", [&](Graph& g, std::vector<Tensor*>& p) {
        AttentionParams& at = b.attention(3, 2);
        const auto an = build::AttentionNodes::params(g, at);
        collect_into(at, p);
        std::vector<int> words;
        for (int t = 0; t < 4; ++t) words.push_back(param_of(g, p, b.leaf({2, 3})));
        const int bias = g.input({2, 4});
        std::vector<double> bias_vals(8, 0.0);
        bias_vals[7] = kMask;  // final word of row 1 is padding
        g.set_input(bias, bias_vals);
        return b.to_loss(g, build::attention_pool(g, words, an, bias), {2, 3});
    });

    b.check("net.relevance_attention", [&](Graph& g, std::vector<Tensor*>& p) {
        // Two day-groups of two headline vectors each.
        AttentionParams& at = b.attention(3, 2);
        const int sent = param_of(g, p, b.leaf({4, 3}));
        const int w = g.param(&at.w);
        const int bv = g.param(&at.b);
        const int v = g.param(&at.v);
        collect_into(at, p);
        const int scores = g.matmul(g.sigmoid(g.add(g.matmul(sent, w), bv)), v);
        const int grouped = g.reshape(scores, {2, 2});
        const int bias = g.input({2, 2});
        g.set_input(bias, std::vector<double>{0, 0, 0, kMask});
        const int weights = g.softmax(g.add(grouped, bias));
        return b.to_loss(g, g.weighted_pool(sent, weights), {2, 3});
    });

    b.check("net.zi_temporal", [&](Graph& g, std::vector<Tensor*>& p) {
        const int dn = param_of(g, p, b.leaf({3, 3}));  // one sample, three days
        const int has = g.input({3});
        const int col = g.input({3, 1});
        g.set_input(has, std::vector<double>{1, 0, 1});
        g.set_input(col, std::vector<double>{0, 1, 0});
        const int zi = g.concat({g.scale_rows(dn, has), col});
        LstmParams& fw = b.lstm(4, 2);
        LstmParams& bw = b.lstm(4, 2);
        AttentionParams& at = b.attention(4, 2);
        const auto fn = build::LstmNodes::params(g, fw);
        const auto bn = build::LstmNodes::params(g, bw);
        const auto an = build::AttentionNodes::params(g, at);
        collect_into(fw, p);
        collect_into(bw, p);
        collect_into(at, p);
        std::vector<int> xs;
        for (int t = 0; t < 3; ++t) xs.push_back(g.gather_rows(zi, {t}));
        const auto steps = build::bilstm_steps(g, xs, fn, bn);
        return b.to_loss(g, build::attention_pool(g, steps, an), {1, 4});
    });

    b.check("net.price_encoder", [&](Graph& g, std::vector<Tensor*>& p) {
        LstmParams& first = b.lstm(4, 3);
        LstmParams& second = b.lstm(3, 3);
        const auto n1 = build::LstmNodes::params(g, first);
        const auto n2 = build::LstmNodes::params(g, second);
        collect_into(first, p);
        collect_into(second, p);
        const int zero2 = g.input({2, 3});
        g.set_input(zero2, std::vector<double>(6, 0.0));
        int h1 = zero2, c1 = zero2, h2 = zero2, c2 = zero2;
        for (int t = 0; t < 3; ++t) {
            const int x = param_of(g, p, b.leaf({2, 4}));
            std::tie(h1, c1) = n1.step(g, x, h1, c1);
            std::tie(h2, c2) = n2.step(g, h1, h2, c2);
        }
        return b.to_loss(g, h2, {2, 3});
    });

    auto pair_features = [&](Graph& g, std::vector<Tensor*>& p) {
        const int sp = param_of(g, p, b.leaf({2, 3}, -0.9, -0.1));
        const int sh = param_of(g, p, b.leaf({2, 3}, 0.3, 1.1));
        return g.concat({sp, sh, g.absdiff(sp, sh), g.mul(sp, sh)});
    };

    b.check("net.head_multilabel", [&](Graph& g, std::vector<Tensor*>& p) {
        const int feats = pair_features(g, p);
        const int w = param_of(g, p, b.leaf({12, 5}));
        const int bias = param_of(g, p, b.leaf({5}));
        const int pred = g.sigmoid(g.add(g.matmul(feats, w), bias));
        const int t = g.input({2, 5});
        g.set_input(t, std::vector<double>{1, 0, 0, 1, 1, 0, 1, 0, 0, 1});
        return g.multilabel_logloss(pred, t);
    });

    b.check("net.head_entailment", [&](Graph& g, std::vector<Tensor*>& p) {
        const int feats = pair_features(g, p);
        const int w1 = param_of(g, p, b.leaf({12, 4}));
        const int b1 = param_of(g, p, b.leaf({4}));
        const int w2 = param_of(g, p, b.leaf({4, 3}));
        const int b2 = param_of(g, p, b.leaf({3}));
        const int hidden = g.softplus(g.add(g.matmul(feats, w1), b1));
        const int pred = g.softmax(g.add(g.matmul(hidden, w2), b2));
        const int t = g.input({2, 3});
        g.set_input(t, std::vector<double>{0, 0, 1, 1, 0, 0});
        return g.categorical_logloss(pred, t);
    });
}

void full_forward_check(Battery& b) {
    ModelConfig config;
    config.d_w = 3;
    config.n = 2;
    config.d_s = 4;
    config.d_a = 3;
    config.window = 2;
    config.l_n = 2;
    config.l_s = 3;
    config.d_mn = 4;
    config.d_mp = 3;
    config.d_e = 2;
    config.d_jr = 4;
    config.n_stocks = 2;

    const int rows = 7;
    Eigen::MatrixXd emb(rows, config.d_w);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (int r = 1; r < rows; ++r)
        for (int c = 0; c < config.d_w; ++c) emb(r, c) = u(b.rng);
    emb.row(0).setZero();

    ModelParams params = ModelParams::init(config, emb, b.rng());

    std::vector<Sample> samples(2);
    std::uniform_int_distribution<int> tok(0, rows - 1);
    std::bernoulli_distribution drop(0.25);
    for (int i = 0; i < 2; ++i) {
        Sample& s = samples[i];
        s.price_window.resize(config.window, 4);
        for (int r = 0; r < config.window; ++r)
            for (int c = 0; c < 4; ++c) s.price_window(r, c) = 0.02 * u(b.rng);
        s.news_window.assign(
            static_cast<std::size_t>(config.window) * config.l_n * config.l_s, 0);
        for (int& v : s.news_window) v = drop(b.rng) ? 0 : tok(b.rng);
        s.stock_index = i;
        s.target = 0.02 + 0.01 * i;
    }

    ModelGraph g(config, params, 2);
    g.load({&samples[0], &samples[1]});
    b.entries.push_back({"net.full_forward",
                         gradcheck(g.graph(), g.loss_node(), params.trainable())});
}

}  // namespace

std::vector<GradCheckEntry> gradient_battery(std::uint64_t seed) {
    Battery b(seed);
    operator_checks(b);
    composite_checks(b);
    full_forward_check(b);
    return b.entries;
}

}  // namespace volcast
