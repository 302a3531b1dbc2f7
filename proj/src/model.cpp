#include "volcast/model.hpp"

#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace volcast {

namespace {

using nlohmann::json;

Tensor glorot_tensor(int fan_in, int fan_out, std::vector<int> shape,
                     std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor t = Tensor::zeros(std::move(shape), true);
    for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values[i] = u(rng);
    return t;
}

Tensor zero_bias(int units) { return Tensor::zeros({units}, true); }

int constant_matrix(Graph& g, const Eigen::MatrixXd& m) {
    const int rows = static_cast<int>(m.rows());
    const int cols = static_cast<int>(m.cols());
    const int id = g.input({rows, cols});
    Eigen::ArrayXd flat(static_cast<Eigen::Index>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) flat[static_cast<Eigen::Index>(r) * cols + c] = m(r, c);
    g.set_input(id, flat);
    return id;
}

int constant_vector(Graph& g, const Eigen::VectorXd& v) {
    const int id = g.input({static_cast<int>(v.size())});
    g.set_input(id, Eigen::ArrayXd(v.array()));
    return id;
}

int zero_state(Graph& g, int rows, int units) {
    const int id = g.input({rows, units});
    g.set_input(id, Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(rows) * units));
    return id;
}

Eigen::VectorXd row_of(const Tensor& t, int row) {
    const int cols = t.shape.size() == 2 ? t.shape[1] : static_cast<int>(t.values.size());
    Eigen::VectorXd out(cols);
    for (int c = 0; c < cols; ++c) out[c] = t.values[static_cast<Eigen::Index>(row) * cols + c];
    return out;
}

constexpr double kMaskBias = -1e30;

void check_mask_size(const std::vector<bool>& mask, int rows, const char* what) {
    if (!mask.empty() && static_cast<int>(mask.size()) != rows)
        throw std::invalid_argument(std::string(what) +
                                    ": mask length does not match row count");
}

int count_real(const std::vector<bool>& mask, int rows) {
    if (mask.empty()) return rows;
    int n = 0;
    for (bool b : mask) n += b ? 1 : 0;
    return n;
}

/// Attention-weighted average over the rows of a matrix, with masked rows
/// excluded via a large negative score bias.
Eigen::VectorXd attention_over_rows(const Eigen::MatrixXd& mat,
                                    AttentionParams& params,
                                    const std::vector<bool>& mask,
                                    bool require_unmasked, const char* what) {
    const int rows = static_cast<int>(mat.rows());
    const int dim = static_cast<int>(mat.cols());
    if (rows < 1) throw std::invalid_argument(std::string(what) + ": no rows");
    if (params.hidden_dim() != dim)
        throw std::invalid_argument(std::string(what) +
                                    ": attention weights expect dimension " +
                                    std::to_string(params.hidden_dim()) + ", got " +
                                    std::to_string(dim));
    check_mask_size(mask, rows, what);
    if (require_unmasked && count_real(mask, rows) == 0)
        throw std::invalid_argument(std::string(what) + ": fully masked input");

    Graph g;
    const int hid = constant_matrix(g, mat);
    const build::AttentionNodes att = build::AttentionNodes::params(g, params);
    const int scores =
        g.reshape(g.matmul(g.sigmoid(g.add(g.matmul(hid, att.w), att.b)), att.v),
                  {1, rows});
    int biased = scores;
    if (!mask.empty()) {
        Eigen::MatrixXd bias(1, rows);
        for (int r = 0; r < rows; ++r) bias(0, r) = mask[r] ? 0.0 : kMaskBias;
        biased = g.add(scores, constant_matrix(g, bias));
    }
    const int pooled = g.weighted_pool(hid, g.softmax(biased));
    g.forward();
    return row_of(g.value(pooled), 0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter bundles
// ---------------------------------------------------------------------------

std::int64_t LstmParams::param_count() const {
    return w_i.numel() + w_f.numel() + w_o.numel() + w_c.numel() + u_i.numel() +
           u_f.numel() + u_o.numel() + u_c.numel() + b_i.numel() + b_f.numel() +
           b_o.numel() + b_c.numel();
}

LstmParams LstmParams::glorot(int input_dim, int units, std::mt19937_64& rng) {
    if (input_dim < 1 || units < 1)
        throw std::invalid_argument("lstm parameters need positive dimensions");
    LstmParams p;
    p.w_i = glorot_tensor(input_dim, units, {input_dim, units}, rng);
    p.w_f = glorot_tensor(input_dim, units, {input_dim, units}, rng);
    p.w_o = glorot_tensor(input_dim, units, {input_dim, units}, rng);
    p.w_c = glorot_tensor(input_dim, units, {input_dim, units}, rng);
    p.u_i = glorot_tensor(units, units, {units, units}, rng);
    p.u_f = glorot_tensor(units, units, {units, units}, rng);
    p.u_o = glorot_tensor(units, units, {units, units}, rng);
    p.u_c = glorot_tensor(units, units, {units, units}, rng);
    p.b_i = zero_bias(units);
    p.b_f = zero_bias(units);
    p.b_o = zero_bias(units);
    p.b_c = zero_bias(units);
    return p;
}

void LstmParams::collect(const std::string& prefix,
                         std::vector<std::pair<std::string, Tensor*>>& out) {
    out.emplace_back(prefix + ".w_i", &w_i);
    out.emplace_back(prefix + ".w_f", &w_f);
    out.emplace_back(prefix + ".w_o", &w_o);
    out.emplace_back(prefix + ".w_c", &w_c);
    out.emplace_back(prefix + ".u_i", &u_i);
    out.emplace_back(prefix + ".u_f", &u_f);
    out.emplace_back(prefix + ".u_o", &u_o);
    out.emplace_back(prefix + ".u_c", &u_c);
    out.emplace_back(prefix + ".b_i", &b_i);
    out.emplace_back(prefix + ".b_f", &b_f);
    out.emplace_back(prefix + ".b_o", &b_o);
    out.emplace_back(prefix + ".b_c", &b_c);
}

AttentionParams AttentionParams::glorot(int hidden_dim, int att_dim,
                                        std::mt19937_64& rng) {
    if (hidden_dim < 1 || att_dim < 1)
        throw std::invalid_argument("attention parameters need positive dimensions");
    AttentionParams p;
    p.w = glorot_tensor(hidden_dim, att_dim, {hidden_dim, att_dim}, rng);
    p.b = zero_bias(att_dim);
    p.v = glorot_tensor(att_dim, 1, {att_dim}, rng);
    return p;
}

void AttentionParams::collect(const std::string& prefix,
                              std::vector<std::pair<std::string, Tensor*>>& out) {
    out.emplace_back(prefix + ".w", &w);
    out.emplace_back(prefix + ".b", &b);
    out.emplace_back(prefix + ".v", &v);
}

DenseParams DenseParams::glorot(int input_dim, int units, std::mt19937_64& rng) {
    if (input_dim < 1 || units < 1)
        throw std::invalid_argument("dense parameters need positive dimensions");
    DenseParams p;
    p.w = glorot_tensor(input_dim, units, {input_dim, units}, rng);
    p.b = zero_bias(units);
    return p;
}

void DenseParams::collect(const std::string& prefix,
                          std::vector<std::pair<std::string, Tensor*>>& out) {
    out.emplace_back(prefix + ".w", &w);
    out.emplace_back(prefix + ".b", &b);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

std::string to_string(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::bilstm_att: return "bilstm_att";
        case EncoderKind::bilstm_mp: return "bilstm_mp";
        case EncoderKind::wl_att: return "wl_att";
        case EncoderKind::fixed_transferred: return "fixed_transferred";
    }
    throw std::logic_error("unknown encoder kind");
}

EncoderKind encoder_kind_from_string(const std::string& text) {
    if (text == "bilstm_att") return EncoderKind::bilstm_att;
    if (text == "bilstm_mp") return EncoderKind::bilstm_mp;
    if (text == "wl_att") return EncoderKind::wl_att;
    if (text == "fixed_transferred") return EncoderKind::fixed_transferred;
    throw std::invalid_argument("unknown encoder kind: " + text);
}

void ModelConfig::validate() const {
    auto positive = [](int v, const char* name) {
        if (v < 1)
            throw std::invalid_argument(std::string("model config: ") + name +
                                        " must be >= 1");
    };
    positive(d_w, "d_w");
    positive(n, "n");
    positive(d_s, "d_s");
    positive(d_a, "d_a");
    positive(window, "window");
    positive(l_n, "l_n");
    positive(l_s, "l_s");
    positive(d_mn, "d_mn");
    positive(d_mp, "d_mp");
    positive(d_e, "d_e");
    positive(d_jr, "d_jr");
    positive(n_stocks, "n_stocks");
    if (d_mn % 2 != 0)
        throw std::invalid_argument(
            "model config: d_mn must be even (two concatenated directions)");
    if (!price_only) {
        if ((encoder_kind == EncoderKind::bilstm_att ||
             encoder_kind == EncoderKind::bilstm_mp) &&
            d_s != 2 * n)
            throw std::invalid_argument(
                "model config: BiLSTM sentence encoders require d_s = 2n");
        if (encoder_kind == EncoderKind::wl_att && d_s != d_w)
            throw std::invalid_argument(
                "model config: word-level attention requires d_s = d_w");
    }
}

std::string ModelConfig::to_json() const {
    json j;
    j["d_w"] = d_w;
    j["n"] = n;
    j["d_s"] = d_s;
    j["d_a"] = d_a;
    j["window"] = window;
    j["l_n"] = l_n;
    j["l_s"] = l_s;
    j["d_mn"] = d_mn;
    j["d_mp"] = d_mp;
    j["d_e"] = d_e;
    j["d_jr"] = d_jr;
    j["n_stocks"] = n_stocks;
    j["encoder"] = volcast::to_string(encoder_kind);
    j["nra"] = nra_enabled;
    j["price_only"] = price_only;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("model config: invalid JSON: ") +
                                    e.what());
    }
    ModelConfig c;
    try {
        c.d_w = j.value("d_w", c.d_w);
        c.n = j.value("n", c.n);
        c.d_s = j.value("d_s", c.d_s);
        c.d_a = j.value("d_a", c.d_a);
        c.window = j.value("window", c.window);
        c.l_n = j.value("l_n", c.l_n);
        c.l_s = j.value("l_s", c.l_s);
        c.d_mn = j.value("d_mn", c.d_mn);
        c.d_mp = j.value("d_mp", c.d_mp);
        c.d_e = j.value("d_e", c.d_e);
        c.d_jr = j.value("d_jr", c.d_jr);
        c.n_stocks = j.value("n_stocks", c.n_stocks);
        if (j.contains("encoder"))
            c.encoder_kind = encoder_kind_from_string(j.at("encoder").get<std::string>());
        c.nra_enabled = j.value("nra", c.nra_enabled);
        c.price_only = j.value("price_only", c.price_only);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("model config: bad field: ") +
                                    e.what());
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Full parameter set
// ---------------------------------------------------------------------------

ModelParams ModelParams::init(const ModelConfig& config,
                              const Eigen::MatrixXd& embedding_rows,
                              std::uint64_t seed) {
    config.validate();
    ModelParams p;
    std::mt19937_64 rng(seed);

    const bool needs_text = !config.price_only;
    const bool needs_embeddings =
        needs_text && config.encoder_kind != EncoderKind::fixed_transferred;
    if (needs_embeddings) {
        if (embedding_rows.cols() != config.d_w || embedding_rows.rows() < 1)
            throw std::invalid_argument(
                "model params: embedding matrix must be [rows, d_w] with rows >= 1");
        p.embeddings = Tensor::zeros(
            {static_cast<int>(embedding_rows.rows()), config.d_w}, false);
        for (int r = 0; r < embedding_rows.rows(); ++r)
            for (int c = 0; c < config.d_w; ++c)
                p.embeddings.values[static_cast<Eigen::Index>(r) * config.d_w + c] =
                    embedding_rows(r, c);
    }

    if (needs_text) {
        if (config.encoder_kind == EncoderKind::bilstm_att ||
            config.encoder_kind == EncoderKind::bilstm_mp) {
            p.sent_fwd = LstmParams::glorot(config.d_w, config.n, rng);
            p.sent_bwd = LstmParams::glorot(config.d_w, config.n, rng);
        }
        if (config.encoder_kind == EncoderKind::bilstm_att)
            p.sent_att = AttentionParams::glorot(2 * config.n, config.d_a, rng);
        if (config.encoder_kind == EncoderKind::wl_att)
            p.sent_att = AttentionParams::glorot(config.d_w, config.d_a, rng);
        p.temporal_fwd = LstmParams::glorot(config.d_s + 1, config.d_mn / 2, rng);
        p.temporal_bwd = LstmParams::glorot(config.d_s + 1, config.d_mn / 2, rng);
        p.temporal_att = AttentionParams::glorot(config.d_mn, config.d_a, rng);
    }

    p.price_lstm1 = LstmParams::glorot(4, config.d_mp, rng);
    p.price_lstm2 = LstmParams::glorot(config.d_mp, config.d_mp, rng);
    p.stock = DenseParams::glorot(config.n_stocks, config.d_e, rng);
    const int joint_in = (needs_text ? config.d_mn : 0) + config.d_mp + config.d_e;
    p.joint = DenseParams::glorot(joint_in, config.d_jr, rng);
    p.head = DenseParams::glorot(config.d_jr, 1, rng);
    // Drawn last so that toggling the relevance head leaves every shared
    // weight's initialization unchanged for a given seed.
    if (needs_text && config.nra_enabled)
        p.relevance = AttentionParams::glorot(config.d_s, config.d_a, rng);
    return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named_tensors() {
    std::vector<std::pair<std::string, Tensor*>> all;
    all.emplace_back("embeddings", &embeddings);
    sent_fwd.collect("sentence.forward", all);
    sent_bwd.collect("sentence.backward", all);
    sent_att.collect("sentence.attention", all);
    relevance.collect("relevance", all);
    temporal_fwd.collect("temporal.forward", all);
    temporal_bwd.collect("temporal.backward", all);
    temporal_att.collect("temporal.attention", all);
    price_lstm1.collect("price.first", all);
    price_lstm2.collect("price.second", all);
    stock.collect("stock", all);
    joint.collect("joint", all);
    head.collect("head", all);

    std::vector<std::pair<std::string, Tensor*>> present;
    for (auto& [name, t] : all)
        if (t->values.size() > 0) present.emplace_back(name, t);
    return present;
}

std::vector<Tensor*> ModelParams::trainable() {
    std::vector<Tensor*> out;
    for (auto& [name, t] : named_tensors())
        if (t->requires_grad) out.push_back(t);
    return out;
}

std::int64_t ModelParams::trainable_count() {
    std::int64_t n = 0;
    for (Tensor* t : trainable()) n += t->numel();
    return n;
}

void save_model(const std::string& path, const ModelConfig& config,
                ModelParams& params) {
    json meta;
    meta["config"] = json::parse(config.to_json());
    std::map<std::string, const Tensor*> named;
    for (auto& [name, t] : params.named_tensors()) named[name] = t;
    save_checkpoint(path, named, meta.dump());
}

std::pair<ModelConfig, ModelParams> load_model(const std::string& path) {
    Checkpoint cp = load_checkpoint(path);
    json meta;
    try {
        meta = json::parse(cp.metadata_json);
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": checkpoint metadata is not JSON: " +
                                 e.what());
    }
    if (!meta.contains("config"))
        throw std::runtime_error(path + ": checkpoint has no model config");
    ModelConfig config = ModelConfig::from_json(meta.at("config").dump());

    Eigen::MatrixXd emb(0, 0);
    auto it = cp.tensors.find("embeddings");
    if (it != cp.tensors.end()) {
        const Tensor& e = it->second;
        if (e.shape.size() != 2)
            throw std::runtime_error(path + ": embeddings tensor must be 2-D");
        emb.resize(e.shape[0], e.shape[1]);
        for (int r = 0; r < e.shape[0]; ++r)
            for (int c = 0; c < e.shape[1]; ++c)
                emb(r, c) = e.values[static_cast<Eigen::Index>(r) * e.shape[1] + c];
    }

    ModelParams params = ModelParams::init(config, emb, 0);
    std::set<std::string> wanted;
    for (auto& [name, t] : params.named_tensors()) {
        wanted.insert(name);
        auto found = cp.tensors.find(name);
        if (found == cp.tensors.end())
            throw std::runtime_error(path + ": checkpoint is missing tensor " + name);
        const Tensor& src = found->second;
        if (src.shape != t->shape)
            throw std::runtime_error(path + ": tensor " + name + " has shape " +
                                     shape_to_string(src.shape) + ", expected " +
                                     shape_to_string(t->shape));
        t->values = src.values;
    }
    for (auto& [name, t] : cp.tensors)
        if (!wanted.count(name))
            throw std::runtime_error(path + ": checkpoint has unexpected tensor " +
                                     name);
    return {config, std::move(params)};
}

// ---------------------------------------------------------------------------
// Graph-building blocks
// ---------------------------------------------------------------------------

namespace build {

LstmNodes LstmNodes::params(Graph& g, LstmParams& p) {
    LstmNodes n;
    n.w_i = g.param(&p.w_i);
    n.w_f = g.param(&p.w_f);
    n.w_o = g.param(&p.w_o);
    n.w_c = g.param(&p.w_c);
    n.u_i = g.param(&p.u_i);
    n.u_f = g.param(&p.u_f);
    n.u_o = g.param(&p.u_o);
    n.u_c = g.param(&p.u_c);
    n.b_i = g.param(&p.b_i);
    n.b_f = g.param(&p.b_f);
    n.b_o = g.param(&p.b_o);
    n.b_c = g.param(&p.b_c);
    n.units = p.units();
    return n;
}

std::pair<int, int> LstmNodes::step(Graph& g, int x, int h_prev,
                                    int c_prev) const {
    auto gate = [&](int wn, int un, int bn) {
        return g.add(g.add(g.matmul(x, wn), g.matmul(h_prev, un)), bn);
    };
    const int in_gate = g.sigmoid(gate(w_i, u_i, b_i));
    const int forget = g.sigmoid(gate(w_f, u_f, b_f));
    const int out_gate = g.sigmoid(gate(w_o, u_o, b_o));
    const int candidate = g.tanh(gate(w_c, u_c, b_c));
    const int c = g.add(g.mul(in_gate, candidate), g.mul(forget, c_prev));
    const int h = g.mul(out_gate, g.tanh(c));
    return {h, c};
}

AttentionNodes AttentionNodes::params(Graph& g, AttentionParams& p) {
    AttentionNodes n;
    n.w = g.param(&p.w);
    n.b = g.param(&p.b);
    n.v = g.param(&p.v);
    return n;
}

std::vector<int> bilstm_steps(Graph& g, const std::vector<int>& xs,
                              const LstmNodes& fwd, const LstmNodes& bwd,
                              const std::vector<int>& step_mask,
                              const std::vector<int>& step_mask_inv) {
    if (xs.empty()) throw std::invalid_argument("bilstm: no steps");
    if (!step_mask.empty() &&
        (step_mask.size() != xs.size() || step_mask_inv.size() != xs.size()))
        throw std::invalid_argument("bilstm: mask node count must match steps");
    const int rows = g.value(xs[0]).shape[0];
    const int K = static_cast<int>(xs.size());
    const bool masked = !step_mask.empty();

    auto run = [&](const LstmNodes& cell, bool reverse) {
        std::vector<int> states(static_cast<std::size_t>(K));
        int h = zero_state(g, rows, cell.units);
        int c = zero_state(g, rows, cell.units);
        for (int s = 0; s < K; ++s) {
            const int k = reverse ? K - 1 - s : s;
            auto [h_new, c_new] = cell.step(g, xs[static_cast<std::size_t>(k)], h, c);
            if (masked) {
                // padded rows carry the previous state through unchanged
                const int m = step_mask[static_cast<std::size_t>(k)];
                const int mi = step_mask_inv[static_cast<std::size_t>(k)];
                h = g.add(g.scale_rows(h_new, m), g.scale_rows(h, mi));
                c = g.add(g.scale_rows(c_new, m), g.scale_rows(c, mi));
            } else {
                h = h_new;
                c = c_new;
            }
            states[static_cast<std::size_t>(k)] = h;
        }
        return states;
    };

    const std::vector<int> forward_states = run(fwd, false);
    const std::vector<int> backward_states = run(bwd, true);
    std::vector<int> out(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        out[static_cast<std::size_t>(k)] =
            g.concat({forward_states[static_cast<std::size_t>(k)],
                      backward_states[static_cast<std::size_t>(k)]});
    return out;
}

int stack_steps(Graph& g, const std::vector<int>& steps) {
    if (steps.empty()) throw std::invalid_argument("stack_steps: no steps");
    if (steps.size() == 1) return steps[0];
    return g.concat(steps);
}

int attention_pool(Graph& g, const std::vector<int>& steps,
                   const AttentionNodes& att, int score_bias) {
    if (steps.empty()) throw std::invalid_argument("attention_pool: no steps");
    const int rows = g.value(steps[0]).shape[0];
    const int dim = g.value(steps[0]).shape[1];
    const int K = static_cast<int>(steps.size());

    std::vector<int> score_cols;
    score_cols.reserve(steps.size());
    for (int s : steps) {
        const int e = g.matmul(g.sigmoid(g.add(g.matmul(s, att.w), att.b)), att.v);
        score_cols.push_back(g.reshape(e, {rows, 1}));
    }
    int scores = score_cols.size() == 1 ? score_cols[0] : g.concat(score_cols);
    if (score_bias >= 0) scores = g.add(scores, score_bias);
    const int weights = g.softmax(scores);
    const int values = g.reshape(stack_steps(g, steps), {rows * K, dim});
    return g.weighted_pool(values, weights);
}

int max_pool(Graph& g, const std::vector<int>& steps,
             const std::vector<int>& step_bias) {
    if (steps.empty()) throw std::invalid_argument("max_pool: no steps");
    if (!step_bias.empty() && step_bias.size() != steps.size())
        throw std::invalid_argument("max_pool: bias node count must match steps");
    const int rows = g.value(steps[0]).shape[0];
    const int dim = g.value(steps[0]).shape[1];
    const int K = static_cast<int>(steps.size());

    std::vector<int> biased(steps.size());
    for (std::size_t k = 0; k < steps.size(); ++k)
        biased[k] = step_bias.empty() ? steps[k] : g.add(steps[k], step_bias[k]);
    if (K == 1) return biased[0];
    const int cube = g.reshape(g.concat(biased), {rows, K, dim});
    return g.max_over_axis(cube, 1);
}

}  // namespace build

// ---------------------------------------------------------------------------
// Single-sample operations
// ---------------------------------------------------------------------------

LstmStepResult lstm_step(const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev,
                         const Eigen::VectorXd& c_prev, LstmParams& params) {
    if (x.size() != params.input_dim() || h_prev.size() != params.units() ||
        c_prev.size() != params.units())
        throw std::invalid_argument(
            "lstm_step: input/state sizes do not match the cell parameters");
    Graph g;
    const int xi = constant_matrix(g, x.transpose());
    const int hi = constant_matrix(g, h_prev.transpose());
    const int ci = constant_matrix(g, c_prev.transpose());
    const build::LstmNodes cell = build::LstmNodes::params(g, params);
    auto [h, c] = cell.step(g, xi, hi, ci);
    g.forward();
    return {row_of(g.value(h), 0), row_of(g.value(c), 0)};
}

Eigen::MatrixXd bilstm(const Eigen::MatrixXd& words, LstmParams& fwd,
                       LstmParams& bwd) {
    const int steps = static_cast<int>(words.rows());
    if (steps < 1) throw std::invalid_argument("bilstm: empty sequence");
    if (words.cols() != fwd.input_dim() || words.cols() != bwd.input_dim())
        throw std::invalid_argument("bilstm: word dimension does not match cells");
    if (fwd.units() != bwd.units())
        throw std::invalid_argument("bilstm: direction unit counts differ");
    Graph g;
    const int win = constant_matrix(g, words);
    std::vector<int> xs(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t)
        xs[static_cast<std::size_t>(t)] = g.gather_rows(win, {t});
    const build::LstmNodes f = build::LstmNodes::params(g, fwd);
    const build::LstmNodes b = build::LstmNodes::params(g, bwd);
    const std::vector<int> hs = build::bilstm_steps(g, xs, f, b);
    g.forward();
    Eigen::MatrixXd out(steps, 2 * fwd.units());
    for (int t = 0; t < steps; ++t)
        out.row(t) = row_of(g.value(hs[static_cast<std::size_t>(t)]), 0).transpose();
    return out;
}

Eigen::VectorXd encode_maxpool(const Eigen::MatrixXd& hidden,
                               const std::vector<bool>& mask) {
    const int rows = static_cast<int>(hidden.rows());
    const int dim = static_cast<int>(hidden.cols());
    if (rows < 1) throw std::invalid_argument("encode_maxpool: no rows");
    check_mask_size(mask, rows, "encode_maxpool");
    if (count_real(mask, rows) == 0)
        throw std::invalid_argument("encode_maxpool: fully masked input");
    Graph g;
    int hid = constant_matrix(g, hidden);
    if (!mask.empty()) {
        Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(rows, dim);
        for (int r = 0; r < rows; ++r)
            if (!mask[static_cast<std::size_t>(r)]) bias.row(r).setConstant(kMaskBias);
        hid = g.add(hid, constant_matrix(g, bias));
    }
    const int pooled = g.max_over_axis(g.reshape(hid, {1, rows, dim}), 1);
    g.forward();
    return row_of(g.value(pooled), 0);
}

Eigen::VectorXd encode_attention(const Eigen::MatrixXd& hidden,
                                 AttentionParams& params,
                                 const std::vector<bool>& mask) {
    return attention_over_rows(hidden, params, mask, true, "encode_attention");
}

Eigen::VectorXd encode_wl_att(const Eigen::MatrixXd& words,
                              AttentionParams& params,
                              const std::vector<bool>& mask) {
    return attention_over_rows(words, params, mask, true, "encode_wl_att");
}

Eigen::VectorXd nra(const Eigen::MatrixXd& day_sentences,
                    AttentionParams& params, const std::vector<bool>& news_mask) {
    return attention_over_rows(day_sentences, params, news_mask, false, "nra");
}

Eigen::VectorXd daily_average(const Eigen::MatrixXd& day_sentences,
                              const std::vector<bool>& news_mask) {
    const int rows = static_cast<int>(day_sentences.rows());
    if (rows < 1) throw std::invalid_argument("daily_average: no rows");
    check_mask_size(news_mask, rows, "daily_average");
    const int real = count_real(news_mask, rows);
    if (real == 0)
        return Eigen::VectorXd::Zero(day_sentences.cols());
    Graph g;
    const int vals = constant_matrix(g, day_sentences);
    Eigen::MatrixXd w(1, rows);
    for (int r = 0; r < rows; ++r)
        w(0, r) = (news_mask.empty() || news_mask[static_cast<std::size_t>(r)])
                      ? 1.0 / real
                      : 0.0;
    const int pooled = g.weighted_pool(vals, constant_matrix(g, w));
    g.forward();
    return row_of(g.value(pooled), 0);
}

Eigen::MatrixXd zi_impute(const Eigen::MatrixXd& dn_sequence,
                          const std::vector<bool>& has_news) {
    const int rows = static_cast<int>(dn_sequence.rows());
    if (static_cast<int>(has_news.size()) != rows)
        throw std::invalid_argument("zi_impute: flag count must match rows");
    Eigen::MatrixXd out(rows, dn_sequence.cols() + 1);
    for (int r = 0; r < rows; ++r) {
        if (has_news[static_cast<std::size_t>(r)]) {
            out.row(r).head(dn_sequence.cols()) = dn_sequence.row(r);
            out(r, dn_sequence.cols()) = 0.0;
        } else {
            out.row(r).setZero();
            out(r, dn_sequence.cols()) = 1.0;
        }
    }
    return out;
}

Eigen::VectorXd news_temporal_context(const Eigen::MatrixXd& zi_sequence,
                                      LstmParams& fwd, LstmParams& bwd,
                                      AttentionParams& att) {
    const int steps = static_cast<int>(zi_sequence.rows());
    if (steps < 1) throw std::invalid_argument("news_temporal_context: no steps");
    if (zi_sequence.cols() != fwd.input_dim() ||
        zi_sequence.cols() != bwd.input_dim())
        throw std::invalid_argument(
            "news_temporal_context: sequence dimension does not match cells");
    Graph g;
    const int seq = constant_matrix(g, zi_sequence);
    std::vector<int> xs(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t)
        xs[static_cast<std::size_t>(t)] = g.gather_rows(seq, {t});
    const build::LstmNodes f = build::LstmNodes::params(g, fwd);
    const build::LstmNodes b = build::LstmNodes::params(g, bwd);
    const build::AttentionNodes a = build::AttentionNodes::params(g, att);
    const int pooled = build::attention_pool(g, build::bilstm_steps(g, xs, f, b), a);
    g.forward();
    return row_of(g.value(pooled), 0);
}

Eigen::VectorXd price_encoder(const Eigen::MatrixXd& price_window,
                              LstmParams& first, LstmParams& second) {
    const int steps = static_cast<int>(price_window.rows());
    if (steps < 1) throw std::invalid_argument("price_encoder: no steps");
    if (price_window.cols() != first.input_dim())
        throw std::invalid_argument(
            "price_encoder: window width does not match the first cell");
    if (second.input_dim() != first.units())
        throw std::invalid_argument(
            "price_encoder: second cell must consume the first cell's states");
    Graph g;
    const int win = constant_matrix(g, price_window);
    const build::LstmNodes c1 = build::LstmNodes::params(g, first);
    const build::LstmNodes c2 = build::LstmNodes::params(g, second);
    int h1 = zero_state(g, 1, c1.units), s1 = zero_state(g, 1, c1.units);
    int h2 = zero_state(g, 1, c2.units), s2 = zero_state(g, 1, c2.units);
    for (int t = 0; t < steps; ++t) {
        auto [nh1, ns1] = c1.step(g, g.gather_rows(win, {t}), h1, s1);
        h1 = nh1;
        s1 = ns1;
        auto [nh2, ns2] = c2.step(g, h1, h2, s2);
        h2 = nh2;
        s2 = ns2;
    }
    g.forward();
    return row_of(g.value(h2), 0);
}

Eigen::VectorXd stock_embed(const Eigen::VectorXd& onehot, DenseParams& params) {
    if (onehot.size() != params.w.shape[0])
        throw std::invalid_argument("stock_embed: indicator length does not match");
    int ones = 0;
    for (Eigen::Index i = 0; i < onehot.size(); ++i) {
        if (onehot[i] == 1.0)
            ++ones;
        else if (onehot[i] != 0.0)
            throw std::invalid_argument("stock_embed: indicator entries must be 0 or 1");
    }
    if (ones != 1)
        throw std::invalid_argument("stock_embed: indicator must have exactly one 1");
    Graph g;
    const int x = constant_matrix(g, onehot.transpose());
    const int out = g.add(g.matmul(x, g.param(&params.w)), g.param(&params.b));
    g.forward();
    return row_of(g.value(out), 0);
}

Eigen::VectorXd rcv1_head(const Eigen::VectorXd& sentence, DenseParams& fc) {
    if (sentence.size() != fc.w.shape[0])
        throw std::invalid_argument("rcv1_head: sentence dimension does not match");
    Graph g;
    const int x = constant_matrix(g, sentence.transpose());
    const int out =
        g.sigmoid(g.add(g.matmul(x, g.param(&fc.w)), g.param(&fc.b)));
    g.forward();
    return row_of(g.value(out), 0);
}

Eigen::VectorXd snli_head(const Eigen::VectorXd& s_p, const Eigen::VectorXd& s_h,
                          DenseParams& pair_fc, DenseParams& classifier,
                          bool softplus_activation) {
    if (s_p.size() != s_h.size())
        throw std::invalid_argument("snli_head: sentence dimensions differ");
    if (pair_fc.w.shape[0] != 4 * s_p.size())
        throw std::invalid_argument(
            "snli_head: pair layer must consume four concatenated sentence parts");
    if (classifier.w.shape[0] != pair_fc.w.shape[1] || classifier.w.shape[1] != 3)
        throw std::invalid_argument(
            "snli_head: classifier must map the pair layer to three classes");
    Graph g;
    const int p = constant_vector(g, s_p);
    const int h = constant_vector(g, s_h);
    const int fused = g.concat({p, h, g.absdiff(p, h), g.mul(p, h)});
    const int pre = g.add(g.matmul(fused, g.param(&pair_fc.w)), g.param(&pair_fc.b));
    const int act = softplus_activation ? g.softplus(pre) : g.relu(pre);
    const int logits =
        g.add(g.matmul(act, g.param(&classifier.w)), g.param(&classifier.b));
    const int probs = g.softmax(logits);
    g.forward();
    const Tensor& t = g.value(probs);
    Eigen::VectorXd out(3);
    for (int i = 0; i < 3; ++i) out[i] = t.values[i];
    return out;
}

// ---------------------------------------------------------------------------
// Batched static graph
// ---------------------------------------------------------------------------

ModelGraph::ModelGraph(const ModelConfig& config, ModelParams& params,
                       int batch_size)
    : cfg_(config), batch_(batch_size) {
    cfg_.validate();
    if (batch_ < 1) throw std::invalid_argument("model graph: batch size must be >= 1");

    const int T = cfg_.window;
    const int BT = batch_ * T;
    const int M = BT * cfg_.l_n;  // headline slots in the batch
    Graph& g = graph_;
    std::vector<int> joint_parts;

    if (!cfg_.price_only) {
        // --- headline slot vectors, grouped by (sample, day): [M, d_s]
        int sentences = -1;
        if (cfg_.encoder_kind == EncoderKind::fixed_transferred) {
            sentence_input_ = g.input({M, cfg_.d_s});
            sentences = sentence_input_;
        } else {
            if (params.embeddings.shape.size() != 2)
                throw std::invalid_argument(
                    "model graph: this encoder needs an embedding table");
            emb_rows_ = params.embeddings.shape[0];
            const int emb = g.param(&params.embeddings);
            tokens_ = g.gather_rows(emb, std::vector<int>(
                                             static_cast<std::size_t>(M) * cfg_.l_s, 0));
            // token rows for step k across all headline slots
            std::vector<int> xs(static_cast<std::size_t>(cfg_.l_s));
            for (int k = 0; k < cfg_.l_s; ++k) {
                std::vector<int> idx(static_cast<std::size_t>(M));
                for (int s = 0; s < M; ++s) idx[static_cast<std::size_t>(s)] = s * cfg_.l_s + k;
                xs[static_cast<std::size_t>(k)] = g.gather_rows(tokens_, idx);
            }
            if (cfg_.encoder_kind == EncoderKind::wl_att) {
                tok_score_bias_ = g.input({M, cfg_.l_s});
                const build::AttentionNodes att =
                    build::AttentionNodes::params(g, params.sent_att);
                sentences = build::attention_pool(g, xs, att, tok_score_bias_);
            } else {
                tok_mask_.resize(static_cast<std::size_t>(cfg_.l_s));
                tok_mask_inv_.resize(static_cast<std::size_t>(cfg_.l_s));
                for (int k = 0; k < cfg_.l_s; ++k) {
                    tok_mask_[static_cast<std::size_t>(k)] = g.input({M});
                    tok_mask_inv_[static_cast<std::size_t>(k)] = g.input({M});
                }
                const build::LstmNodes f = build::LstmNodes::params(g, params.sent_fwd);
                const build::LstmNodes b = build::LstmNodes::params(g, params.sent_bwd);
                const std::vector<int> hs =
                    build::bilstm_steps(g, xs, f, b, tok_mask_, tok_mask_inv_);
                if (cfg_.encoder_kind == EncoderKind::bilstm_att) {
                    tok_score_bias_ = g.input({M, cfg_.l_s});
                    const build::AttentionNodes att =
                        build::AttentionNodes::params(g, params.sent_att);
                    sentences = build::attention_pool(g, hs, att, tok_score_bias_);
                } else {
                    tok_step_bias_.resize(static_cast<std::size_t>(cfg_.l_s));
                    for (int k = 0; k < cfg_.l_s; ++k)
                        tok_step_bias_[static_cast<std::size_t>(k)] =
                            g.input({M, cfg_.d_s});
                    sentences = build::max_pool(g, hs, tok_step_bias_);
                }
            }
        }

        // --- one vector per (sample, day) from its headline slots: [BT, d_s]
        int daily = -1;
        if (cfg_.nra_enabled) {
            const build::AttentionNodes rel =
                build::AttentionNodes::params(g, params.relevance);
            const int scores = g.reshape(
                g.matmul(g.sigmoid(g.add(g.matmul(sentences, rel.w), rel.b)), rel.v),
                {BT, cfg_.l_n});
            head_score_bias_ = g.input({BT, cfg_.l_n});
            const int weights = g.softmax(g.add(scores, head_score_bias_));
            daily = g.weighted_pool(sentences, weights);
        } else {
            avg_weights_ = g.input({BT, cfg_.l_n});
            daily = g.weighted_pool(sentences, avg_weights_);
        }

        // --- zero imputation with a missing-news indicator column
        has_news_ = g.input({BT});
        no_news_col_ = g.input({BT, 1});
        const int zi = g.concat({g.scale_rows(daily, has_news_), no_news_col_});

        // --- temporal context over the window
        std::vector<int> day_steps(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) {
            std::vector<int> idx(static_cast<std::size_t>(batch_));
            for (int s = 0; s < batch_; ++s)
                idx[static_cast<std::size_t>(s)] = s * T + t;
            day_steps[static_cast<std::size_t>(t)] = g.gather_rows(zi, idx);
        }
        const build::LstmNodes tf = build::LstmNodes::params(g, params.temporal_fwd);
        const build::LstmNodes tb = build::LstmNodes::params(g, params.temporal_bwd);
        const build::AttentionNodes ta =
            build::AttentionNodes::params(g, params.temporal_att);
        joint_parts.push_back(
            build::attention_pool(g, build::bilstm_steps(g, day_steps, tf, tb), ta));
    }

    // --- price encoder: two stacked cells over the window
    price_input_ = g.input({BT, 4});
    const build::LstmNodes p1 = build::LstmNodes::params(g, params.price_lstm1);
    const build::LstmNodes p2 = build::LstmNodes::params(g, params.price_lstm2);
    int h1 = zero_state(g, batch_, p1.units), s1 = zero_state(g, batch_, p1.units);
    int h2 = zero_state(g, batch_, p2.units), s2 = zero_state(g, batch_, p2.units);
    for (int t = 0; t < T; ++t) {
        std::vector<int> idx(static_cast<std::size_t>(batch_));
        for (int s = 0; s < batch_; ++s) idx[static_cast<std::size_t>(s)] = s * T + t;
        auto [nh1, ns1] = p1.step(g, g.gather_rows(price_input_, idx), h1, s1);
        h1 = nh1;
        s1 = ns1;
        auto [nh2, ns2] = p2.step(g, h1, h2, s2);
        h2 = nh2;
        s2 = ns2;
    }
    joint_parts.push_back(h2);

    // --- stock embedding
    onehot_ = g.input({batch_, cfg_.n_stocks});
    joint_parts.push_back(
        g.add(g.matmul(onehot_, g.param(&params.stock.w)), g.param(&params.stock.b)));

    // --- joint representation and linear output head
    const int joint_in =
        joint_parts.size() == 1 ? joint_parts[0] : g.concat(joint_parts);
    const int jr = g.relu(
        g.add(g.matmul(joint_in, g.param(&params.joint.w)), g.param(&params.joint.b)));
    const int out =
        g.add(g.matmul(jr, g.param(&params.head.w)), g.param(&params.head.b));
    pred_ = g.reshape(out, {batch_});
    target_ = g.input({batch_});
    loss_ = g.mse_loss(pred_, target_);
}

void ModelGraph::load(const std::vector<const Sample*>& batch) {
    if (static_cast<int>(batch.size()) != batch_)
        throw std::invalid_argument("model graph: expected a batch of " +
                                    std::to_string(batch_) + " samples, got " +
                                    std::to_string(batch.size()));
    const int T = cfg_.window;
    const int BT = batch_ * T;
    const int M = BT * cfg_.l_n;
    const int win_tokens = T * cfg_.l_n * cfg_.l_s;

    Eigen::ArrayXd price(static_cast<Eigen::Index>(BT) * 4);
    Eigen::ArrayXd onehot = Eigen::ArrayXd::Zero(
        static_cast<Eigen::Index>(batch_) * cfg_.n_stocks);
    Eigen::ArrayXd target(batch_);

    for (int s = 0; s < batch_; ++s) {
        const Sample& smp = *batch[static_cast<std::size_t>(s)];
        if (smp.price_window.rows() != T || smp.price_window.cols() != 4)
            throw std::invalid_argument("model graph: sample price window must be [" +
                                        std::to_string(T) + ",4]");
        if (smp.stock_index < 0 || smp.stock_index >= cfg_.n_stocks)
            throw std::invalid_argument("model graph: stock index out of range");
        for (int t = 0; t < T; ++t)
            for (int c = 0; c < 4; ++c)
                price[(static_cast<Eigen::Index>(s) * T + t) * 4 + c] =
                    smp.price_window(t, c);
        onehot[static_cast<Eigen::Index>(s) * cfg_.n_stocks + smp.stock_index] = 1.0;
        target[s] = smp.target;
    }
    graph_.set_input(price_input_, price);
    graph_.set_input(onehot_, onehot);
    graph_.set_input(target_, target);

    if (cfg_.price_only) return;

    // headline-slot reality flags, grouped by (sample, day)
    std::vector<bool> slot_real(static_cast<std::size_t>(M), false);

    if (cfg_.encoder_kind == EncoderKind::fixed_transferred) {
        Eigen::ArrayXd sent(static_cast<Eigen::Index>(M) * cfg_.d_s);
        for (int s = 0; s < batch_; ++s) {
            const Sample& smp = *batch[static_cast<std::size_t>(s)];
            if (smp.sentence_vecs.rows() != T * cfg_.l_n ||
                smp.sentence_vecs.cols() != cfg_.d_s)
                throw std::invalid_argument(
                    "model graph: sample sentence vectors must be [" +
                    std::to_string(T * cfg_.l_n) + "," + std::to_string(cfg_.d_s) + "]");
            for (int r = 0; r < T * cfg_.l_n; ++r) {
                const int slot = s * T * cfg_.l_n + r;
                bool any = false;
                for (int c = 0; c < cfg_.d_s; ++c) {
                    const double v = smp.sentence_vecs(r, c);
                    sent[static_cast<Eigen::Index>(slot) * cfg_.d_s + c] = v;
                    any = any || v != 0.0;
                }
                slot_real[static_cast<std::size_t>(slot)] = any;
            }
        }
        graph_.set_input(sentence_input_, sent);
    } else {
        std::vector<int> idx(static_cast<std::size_t>(M) * cfg_.l_s);
        const int emb_rows = emb_rows_;
        for (int s = 0; s < batch_; ++s) {
            const Sample& smp = *batch[static_cast<std::size_t>(s)];
            if (static_cast<int>(smp.news_window.size()) != win_tokens)
                throw std::invalid_argument("model graph: sample news window must hold " +
                                            std::to_string(win_tokens) + " indices");
            for (int r = 0; r < T * cfg_.l_n; ++r) {
                const int slot = s * T * cfg_.l_n + r;
                for (int k = 0; k < cfg_.l_s; ++k) {
                    const int tok = smp.news_window[static_cast<std::size_t>(r) * cfg_.l_s + k];
                    if (tok < 0 || tok >= emb_rows)
                        throw std::invalid_argument(
                            "model graph: token index out of embedding range");
                    idx[static_cast<std::size_t>(slot) * cfg_.l_s + k] = tok;
                    if (tok != 0) slot_real[static_cast<std::size_t>(slot)] = true;
                }
            }
        }
        graph_.set_gather_indices(tokens_, idx);

        if (!tok_mask_.empty()) {
            for (int k = 0; k < cfg_.l_s; ++k) {
                Eigen::ArrayXd m(M), mi(M);
                for (int slot = 0; slot < M; ++slot) {
                    const bool real =
                        idx[static_cast<std::size_t>(slot) * cfg_.l_s + k] != 0;
                    m[slot] = real ? 1.0 : 0.0;
                    mi[slot] = real ? 0.0 : 1.0;
                }
                graph_.set_input(tok_mask_[static_cast<std::size_t>(k)], m);
                graph_.set_input(tok_mask_inv_[static_cast<std::size_t>(k)], mi);
            }
        }
        if (tok_score_bias_ >= 0) {
            Eigen::ArrayXd bias(static_cast<Eigen::Index>(M) * cfg_.l_s);
            for (int slot = 0; slot < M; ++slot)
                for (int k = 0; k < cfg_.l_s; ++k)
                    bias[static_cast<Eigen::Index>(slot) * cfg_.l_s + k] =
                        idx[static_cast<std::size_t>(slot) * cfg_.l_s + k] != 0
                            ? 0.0
                            : kMaskBias;
            graph_.set_input(tok_score_bias_, bias);
        }
        if (!tok_step_bias_.empty()) {
            for (int k = 0; k < cfg_.l_s; ++k) {
                Eigen::ArrayXd bias(static_cast<Eigen::Index>(M) * cfg_.d_s);
                for (int slot = 0; slot < M; ++slot) {
                    const double v =
                        idx[static_cast<std::size_t>(slot) * cfg_.l_s + k] != 0
                            ? 0.0
                            : kMaskBias;
                    for (int c = 0; c < cfg_.d_s; ++c)
                        bias[static_cast<Eigen::Index>(slot) * cfg_.d_s + c] = v;
                }
                graph_.set_input(tok_step_bias_[static_cast<std::size_t>(k)], bias);
            }
        }
    }

    // day-level masks
    Eigen::ArrayXd has(BT), has_inv_col(BT);
    Eigen::ArrayXd head_bias(static_cast<Eigen::Index>(BT) * cfg_.l_n);
    Eigen::ArrayXd avg_w(static_cast<Eigen::Index>(BT) * cfg_.l_n);
    for (int d = 0; d < BT; ++d) {
        int real = 0;
        for (int j = 0; j < cfg_.l_n; ++j)
            real += slot_real[static_cast<std::size_t>(d) * cfg_.l_n + j] ? 1 : 0;
        has[d] = real > 0 ? 1.0 : 0.0;
        has_inv_col[d] = real > 0 ? 0.0 : 1.0;
        for (int j = 0; j < cfg_.l_n; ++j) {
            const bool r = slot_real[static_cast<std::size_t>(d) * cfg_.l_n + j];
            head_bias[static_cast<Eigen::Index>(d) * cfg_.l_n + j] = r ? 0.0 : kMaskBias;
            avg_w[static_cast<Eigen::Index>(d) * cfg_.l_n + j] =
                r ? 1.0 / real : 0.0;
        }
    }
    graph_.set_input(has_news_, has);
    graph_.set_input(no_news_col_, has_inv_col);
    if (head_score_bias_ >= 0) graph_.set_input(head_score_bias_, head_bias);
    if (avg_weights_ >= 0) graph_.set_input(avg_weights_, avg_w);
}

Eigen::VectorXd ModelGraph::predict(const std::vector<const Sample*>& batch) {
    load(batch);
    graph_.forward();
    const Tensor& p = graph_.value(pred_);
    Eigen::VectorXd out(batch_);
    for (int i = 0; i < batch_; ++i) out[i] = p.values[i];
    return out;
}

double model_forward(const Sample& sample, const ModelConfig& config,
                     ModelParams& params) {
    ModelGraph g(config, params, 1);
    return g.predict({&sample})[0];
}

Eigen::VectorXd predict_all(const ModelConfig& config, ModelParams& params,
                            const std::vector<Sample>& samples, int batch_size) {
    if (batch_size < 1)
        throw std::invalid_argument("predict_all: batch size must be >= 1");
    const int n = static_cast<int>(samples.size());
    Eigen::VectorXd out(n);
    std::unique_ptr<ModelGraph> full;
    std::unique_ptr<ModelGraph> tail;
    int i = 0;
    while (i < n) {
        const int take = std::min(batch_size, n - i);
        ModelGraph* g = nullptr;
        if (take == batch_size) {
            if (!full) full = std::make_unique<ModelGraph>(config, params, take);
            g = full.get();
        } else {
            if (!tail) tail = std::make_unique<ModelGraph>(config, params, take);
            g = tail.get();
        }
        std::vector<const Sample*> batch(static_cast<std::size_t>(take));
        for (int k = 0; k < take; ++k)
            batch[static_cast<std::size_t>(k)] = &samples[static_cast<std::size_t>(i + k)];
        const Eigen::VectorXd p = g->predict(batch);
        out.segment(i, take) = p;
        i += take;
    }
    return out;
}

}  // namespace volcast
