#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "volcast/autodiff.hpp"
#include "volcast/calendar.hpp"

namespace volcast {

// ---------------------------------------------------------------------------
// Parameter bundles
//
// Weight matrices are stored input-major ([input_dim, units]) so that a batch
// of row vectors multiplies them directly; this is the transpose of the
// conventional units-by-input notation but holds the same parameters.
// ---------------------------------------------------------------------------

/// One LSTM cell: per-gate input weights, recurrent weights and biases for
/// the input (i), forget (f), output (o) and candidate (c) gates.
struct LstmParams {
    Tensor w_i, w_f, w_o, w_c;  // [input_dim, units]
    Tensor u_i, u_f, u_o, u_c;  // [units, units]
    Tensor b_i, b_f, b_o, b_c;  // [units]

    int input_dim() const { return w_i.shape.empty() ? 0 : w_i.shape[0]; }
    int units() const { return w_i.shape.empty() ? 0 : w_i.shape[1]; }
    std::int64_t param_count() const;

    static LstmParams glorot(int input_dim, int units, std::mt19937_64& rng);
    void collect(const std::string& prefix,
                 std::vector<std::pair<std::string, Tensor*>>& out);
};

/// One attention site: scores are v . sigmoid(W h + b), normalized by softmax.
struct AttentionParams {
    Tensor w;  // [hidden_dim, att_dim]
    Tensor b;  // [att_dim]
    Tensor v;  // [att_dim]

    int hidden_dim() const { return w.shape.empty() ? 0 : w.shape[0]; }
    static AttentionParams glorot(int hidden_dim, int att_dim,
                                  std::mt19937_64& rng);
    void collect(const std::string& prefix,
                 std::vector<std::pair<std::string, Tensor*>>& out);
};

/// One fully connected layer.
struct DenseParams {
    Tensor w;  // [input_dim, units]
    Tensor b;  // [units]

    static DenseParams glorot(int input_dim, int units, std::mt19937_64& rng);
    void collect(const std::string& prefix,
                 std::vector<std::pair<std::string, Tensor*>>& out);
};

// ---------------------------------------------------------------------------
// Model configuration
// ---------------------------------------------------------------------------

enum class EncoderKind {
    bilstm_att,        // BiLSTM + attention pooling over words
    bilstm_mp,         // BiLSTM + max pooling over words
    wl_att,            // attention directly over word embeddings
    fixed_transferred  // precomputed per-headline vectors from a sidecar file
};

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& text);

struct ModelConfig {
    int d_w = 16;       // word-embedding dimension
    int n = 16;         // sentence-LSTM units per direction
    int d_s = 32;       // sentence-vector dimension (2n for BiLSTM encoders)
    int d_a = 16;       // attention hidden dimension (all attention sites)
    int window = 5;     // trading days of history per sample (T)
    int l_n = 4;        // headline slots per day
    int l_s = 12;       // token slots per headline
    int d_mn = 16;      // market-news encoding dimension (even; BiLSTM concat)
    int d_mp = 16;      // market-price encoding dimension
    int d_e = 4;        // stock-embedding dimension
    int d_jr = 32;      // joint-representation dimension
    int n_stocks = 1;
    EncoderKind encoder_kind = EncoderKind::bilstm_att;
    bool nra_enabled = true;  // false: unweighted daily averaging of headlines
    bool price_only = false;  // true: ignore the news mode entirely

    void validate() const;  // throws std::invalid_argument
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

/// One training/evaluation sample: a window of daily price features, the
/// token-index tensor of the window's headlines, the stock identity, and the
/// next day's volatility.
struct Sample {
    Eigen::MatrixXd price_window;    // [window, 4] daily price features
    std::vector<int> news_window;    // window*l_n*l_s token indices, 0 = pad
    Eigen::MatrixXd sentence_vecs;   // [window*l_n, d_s]; only fixed_transferred
    int stock_index = 0;             // position of the 1 in the one-hot
    double target = 0.0;             // next-day volatility (Garman-Klass)
    double parkinson_vol = 0.0;      // same day's Parkinson volatility
    std::string stock_id;
    std::string sector;
    Date target_date{};              // day the target volatility refers to
};

// ---------------------------------------------------------------------------
// Full parameter set
// ---------------------------------------------------------------------------

struct ModelParams {
    Tensor embeddings;  // [rows, d_w]; row 0 is the all-zero padding row
    LstmParams sent_fwd, sent_bwd;
    AttentionParams sent_att;
    AttentionParams relevance;  // headline-level relevance attention
    LstmParams temporal_fwd, temporal_bwd;
    AttentionParams temporal_att;
    LstmParams price_lstm1, price_lstm2;
    DenseParams stock;
    DenseParams joint;
    DenseParams head;

    /// Allocates exactly the tensors the configuration uses and initializes
    /// weights uniformly in +/- sqrt(6 / (fan_in + fan_out)), biases at zero.
    static ModelParams init(const ModelConfig& config,
                            const Eigen::MatrixXd& embedding_rows,
                            std::uint64_t seed);

    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    std::vector<Tensor*> trainable();  // everything except the embeddings
    std::int64_t trainable_count();
};

void save_model(const std::string& path, const ModelConfig& config,
                ModelParams& params);
std::pair<ModelConfig, ModelParams> load_model(const std::string& path);

// ---------------------------------------------------------------------------
// Graph-building blocks (append nodes to a caller-owned Graph)
// ---------------------------------------------------------------------------

namespace build {

struct LstmNodes {
    int w_i, w_f, w_o, w_c, u_i, u_f, u_o, u_c, b_i, b_f, b_o, b_c;
    int units = 0;
    static LstmNodes params(Graph& g, LstmParams& p);
    /// One cell update: x [B,d], h_prev/c_prev [B,units] -> (h, c).
    std::pair<int, int> step(Graph& g, int x, int h_prev, int c_prev) const;
};

struct AttentionNodes {
    int w, b, v;
    static AttentionNodes params(Graph& g, AttentionParams& p);
};

/// Forward+backward LSTM over the given steps (each [B,d]); returns per-step
/// concatenated states [B,2*units]. When step_mask/step_mask_inv are provided
/// (node ids of [B] vectors per step), masked rows carry the previous state
/// through unchanged.
std::vector<int> bilstm_steps(Graph& g, const std::vector<int>& xs,
                              const LstmNodes& fwd, const LstmNodes& bwd,
                              const std::vector<int>& step_mask = {},
                              const std::vector<int>& step_mask_inv = {});

/// Column-stacks per-step nodes (each [B,d]) into [B, K*d].
int stack_steps(Graph& g, const std::vector<int>& steps);

/// Attention pooling over K steps (each [B,d]): softmax of per-step scores
/// (plus optional additive bias [B,K], e.g. -1e30 on padded steps), then the
/// weighted average of the step vectors. Returns [B,d].
int attention_pool(Graph& g, const std::vector<int>& steps,
                   const AttentionNodes& att, int score_bias = -1);

/// Per-coordinate max over K steps (each [B,d]); optional per-step additive
/// bias nodes (each [B,d]) push padded rows out of the running. Returns [B,d].
int max_pool(Graph& g, const std::vector<int>& steps,
             const std::vector<int>& step_bias = {});

}  // namespace build

// ---------------------------------------------------------------------------
// Single-sample operations (built on small internal graphs)
// ---------------------------------------------------------------------------

struct LstmStepResult {
    Eigen::VectorXd h;
    Eigen::VectorXd c;
};

/// One LSTM cell update for a single input vector.
LstmStepResult lstm_step(const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev,
                         const Eigen::VectorXd& c_prev, LstmParams& params);

/// Runs both directions over a word sequence; row t is [h_fwd_t, h_bwd_t].
Eigen::MatrixXd bilstm(const Eigen::MatrixXd& words, LstmParams& fwd,
                       LstmParams& bwd);

/// Per-coordinate max over the unmasked rows. Empty mask means all rows real.
Eigen::VectorXd encode_maxpool(const Eigen::MatrixXd& hidden,
                               const std::vector<bool>& mask = {});

/// Attention-weighted average of the unmasked rows.
Eigen::VectorXd encode_attention(const Eigen::MatrixXd& hidden,
                                 AttentionParams& params,
                                 const std::vector<bool>& mask = {});

/// Attention applied directly to word embeddings (no recurrence).
Eigen::VectorXd encode_wl_att(const Eigen::MatrixXd& words,
                              AttentionParams& params,
                              const std::vector<bool>& mask = {});

/// Relevance-weighted combination of one day's headline vectors.
Eigen::VectorXd nra(const Eigen::MatrixXd& day_sentences,
                    AttentionParams& params,
                    const std::vector<bool>& news_mask = {});

/// Unweighted mean of one day's real headline vectors.
Eigen::VectorXd daily_average(const Eigen::MatrixXd& day_sentences,
                              const std::vector<bool>& news_mask = {});

/// Zero imputation: rows without news become zero vectors, and an indicator
/// column (1 = imputed) is appended.
Eigen::MatrixXd zi_impute(const Eigen::MatrixXd& dn_sequence,
                          const std::vector<bool>& has_news);

/// BiLSTM + attention pooling over the window of daily news vectors.
Eigen::VectorXd news_temporal_context(const Eigen::MatrixXd& zi_sequence,
                                      LstmParams& fwd, LstmParams& bwd,
                                      AttentionParams& att);

/// Two stacked LSTMs over the price window; returns the second LSTM's final
/// hidden state.
Eigen::VectorXd price_encoder(const Eigen::MatrixXd& price_window,
                              LstmParams& first, LstmParams& second);

/// Affine map of a one-hot stock indicator.
Eigen::VectorXd stock_embed(const Eigen::VectorXd& onehot, DenseParams& params);

/// Multi-label classification head: sigmoid of a single dense layer.
Eigen::VectorXd rcv1_head(const Eigen::VectorXd& sentence, DenseParams& fc);

/// Sentence-pair head: concat[s_p, s_h, |s_p - s_h|, s_p*s_h] -> dense with
/// ReLU (or softplus) -> dense -> softmax over three classes.
Eigen::VectorXd snli_head(const Eigen::VectorXd& s_p,
                          const Eigen::VectorXd& s_h, DenseParams& pair_fc,
                          DenseParams& classifier, bool softplus_activation = false);

// ---------------------------------------------------------------------------
// Batched static graph for training and prediction
// ---------------------------------------------------------------------------

class ModelGraph {
public:
    /// Builds the full network once for a fixed batch size; load() then swaps
    /// sample data into the input placeholders without rebuilding.
    ModelGraph(const ModelConfig& config, ModelParams& params, int batch_size);

    void load(const std::vector<const Sample*>& batch);
    Eigen::VectorXd predict(const std::vector<const Sample*>& batch);

    Graph& graph() { return graph_; }
    int batch_size() const { return batch_; }
    int prediction_node() const { return pred_; }
    int loss_node() const { return loss_; }

private:
    ModelConfig cfg_;
    int batch_;
    int emb_rows_ = 0;
    Graph graph_;
    int tokens_ = -1;                    // gather over the embedding table
    std::vector<int> tok_mask_;          // l_s nodes, [B*T*l_n] each
    std::vector<int> tok_mask_inv_;
    int tok_score_bias_ = -1;            // [B*T*l_n, l_s]
    std::vector<int> tok_step_bias_;     // l_s nodes, [B*T*l_n, d_s] each
    int sentence_input_ = -1;            // [B*T*l_n, d_s] (fixed_transferred)
    int head_score_bias_ = -1;           // [B*T, l_n]
    int avg_weights_ = -1;               // [B*T, l_n]
    int has_news_ = -1;                  // [B*T]
    int no_news_col_ = -1;               // [B*T, 1]
    int price_input_ = -1;               // [B*T, 4]
    int onehot_ = -1;                    // [B, n_stocks]
    int target_ = -1;                    // [B]
    int pred_ = -1;
    int loss_ = -1;
};

/// Forward pass of the full network for one sample.
double model_forward(const Sample& sample, const ModelConfig& config,
                     ModelParams& params);

/// Batched forward over an arbitrary number of samples.
Eigen::VectorXd predict_all(const ModelConfig& config, ModelParams& params,
                            const std::vector<Sample>& samples,
                            int batch_size);

}  // namespace volcast
