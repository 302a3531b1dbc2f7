#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "volcast/corpus.hpp"
#include "volcast/garch.hpp"
#include "volcast/marketdata.hpp"
#include "volcast/metrics.hpp"
#include "volcast/model.hpp"

namespace volcast {

/// Chronological, non-overlapping date ranges (inclusive bounds). Samples are
/// assigned to a split by their target date.
struct SplitSpec {
    Date train_start{}, train_end{};
    Date val_start{}, val_end{};
    Date test_start{}, test_end{};

    void validate() const;  // throws std::invalid_argument
    std::string to_json() const;
    static SplitSpec from_json(const std::string& text);
};

struct TrainConfig {
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 8;  // epochs without validation improvement before stopping
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Everything known about one stock before sampling: identity, sector tag,
/// daily bars, and news already aligned onto trading days.
struct StockData {
    std::string stock_id;
    std::string sector;
    PriceSeries prices;
    std::vector<AlignedDay> news;  // chronological; only days with news
};

struct DatasetStats {
    int emitted = 0;
    int skipped_history = 0;  // not enough prior days, or no next-day bar
    int skipped_outside = 0;  // target date outside every split range
};

struct Dataset {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
    DatasetStats stats;
};

/// Vocabulary rows as a dense [rows, dim] matrix; row 0 is the zero padding
/// row, ready to use as the model's embedding table.
Eigen::MatrixXd embedding_matrix(const Vocabulary& vocab);

/// Precomputed per-headline sentence vectors, keyed by the raw headline text.
using SentenceVectors = std::map<std::string, std::vector<double>>;

/// Reads JSONL lines of the form {"id": "...", "vec": [...]}.
SentenceVectors load_sentence_vectors(const std::string& path);

/// Builds sliding-window samples for every stock: a sample on day t needs
/// `window` prior trading days (for the price features) and a next-day bar
/// (for the target, the square root of the Garman-Klass variance). The
/// stock's position in `stocks` is its one-hot index, so config.n_stocks must
/// equal stocks.size(). The sidecar is required by the fixed_transferred
/// encoder and ignored otherwise.
Dataset build_samples(const std::vector<StockData>& stocks,
                      const Vocabulary& vocab, const ModelConfig& config,
                      const SplitSpec& split,
                      const SentenceVectors* sidecar = nullptr);

/// One epoch's shuffled partition of sample indices into batches; every index
/// appears exactly once. Call again with the same generator for the next
/// epoch's reshuffle.
std::vector<std::vector<int>> multi_stock_batches(int n_samples, int batch_size,
                                                  std::mt19937_64& rng);

struct EpochStats {
    double train_mse = 0;
    double val_mse = 0;
};

struct TrainResult {
    std::vector<EpochStats> history;  // one entry per completed epoch
    int best_epoch = -1;              // 0-based index into history
    double best_val_mse = std::numeric_limits<double>::infinity();
    bool early_stopped = false;
    bool diverged = false;
};

/// Adam training with per-epoch validation: keeps the weights of the best
/// validation epoch, stops after `patience` epochs without improvement, and
/// aborts on a non-finite loss (restoring the last finite best weights).
/// `params` holds the best weights on return.
TrainResult train(const ModelConfig& config, ModelParams& params,
                  const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& validation_samples,
                  const TrainConfig& tc);

/// Batched model predictions floored at zero (volatility is reported
/// non-negative; the training loss uses the raw network output).
Eigen::VectorXd model_forecasts(const ModelConfig& config, ModelParams& params,
                                const std::vector<Sample>& samples,
                                int batch_size);

/// One-step-ahead volatility per sample from a single quasi-maximum-likelihood
/// fit per stock on returns dated up to fit_end, then a fixed-parameter
/// variance filter across the whole series (no refitting).
Eigen::VectorXd garch_forecasts(const std::vector<StockData>& stocks,
                                const std::vector<Sample>& samples,
                                Date fit_end);

struct SectorReport {
    std::string sector;
    EvalReport report;
};

struct EvaluationResult {
    EvalReport overall;
    std::vector<SectorReport> sectors;  // sorted by sector name
};

/// Scores forecasts against the chosen range-based proxy (Garman-Klass or
/// Parkinson volatility), overall and per sector. Sectors with fewer than
/// three samples are omitted (the forecast regression needs three points).
EvaluationResult evaluate_forecasts_by_sector(const Eigen::VectorXd& forecasts,
                                              const std::vector<Sample>& samples,
                                              EstimatorKind proxy_kind);

EvaluationResult evaluate_model(const ModelConfig& config, ModelParams& params,
                                const std::vector<Sample>& test,
                                EstimatorKind proxy_kind, int batch_size);

EvaluationResult evaluate_garch(const std::vector<StockData>& stocks,
                                const std::vector<Sample>& test, Date fit_end,
                                EstimatorKind proxy_kind);

std::string evaluation_tsv_header();
/// One row per (model, proxy, sector) with "all" for the aggregate.
std::string evaluation_to_tsv(const std::string& model_name,
                              EstimatorKind proxy_kind,
                              const EvaluationResult& result);

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Stock-universe file: one "stock_id<TAB>sector" line per stock.
std::vector<std::pair<std::string, std::string>> load_universe(
    const std::string& path);
void write_universe(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& entries);

/// Sample-set file: line 1 is a metadata object with the window dimensions,
/// then one JSON object per sample tagged with its split.
void save_samples(const std::string& path, const ModelConfig& config,
                  const Dataset& dataset);
Dataset load_samples(const std::string& path, const ModelConfig& config);

/// Window dimensions from a sample file's metadata line, folded into an
/// otherwise-default configuration — enough to load the samples without
/// knowing which model produced or will consume them.
ModelConfig dataset_meta_config(const std::string& path);

/// Vocabulary file: JSON {"dim", "tokens", "rows"}; token 0 is the padding
/// entry with an all-zero row.
void save_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic data with a planted news signal
// ---------------------------------------------------------------------------

/// Generator settings: per-stock baseline variance follows a GARCH(1,1)
/// recursion; on shock days a headline carrying a designated token is
/// released and the NEXT day's true volatility is multiplied by
/// vol_multiplier; every day also carries distractor headlines so that news
/// presence alone carries no signal. Intraday prices are geometric Brownian
/// motion, aggregated to OHLC bars with chained opens.
struct PlantedConfig {
    int n_stocks = 5;
    int n_days = 1500;
    double shock_prob = 0.15;
    double vol_multiplier = 2.0;
    int intraday_steps = 100;
    int d_w = 8;                 // synthetic embedding width
    int n_distractor_tokens = 24;
    int max_daily_headlines = 3;  // distractor headlines per day, 1..max
    GarchParams base{0.0, 2e-6, 0.08, 0.87};
    Date start{2015, 1, 2};
    double train_frac = 0.70;
    double val_frac = 0.15;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PlantedData {
    std::vector<StockData> stocks;
    Vocabulary vocab;  // shock token + distractors with random embeddings
    SplitSpec split;
    std::string shock_token;
};

PlantedData generate_planted(const PlantedConfig& config);

}  // namespace volcast
