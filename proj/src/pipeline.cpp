#include "volcast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace volcast {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Split / train configuration
// ---------------------------------------------------------------------------

void SplitSpec::validate() const {
    for (const Date* d : {&train_start, &train_end, &val_start, &val_end,
                          &test_start, &test_end}) {
        if (!is_valid_date(*d))
            throw std::invalid_argument("split: invalid date " + format_date(*d));
    }
    if (train_end < train_start || val_end < val_start || test_end < test_start)
        throw std::invalid_argument("split: range end before start");
    if (!(train_end < val_start))
        throw std::invalid_argument("split: training range must end before validation starts");
    if (!(val_end < test_start))
        throw std::invalid_argument("split: validation range must end before test starts");
}

static std::array<Date, 2> range_from_json(const json& j, const char* name) {
    if (!j.contains(name) || !j[name].is_array() || j[name].size() != 2)
        throw std::invalid_argument(std::string("split: expected \"") + name +
                                    "\" as [start, end]");
    return {parse_date(j[name][0].get<std::string>()),
            parse_date(j[name][1].get<std::string>())};
}

std::string SplitSpec::to_json() const {
    json j;
    j["train"] = {format_date(train_start), format_date(train_end)};
    j["validation"] = {format_date(val_start), format_date(val_end)};
    j["test"] = {format_date(test_start), format_date(test_end)};
    return j.dump();
}

SplitSpec SplitSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("split: bad JSON: ") + e.what());
    }
    SplitSpec s;
    auto tr = range_from_json(j, "train");
    auto va = range_from_json(j, "validation");
    auto te = range_from_json(j, "test");
    s.train_start = tr[0];
    s.train_end = tr[1];
    s.val_start = va[0];
    s.val_end = va[1];
    s.test_start = te[0];
    s.test_end = te[1];
    s.validate();
    return s;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("train: patience must be >= 1");
    if (!(lr > 0)) throw std::invalid_argument("train: lr must be positive");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
        throw std::invalid_argument("train: beta1/beta2 must lie in [0, 1)");
    if (!(epsilon > 0)) throw std::invalid_argument("train: epsilon must be positive");
}

// ---------------------------------------------------------------------------
// Sample construction
// ---------------------------------------------------------------------------

Eigen::MatrixXd embedding_matrix(const Vocabulary& vocab) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(vocab.rows.size()), vocab.dim);
    for (std::size_t r = 0; r < vocab.rows.size(); ++r) {
        if (static_cast<int>(vocab.rows[r].size()) != vocab.dim)
            throw std::invalid_argument("vocabulary row width mismatch");
        for (int c = 0; c < vocab.dim; ++c)
            m(static_cast<Eigen::Index>(r), c) = vocab.rows[r][c];
    }
    return m;
}

SentenceVectors load_sentence_vectors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sentence-vector file: " + path);
    SentenceVectors out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            const std::string id = j.at("id").get<std::string>();
            std::vector<double> vec = j.at("vec").get<std::vector<double>>();
            if (vec.empty()) throw std::runtime_error("empty vector");
            out[id] = std::move(vec);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": bad sentence-vector line: " + e.what());
        }
    }
    return out;
}

static int split_of(const SplitSpec& split, const Date& d) {
    if (split.train_start <= d && d <= split.train_end) return 0;
    if (split.val_start <= d && d <= split.val_end) return 1;
    if (split.test_start <= d && d <= split.test_end) return 2;
    return -1;
}

Dataset build_samples(const std::vector<StockData>& stocks,
                      const Vocabulary& vocab, const ModelConfig& config,
                      const SplitSpec& split, const SentenceVectors* sidecar) {
    config.validate();
    split.validate();
    if (static_cast<int>(stocks.size()) != config.n_stocks)
        throw std::invalid_argument(
            "build_samples: config expects " + std::to_string(config.n_stocks) +
            " stocks, got " + std::to_string(stocks.size()));
    const bool fixed = config.encoder_kind == EncoderKind::fixed_transferred;
    const bool uses_tokens = !config.price_only && !fixed;
    if (fixed && !config.price_only && sidecar == nullptr)
        throw std::invalid_argument(
            "build_samples: the fixed sentence-vector encoder needs a sidecar");

    const int T = config.window;
    Dataset ds;
    for (int s = 0; s < static_cast<int>(stocks.size()); ++s) {
        const StockData& stock = stocks[s];
        const std::vector<OhlcBar>& bars = stock.prices.bars;
        std::map<Date, const AlignedDay*> by_date;
        for (const AlignedDay& day : stock.news) by_date[day.trading_date] = &day;

        const int n = static_cast<int>(bars.size());
        for (int t = 0; t < n; ++t) {
            // A window ending on day t needs T feature days (each with a
            // previous close) and a next-day bar for the target.
            if (t < T || t + 1 >= n) {
                ++ds.stats.skipped_history;
                continue;
            }
            const Date target_date = bars[t + 1].date;
            const int which = split_of(split, target_date);
            if (which < 0) {
                ++ds.stats.skipped_outside;
                continue;
            }

            Sample sample;
            sample.stock_id = stock.stock_id;
            sample.sector = stock.sector;
            sample.stock_index = s;
            sample.target_date = target_date;
            sample.target = std::sqrt(garman_klass(bars[t + 1]).variance);
            sample.parkinson_vol = std::sqrt(parkinson(bars[t + 1]).variance);

            sample.price_window.resize(T, 4);
            for (int w = 0; w < T; ++w) {
                const int day = t - T + 1 + w;
                const auto f = price_features(bars[day], bars[day - 1].close);
                for (int c = 0; c < 4; ++c) sample.price_window(w, c) = f[c];
            }

            if (uses_tokens) {
                sample.news_window.assign(
                    static_cast<std::size_t>(T) * config.l_n * config.l_s, 0);
                for (int w = 0; w < T; ++w) {
                    const auto it = by_date.find(bars[t - T + 1 + w].date);
                    if (it == by_date.end()) continue;
                    const auto rows = encode_day(*it->second, vocab, config.l_n,
                                                 config.l_s);
                    for (int j = 0; j < config.l_n; ++j)
                        for (int k = 0; k < config.l_s; ++k)
                            sample.news_window[(static_cast<std::size_t>(w) * config.l_n + j) *
                                                   config.l_s + k] = rows[j][k];
                }
            } else if (fixed && !config.price_only) {
                sample.sentence_vecs =
                    Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T) * config.l_n,
                                          config.d_s);
                for (int w = 0; w < T; ++w) {
                    const auto it = by_date.find(bars[t - T + 1 + w].date);
                    if (it == by_date.end()) continue;
                    const AlignedDay& day = *it->second;
                    const int m = std::min<int>(config.l_n,
                                                static_cast<int>(day.raw_texts.size()));
                    for (int j = 0; j < m; ++j) {
                        const auto vec_it = sidecar->find(day.raw_texts[j]);
                        if (vec_it == sidecar->end())
                            throw std::runtime_error(
                                "build_samples: no sentence vector for headline: " +
                                day.raw_texts[j]);
                        if (static_cast<int>(vec_it->second.size()) != config.d_s)
                            throw std::runtime_error(
                                "build_samples: sentence vector width " +
                                std::to_string(vec_it->second.size()) +
                                " does not match d_s=" + std::to_string(config.d_s));
                        for (int c = 0; c < config.d_s; ++c)
                            sample.sentence_vecs(static_cast<Eigen::Index>(w) * config.l_n + j,
                                                 c) = vec_it->second[c];
                    }
                }
            }

            ++ds.stats.emitted;
            (which == 0 ? ds.train : which == 1 ? ds.validation : ds.test)
                .push_back(std::move(sample));
        }
    }

    // The split ranges are ordered, so targets can never leak; verify anyway.
    Date last_fit{1, 1, 1};
    bool have_fit = false;
    for (const auto* part : {&ds.train, &ds.validation})
        for (const Sample& s : *part)
            if (!have_fit || last_fit < s.target_date) {
                last_fit = s.target_date;
                have_fit = true;
            }
    if (have_fit)
        for (const Sample& s : ds.test)
            if (!(last_fit < s.target_date))
                throw std::logic_error("build_samples: test target date " +
                                       format_date(s.target_date) +
                                       " does not postdate the fitting data");
    return ds;
}

std::vector<std::vector<int>> multi_stock_batches(int n_samples, int batch_size,
                                                  std::mt19937_64& rng) {
    if (n_samples < 0) throw std::invalid_argument("batches: negative sample count");
    if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
    std::vector<int> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n_samples; start += batch_size) {
        const int end = std::min(n_samples, start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

std::vector<Eigen::ArrayXd> snapshot_values(const std::vector<Tensor*>& ts) {
    std::vector<Eigen::ArrayXd> out;
    out.reserve(ts.size());
    for (const Tensor* t : ts) out.push_back(t->values);
    return out;
}

void restore_values(const std::vector<Tensor*>& ts,
                    const std::vector<Eigen::ArrayXd>& snap) {
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i]->values = snap[i];
}

/// Lazily built forward graphs, one per distinct batch size.
class GraphCache {
public:
    GraphCache(const ModelConfig& config, ModelParams& params)
        : config_(config), params_(params) {}

    ModelGraph& at(int batch) {
        auto it = graphs_.find(batch);
        if (it == graphs_.end())
            it = graphs_.emplace(batch, std::make_unique<ModelGraph>(config_, params_,
                                                                     batch)).first;
        return *it->second;
    }

private:
    const ModelConfig& config_;
    ModelParams& params_;
    std::map<int, std::unique_ptr<ModelGraph>> graphs_;
};

/// Mean squared error over a sample set, evaluated batch by batch without
/// touching gradients.
double dataset_mse(GraphCache& cache, const std::vector<Sample>& samples,
                   int batch_size) {
    double sum = 0;
    const int n = static_cast<int>(samples.size());
    for (int start = 0; start < n; start += batch_size) {
        const int b = std::min(batch_size, n - start);
        std::vector<const Sample*> ptrs(b);
        for (int i = 0; i < b; ++i) ptrs[i] = &samples[start + i];
        ModelGraph& g = cache.at(b);
        g.load(ptrs);
        g.graph().forward();
        sum += g.graph().value(g.loss_node()).values[0] * b;
    }
    return sum / n;
}

}  // namespace

TrainResult train(const ModelConfig& config, ModelParams& params,
                  const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& validation_samples,
                  const TrainConfig& tc) {
    config.validate();
    tc.validate();
    if (train_samples.empty() || validation_samples.empty())
        throw std::invalid_argument("train: training and validation sets must be non-empty");

    std::vector<Tensor*> trainable = params.trainable();
    std::vector<Eigen::ArrayXd> best = snapshot_values(trainable);

    GraphCache cache(config, params);
    AdamState opt;
    opt.lr = tc.lr;
    opt.beta1 = tc.beta1;
    opt.beta2 = tc.beta2;
    opt.eps = tc.epsilon;

    std::mt19937_64 rng(tc.seed);
    TrainResult result;
    const int n_train = static_cast<int>(train_samples.size());
    int epochs_since_best = 0;

    for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
        double train_sum = 0;
        for (const std::vector<int>& batch :
             multi_stock_batches(n_train, tc.batch_size, rng)) {
            std::vector<const Sample*> ptrs(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i)
                ptrs[i] = &train_samples[batch[i]];
            ModelGraph& g = cache.at(static_cast<int>(batch.size()));
            g.load(ptrs);
            g.graph().forward();
            const double loss = g.graph().value(g.loss_node()).values[0];
            if (!std::isfinite(loss)) {
                restore_values(trainable, best);
                result.diverged = true;
                return result;
            }
            train_sum += loss * static_cast<double>(batch.size());
            for (Tensor* t : trainable) t->zero_grad();
            g.graph().backward(g.loss_node());
            adam_step(trainable, opt);
        }

        const double val = dataset_mse(cache, validation_samples, tc.batch_size);
        if (!std::isfinite(val)) {
            restore_values(trainable, best);
            result.diverged = true;
            return result;
        }
        result.history.push_back({train_sum / n_train, val});

        if (val < result.best_val_mse) {
            result.best_val_mse = val;
            result.best_epoch = epoch;
            best = snapshot_values(trainable);
            epochs_since_best = 0;
        } else if (++epochs_since_best >= tc.patience) {
            result.early_stopped = true;
            break;
        }
    }

    restore_values(trainable, best);
    return result;
}

// ---------------------------------------------------------------------------
// Forecasts
// ---------------------------------------------------------------------------

Eigen::VectorXd model_forecasts(const ModelConfig& config, ModelParams& params,
                                const std::vector<Sample>& samples,
                                int batch_size) {
    return predict_all(config, params, samples, batch_size).cwiseMax(0.0);
}

Eigen::VectorXd garch_forecasts(const std::vector<StockData>& stocks,
                                const std::vector<Sample>& samples,
                                Date fit_end) {
    std::map<std::string, const StockData*> by_id;
    for (const StockData& s : stocks) by_id[s.stock_id] = &s;

    // One fit + one full-series filter per stock that actually has samples.
    std::map<std::string, std::vector<double>> filtered;  // aligned to returns
    std::map<std::string, const std::vector<OhlcBar>*> bars_of;
    for (const Sample& sample : samples) {
        if (filtered.count(sample.stock_id)) continue;
        const auto it = by_id.find(sample.stock_id);
        if (it == by_id.end())
            throw std::runtime_error("garch_forecasts: unknown stock " + sample.stock_id);
        const std::vector<OhlcBar>& bars = it->second->prices.bars;
        std::vector<double> returns, fit_returns;
        for (std::size_t i = 1; i < bars.size(); ++i) {
            const double r = close_return(bars[i].close, bars[i - 1].close);
            returns.push_back(r);
            if (bars[i].date <= fit_end) fit_returns.push_back(r);
        }
        if (fit_returns.size() < 20)
            throw std::runtime_error("garch_forecasts: only " +
                                     std::to_string(fit_returns.size()) +
                                     " fitting returns for stock " + sample.stock_id);
        const GarchFit f = fit(fit_returns);
        filtered[sample.stock_id] = filter_variance(returns, f.params).cond_variance;
        bars_of[sample.stock_id] = &bars;
    }

    Eigen::VectorXd out(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& sample = samples[i];
        const std::vector<OhlcBar>& bars = *bars_of[sample.stock_id];
        const auto pos = std::lower_bound(
            bars.begin(), bars.end(), sample.target_date,
            [](const OhlcBar& b, const Date& d) { return b.date < d; });
        if (pos == bars.end() || pos->date != sample.target_date || pos == bars.begin())
            throw std::runtime_error("garch_forecasts: no bar for " + sample.stock_id +
                                     " on " + format_date(sample.target_date));
        const std::size_t j = static_cast<std::size_t>(pos - bars.begin());
        // cond_variance[k] is the one-step-ahead variance of the return at
        // bar k+1, computed from information through bar k.
        out[static_cast<Eigen::Index>(i)] = std::sqrt(filtered[sample.stock_id][j - 1]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

static double proxy_value(const Sample& s, EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::garman_klass: return s.target;
        case EstimatorKind::parkinson: return s.parkinson_vol;
        default:
            throw std::invalid_argument(
                "evaluate: proxy must be a range-based estimator");
    }
}

EvaluationResult evaluate_forecasts_by_sector(const Eigen::VectorXd& forecasts,
                                              const std::vector<Sample>& samples,
                                              EstimatorKind proxy_kind) {
    if (static_cast<std::size_t>(forecasts.size()) != samples.size())
        throw std::invalid_argument("evaluate: forecast/sample count mismatch");
    if (samples.empty()) throw std::invalid_argument("evaluate: no samples");

    std::vector<double> f(samples.size()), p(samples.size());
    std::map<std::string, std::vector<std::size_t>> sectors;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        f[i] = forecasts[static_cast<Eigen::Index>(i)];
        p[i] = proxy_value(samples[i], proxy_kind);
        sectors[samples[i].sector].push_back(i);
    }

    EvaluationResult result;
    result.overall = evaluate_forecasts(f, p, to_string(proxy_kind));
    for (const auto& [sector, idx] : sectors) {
        if (idx.size() < 3) continue;
        std::vector<double> sf, sp;
        sf.reserve(idx.size());
        sp.reserve(idx.size());
        for (std::size_t i : idx) {
            sf.push_back(f[i]);
            sp.push_back(p[i]);
        }
        try {
            result.sectors.push_back({sector, evaluate_forecasts(sf, sp,
                                                                 to_string(proxy_kind))});
        } catch (const std::invalid_argument&) {
            // Constant forecasts within a sector leave the regression
            // undefined; the sector is omitted rather than faked.
        }
    }
    return result;
}

EvaluationResult evaluate_model(const ModelConfig& config, ModelParams& params,
                                const std::vector<Sample>& test,
                                EstimatorKind proxy_kind, int batch_size) {
    return evaluate_forecasts_by_sector(
        model_forecasts(config, params, test, batch_size), test, proxy_kind);
}

EvaluationResult evaluate_garch(const std::vector<StockData>& stocks,
                                const std::vector<Sample>& test, Date fit_end,
                                EstimatorKind proxy_kind) {
    return evaluate_forecasts_by_sector(garch_forecasts(stocks, test, fit_end),
                                        test, proxy_kind);
}

std::string evaluation_tsv_header() {
    return "model\tproxy\tsector\tn\tmse\tmae\tr2\tmz_intercept\tmz_slope";
}

static std::string tsv_row(const std::string& model, const std::string& proxy,
                           const std::string& sector, const EvalReport& r) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "%s\t%s\t%s\t%zu\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g",
                  model.c_str(), proxy.c_str(), sector.c_str(), r.n, r.mse, r.mae,
                  r.r2, r.mz_intercept, r.mz_slope);
    return buf;
}

std::string evaluation_to_tsv(const std::string& model_name,
                              EstimatorKind proxy_kind,
                              const EvaluationResult& result) {
    const std::string proxy = to_string(proxy_kind);
    std::string out = tsv_row(model_name, proxy, "all", result.overall) + "\n";
    for (const SectorReport& s : result.sectors)
        out += tsv_row(model_name, proxy, s.sector, s.report) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

std::vector<std::pair<std::string, std::string>> load_universe(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open universe file: " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected stock_id<TAB>sector");
        std::string id = line.substr(0, tab);
        if (!seen.insert(id).second)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": duplicate stock id " + id);
        out.emplace_back(std::move(id), line.substr(tab + 1));
    }
    return out;
}

void write_universe(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write universe file: " + path);
    for (const auto& [id, sector] : entries) out << id << '\t' << sector << '\n';
}

namespace {

json sample_to_json(const Sample& s, const char* split) {
    json j;
    j["split"] = split;
    j["stock_id"] = s.stock_id;
    j["sector"] = s.sector;
    j["stock_index"] = s.stock_index;
    j["target_date"] = format_date(s.target_date);
    j["target"] = s.target;
    j["parkinson_vol"] = s.parkinson_vol;
    json price = json::array();
    for (Eigen::Index r = 0; r < s.price_window.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < s.price_window.cols(); ++c)
            row.push_back(s.price_window(r, c));
        price.push_back(std::move(row));
    }
    j["price"] = std::move(price);
    if (!s.news_window.empty()) j["tokens"] = s.news_window;
    if (s.sentence_vecs.size() > 0) {
        json vecs = json::array();
        for (Eigen::Index r = 0; r < s.sentence_vecs.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < s.sentence_vecs.cols(); ++c)
                row.push_back(s.sentence_vecs(r, c));
            vecs.push_back(std::move(row));
        }
        j["sentence_vecs"] = std::move(vecs);
    }
    return j;
}

Sample sample_from_json(const json& j, const ModelConfig& config,
                        const std::string& where) {
    Sample s;
    s.stock_id = j.at("stock_id").get<std::string>();
    s.sector = j.at("sector").get<std::string>();
    s.stock_index = j.at("stock_index").get<int>();
    if (s.stock_index < 0 || s.stock_index >= config.n_stocks)
        throw std::runtime_error(where + ": stock_index out of range");
    s.target_date = parse_date(j.at("target_date").get<std::string>());
    s.target = j.at("target").get<double>();
    s.parkinson_vol = j.at("parkinson_vol").get<double>();
    const json& price = j.at("price");
    if (static_cast<int>(price.size()) != config.window)
        throw std::runtime_error(where + ": price window length mismatch");
    s.price_window.resize(config.window, 4);
    for (int r = 0; r < config.window; ++r) {
        if (static_cast<int>(price[r].size()) != 4)
            throw std::runtime_error(where + ": price row needs 4 features");
        for (int c = 0; c < 4; ++c) s.price_window(r, c) = price[r][c].get<double>();
    }
    if (j.contains("tokens")) {
        s.news_window = j["tokens"].get<std::vector<int>>();
        const std::size_t want =
            static_cast<std::size_t>(config.window) * config.l_n * config.l_s;
        if (s.news_window.size() != want)
            throw std::runtime_error(where + ": token block length mismatch");
    }
    if (j.contains("sentence_vecs")) {
        const json& vecs = j["sentence_vecs"];
        const int rows = config.window * config.l_n;
        if (static_cast<int>(vecs.size()) != rows)
            throw std::runtime_error(where + ": sentence-vector row count mismatch");
        s.sentence_vecs.resize(rows, config.d_s);
        for (int r = 0; r < rows; ++r) {
            if (static_cast<int>(vecs[r].size()) != config.d_s)
                throw std::runtime_error(where + ": sentence-vector width mismatch");
            for (int c = 0; c < config.d_s; ++c)
                s.sentence_vecs(r, c) = vecs[r][c].get<double>();
        }
    }
    return s;
}

}  // namespace

void save_samples(const std::string& path, const ModelConfig& config,
                  const Dataset& dataset) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sample file: " + path);
    json meta;
    meta["format_version"] = 1;
    meta["window"] = config.window;
    meta["l_n"] = config.l_n;
    meta["l_s"] = config.l_s;
    meta["d_s"] = config.d_s;
    meta["n_stocks"] = config.n_stocks;
    out << meta.dump() << '\n';
    for (const Sample& s : dataset.train) out << sample_to_json(s, "train").dump() << '\n';
    for (const Sample& s : dataset.validation)
        out << sample_to_json(s, "validation").dump() << '\n';
    for (const Sample& s : dataset.test) out << sample_to_json(s, "test").dump() << '\n';
}

Dataset load_samples(const std::string& path, const ModelConfig& config) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sample file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty sample file");
    json meta;
    try {
        meta = json::parse(line);
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ":1: bad metadata line: " + e.what());
    }
    if (meta.value("format_version", -1) != 1)
        throw std::runtime_error(path + ": unsupported sample-file version");
    for (const char* key : {"window", "l_n", "l_s", "n_stocks"}) {
        int want = key == std::string("window") ? config.window
                   : key == std::string("l_n") ? config.l_n
                   : key == std::string("l_s") ? config.l_s
                                               : config.n_stocks;
        if (meta.value(key, -1) != want)
            throw std::runtime_error(path + ": metadata " + key + "=" +
                                     std::to_string(meta.value(key, -1)) +
                                     " does not match the model configuration");
    }

    Dataset ds;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error(where + ": bad JSON: " + e.what());
        }
        const std::string split = j.value("split", "");
        Sample s = sample_from_json(j, config, where);
        if (split == "train")
            ds.train.push_back(std::move(s));
        else if (split == "validation")
            ds.validation.push_back(std::move(s));
        else if (split == "test")
            ds.test.push_back(std::move(s));
        else
            throw std::runtime_error(where + ": unknown split tag \"" + split + "\"");
    }
    ds.stats.emitted = static_cast<int>(ds.train.size() + ds.validation.size() +
                                        ds.test.size());
    return ds;
}

ModelConfig dataset_meta_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sample file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty sample file");
    json meta;
    try {
        meta = json::parse(line);
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ":1: bad metadata line: " + e.what());
    }
    if (meta.value("format_version", -1) != 1)
        throw std::runtime_error(path + ": unsupported sample-file version");
    ModelConfig c;
    c.window = meta.value("window", c.window);
    c.l_n = meta.value("l_n", c.l_n);
    c.l_s = meta.value("l_s", c.l_s);
    c.d_s = meta.value("d_s", c.d_s);
    c.n_stocks = meta.value("n_stocks", c.n_stocks);
    return c;
}

void save_vocab(const std::string& path, const Vocabulary& vocab) {
    if (vocab.tokens.size() != vocab.rows.size())
        throw std::invalid_argument("vocabulary token/row count mismatch");
    json j;
    j["dim"] = vocab.dim;
    j["tokens"] = vocab.tokens;
    j["rows"] = vocab.rows;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
    out << j.dump() << '\n';
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": bad vocabulary JSON: " + e.what());
    }
    Vocabulary v;
    v.dim = j.at("dim").get<int>();
    v.tokens = j.at("tokens").get<std::vector<std::string>>();
    v.rows = j.at("rows").get<std::vector<std::vector<double>>>();
    if (v.tokens.empty() || !v.tokens[0].empty())
        throw std::runtime_error(path + ": vocabulary entry 0 must be the padding token");
    if (v.tokens.size() != v.rows.size())
        throw std::runtime_error(path + ": vocabulary token/row count mismatch");
    for (const auto& row : v.rows)
        if (static_cast<int>(row.size()) != v.dim)
            throw std::runtime_error(path + ": vocabulary row width mismatch");
    for (std::size_t i = 1; i < v.tokens.size(); ++i) {
        if (v.tokens[i].empty())
            throw std::runtime_error(path + ": empty token outside the padding slot");
        if (!v.index.emplace(v.tokens[i], static_cast<int>(i)).second)
            throw std::runtime_error(path + ": duplicate token " + v.tokens[i]);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Planted-signal generator
// ---------------------------------------------------------------------------

void PlantedConfig::validate() const {
    if (n_stocks < 1) throw std::invalid_argument("planted: n_stocks must be >= 1");
    if (n_days < 30) throw std::invalid_argument("planted: n_days must be >= 30");
    if (!(shock_prob >= 0 && shock_prob <= 1))
        throw std::invalid_argument("planted: shock_prob must lie in [0, 1]");
    if (!(vol_multiplier > 0))
        throw std::invalid_argument("planted: vol_multiplier must be positive");
    if (intraday_steps < 2)
        throw std::invalid_argument("planted: intraday_steps must be >= 2");
    if (d_w < 1) throw std::invalid_argument("planted: d_w must be >= 1");
    if (n_distractor_tokens < 2)
        throw std::invalid_argument("planted: need at least two distractor tokens");
    if (max_daily_headlines < 1)
        throw std::invalid_argument("planted: max_daily_headlines must be >= 1");
    if (!(train_frac > 0 && val_frac > 0 && train_frac + val_frac < 1))
        throw std::invalid_argument("planted: split fractions must be positive and sum below 1");
    validate_params(base);
}

PlantedData generate_planted(const PlantedConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    // Unit-scale embeddings keep the word encoder's activations away from the
    // near-zero regime where the planted token would take very long to learn.
    std::normal_distribution<double> emb(0.0, 1.0);
    std::bernoulli_distribution shock_draw(config.shock_prob);

    // Consecutive weekdays starting at config.start.
    std::vector<Date> dates;
    dates.reserve(config.n_days);
    std::int64_t z = days_from_civil(config.start);
    while (static_cast<int>(dates.size()) < config.n_days) {
        const Date d = civil_from_days(z++);
        const int wd = weekday(d);
        if (wd != 0 && wd != 6) dates.push_back(d);
    }

    PlantedData data;
    Vocabulary& vocab = data.vocab;
    vocab.dim = config.d_w;
    vocab.tokens = {""};
    vocab.rows = {std::vector<double>(config.d_w, 0.0)};
    auto add_token = [&](const std::string& tok) {
        vocab.index[tok] = static_cast<int>(vocab.tokens.size());
        vocab.tokens.push_back(tok);
        std::vector<double> row(config.d_w);
        for (double& v : row) v = emb(rng);
        vocab.rows.push_back(std::move(row));
    };
    const std::string shock_token = "turbulence";
    data.shock_token = shock_token;
    add_token(shock_token);
    std::vector<std::string> distractors;
    for (int i = 0; i < config.n_distractor_tokens; ++i) {
        std::string tok = "filler" + std::to_string(i);
        add_token(tok);
        distractors.push_back(std::move(tok));
    }

    const char* sector_names[] = {"industrials", "technology", "finance"};
    const double unconditional =
        config.base.a0 / (1.0 - config.base.a1 - config.base.b1);
    std::uniform_int_distribution<int> n_heads(1, config.max_daily_headlines);
    std::uniform_int_distribution<int> head_len(3, 6);
    std::uniform_int_distribution<int> pick(0, config.n_distractor_tokens - 1);

    for (int s = 0; s < config.n_stocks; ++s) {
        StockData stock;
        stock.stock_id = "SYN" + std::to_string(s);
        stock.sector = sector_names[s % 3];
        stock.prices.stock_id = stock.stock_id;

        // Baseline volatility follows the GARCH recursion on its own shocks;
        // the planted burst scales the realized day without feeding back, so
        // neither past prices nor past returns anticipate it.
        std::vector<double> base_sigma(config.n_days);
        double var = unconditional;
        for (int t = 0; t < config.n_days; ++t) {
            base_sigma[t] = std::sqrt(var);
            const double eps = base_sigma[t] * gauss(rng);
            var = config.base.a0 + config.base.a1 * eps * eps + config.base.b1 * var;
        }
        std::vector<char> shock_day(config.n_days);
        for (int t = 0; t < config.n_days; ++t) shock_day[t] = shock_draw(rng);

        double prev_close = 100.0;
        for (int t = 0; t < config.n_days; ++t) {
            const bool elevated = t > 0 && shock_day[t - 1];
            const double sigma =
                base_sigma[t] * (elevated ? config.vol_multiplier : 1.0);
            OhlcBar bar = simulate_gbm_day(sigma, config.intraday_steps, rng());
            const double f = prev_close / 100.0;
            bar.date = dates[t];
            bar.open *= f;
            bar.high *= f;
            bar.low *= f;
            bar.close *= f;
            prev_close = bar.close;
            stock.prices.bars.push_back(bar);

            AlignedDay day;
            day.stock_id = stock.stock_id;
            day.trading_date = dates[t];
            day.has_news = true;
            const int k = n_heads(rng);
            for (int h = 0; h < k; ++h) {
                std::vector<std::string> toks;
                const int len = head_len(rng);
                for (int w = 0; w < len; ++w) toks.push_back(distractors[pick(rng)]);
                day.headlines.push_back(std::move(toks));
            }
            if (shock_day[t]) {
                // The shock headline repeats the designated token so its
                // sentence-level signature stays strong under uniform word
                // pooling; it lands at a random slot among the distractors.
                std::vector<std::string> toks(head_len(rng), shock_token);
                const int slot = std::uniform_int_distribution<int>(
                    0, static_cast<int>(day.headlines.size()))(rng);
                day.headlines.insert(day.headlines.begin() + slot, std::move(toks));
            }
            for (const auto& toks : day.headlines) {
                std::string text;
                for (const std::string& tok : toks) {
                    if (!text.empty()) text += ' ';
                    text += tok;
                }
                day.raw_texts.push_back(std::move(text));
            }
            stock.news.push_back(std::move(day));
        }
        data.stocks.push_back(std::move(stock));
    }

    const int n_tr = static_cast<int>(std::lround(config.n_days * config.train_frac));
    const int n_va = static_cast<int>(std::lround(config.n_days * config.val_frac));
    if (n_tr < 1 || n_va < 1 || n_tr + n_va >= config.n_days)
        throw std::invalid_argument("planted: split fractions leave an empty range");
    data.split.train_start = dates.front();
    data.split.train_end = dates[n_tr - 1];
    data.split.val_start = dates[n_tr];
    data.split.val_end = dates[n_tr + n_va - 1];
    data.split.test_start = dates[n_tr + n_va];
    data.split.test_end = dates.back();
    return data;
}

}  // namespace volcast
