// Command-line front end: every subcommand reads a JSON configuration
// (inline or from a file), takes a seed, writes its primary output to --out,
// prints a one-line JSON summary to stdout, and reports failures as one JSON
// object on stderr with a non-zero exit code.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "volcast/diagnostics.hpp"
#include "volcast/pipeline.hpp"

namespace {

using json = nlohmann::json;
using namespace volcast;

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
};

json parse_config(const std::string& spec) {
    if (spec.empty()) return json::object();
    std::string text = spec;
    if (spec.front() != '{') {
        std::ifstream in(spec);
        if (!in) throw std::runtime_error("cannot open config file: " + spec);
        std::stringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
    return j;
}

void ensure_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_file(const std::string& path, const std::string& content) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    out << content;
}

std::string require_string(const json& cfg, const char* key) {
    if (!cfg.contains(key) || !cfg[key].is_string())
        throw std::runtime_error(std::string("config needs \"") + key +
                                 "\" (string)");
    return cfg[key].get<std::string>();
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<double> closes_to_returns(const PriceSeries& series) {
    std::vector<double> r;
    for (std::size_t i = 1; i < series.bars.size(); ++i)
        r.push_back(close_return(series.bars[i].close, series.bars[i - 1].close));
    return r;
}

PriceSeries prices_from_config(const json& cfg) {
    return load_ohlc_csv(require_string(cfg, "prices"));
}

json bars_to_json(const PriceSeries& series) {
    json bars = json::array();
    for (const OhlcBar& b : series.bars)
        bars.push_back({{"date", format_date(b.date)},
                        {"open", b.open},
                        {"high", b.high},
                        {"low", b.low},
                        {"close", b.close}});
    return {{"stock_id", series.stock_id}, {"bars", std::move(bars)}};
}

GarchParams garch_params_from_json(const json& j) {
    GarchParams p;
    p.mu = j.value("mu", p.mu);
    p.a0 = j.value("a0", p.a0);
    p.a1 = j.value("a1", p.a1);
    p.b1 = j.value("b1", p.b1);
    validate_params(p);
    return p;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig tc;
    tc.batch_size = j.value("batch_size", tc.batch_size);
    tc.max_epochs = j.value("max_epochs", tc.max_epochs);
    tc.patience = j.value("patience", tc.patience);
    tc.lr = j.value("lr", tc.lr);
    tc.beta1 = j.value("beta1", tc.beta1);
    tc.beta2 = j.value("beta2", tc.beta2);
    tc.epsilon = j.value("epsilon", tc.epsilon);
    tc.validate();
    return tc;
}

PlantedConfig planted_from_json(const json& j) {
    PlantedConfig pc;
    pc.n_stocks = j.value("n_stocks", pc.n_stocks);
    pc.n_days = j.value("n_days", pc.n_days);
    pc.shock_prob = j.value("shock_prob", pc.shock_prob);
    pc.vol_multiplier = j.value("vol_multiplier", pc.vol_multiplier);
    pc.intraday_steps = j.value("intraday_steps", pc.intraday_steps);
    pc.d_w = j.value("d_w", pc.d_w);
    pc.n_distractor_tokens = j.value("n_distractor_tokens", pc.n_distractor_tokens);
    pc.max_daily_headlines = j.value("max_daily_headlines", pc.max_daily_headlines);
    if (j.contains("base")) pc.base = garch_params_from_json(j["base"]);
    if (j.contains("start")) pc.start = parse_date(j["start"].get<std::string>());
    pc.train_frac = j.value("train_frac", pc.train_frac);
    pc.val_frac = j.value("val_frac", pc.val_frac);
    return pc;
}

const std::vector<Sample>& pick_split(const Dataset& ds, const std::string& name) {
    if (name == "train") return ds.train;
    if (name == "validation") return ds.validation;
    if (name == "test") return ds.test;
    throw std::runtime_error("unknown split \"" + name +
                             "\" (train|validation|test)");
}

std::vector<EstimatorKind> proxies_from_config(const json& cfg) {
    std::vector<EstimatorKind> kinds;
    if (cfg.contains("proxies")) {
        for (const auto& p : cfg["proxies"])
            kinds.push_back(estimator_from_string(p.get<std::string>()));
    } else {
        kinds = {EstimatorKind::garman_klass, EstimatorKind::parkinson};
    }
    return kinds;
}

// ---------------------------------------------------------------------------
// Subcommand handlers
// ---------------------------------------------------------------------------

json cmd_simulate_gbm(const Options& o, const json& cfg) {
    const double sigma = cfg.value("sigma_daily", 0.02);
    const int steps = cfg.value("n_steps", 100);
    const int n_days = cfg.value("n_days", 250);
    if (!(sigma > 0)) throw std::runtime_error("sigma_daily must be positive");
    if (steps < 2) throw std::runtime_error("n_steps must be >= 2");
    if (n_days < 1) throw std::runtime_error("n_days must be >= 1");

    PriceSeries series;
    series.stock_id = cfg.value("stock_id", std::string("SIM"));
    Date d = parse_date(cfg.value("start", std::string("2016-01-04")));
    std::mt19937_64 rng(o.seed);
    std::int64_t z = days_from_civil(d);
    double prev_close = 100.0;
    while (static_cast<int>(series.bars.size()) < n_days) {
        const Date day = civil_from_days(z++);
        if (weekday(day) == 0 || weekday(day) == 6) continue;
        OhlcBar bar = simulate_gbm_day(sigma, steps, rng());
        const double f = prev_close / 100.0;
        bar.date = day;
        bar.open *= f;
        bar.high *= f;
        bar.low *= f;
        bar.close *= f;
        prev_close = bar.close;
        series.bars.push_back(bar);
    }

    if (ends_with(o.out, ".csv")) {
        ensure_parent(o.out);
        write_ohlc_csv(o.out, series);
    } else {
        write_file(o.out, bars_to_json(series).dump(2) + "\n");
    }
    return {{"command", "simulate-gbm"}, {"stock_id", series.stock_id},
            {"n_days", n_days}, {"out", o.out}};
}

json cmd_simulate_garch(const Options& o, const json& cfg) {
    const GarchParams p = garch_params_from_json(cfg);
    const int n = cfg.value("n", 0);
    if (n < 1) throw std::runtime_error("config needs \"n\" >= 1");
    const std::vector<double> returns = simulate_garch(p, n, o.seed);
    json out;
    out["params"] = {{"mu", p.mu}, {"a0", p.a0}, {"a1", p.a1}, {"b1", p.b1}};
    out["returns"] = returns;
    write_file(o.out, out.dump() + "\n");
    return {{"command", "simulate-garch"}, {"n", n}, {"out", o.out}};
}

json cmd_estimate(const Options& o, const json& cfg) {
    const PriceSeries series = prices_from_config(cfg);
    const EstimatorKind kind =
        estimator_from_string(cfg.value("estimator", std::string("garman_klass")));
    std::string tsv = "date\tvariance\n";
    int rows = 0;
    if (kind == EstimatorKind::squared_return) {
        for (std::size_t i = 1; i < series.bars.size(); ++i) {
            const double r = close_return(series.bars[i].close,
                                          series.bars[i - 1].close);
            tsv += format_date(series.bars[i].date) + "\t" +
                   fmt(squared_return_proxy(r).variance) + "\n";
            ++rows;
        }
    } else {
        for (const OhlcBar& bar : series.bars) {
            const DailyVolProxy v = kind == EstimatorKind::parkinson
                                        ? parkinson(bar)
                                        : garman_klass(bar);
            tsv += format_date(bar.date) + "\t" + fmt(v.variance) + "\n";
            ++rows;
        }
    }
    write_file(o.out, tsv);
    return {{"command", "estimate"}, {"estimator", to_string(kind)},
            {"rows", rows}, {"out", o.out}};
}

json cmd_garch_fit(const Options& o, const json& cfg) {
    std::vector<double> returns;
    if (cfg.contains("returns"))
        returns = cfg["returns"].get<std::vector<double>>();
    else
        returns = closes_to_returns(prices_from_config(cfg));
    const GarchFit f = fit(returns);
    write_file(o.out, fit_to_json(f) + "\n");
    return {{"command", "garch-fit"}, {"n_returns", returns.size()},
            {"converged", f.converged}, {"out", o.out}};
}

json cmd_garch_forecast(const Options& o, const json& cfg) {
    GarchParams p;
    if (cfg.contains("params")) {
        p = garch_params_from_json(cfg["params"]);
    } else if (cfg.contains("fit")) {
        std::ifstream in(cfg["fit"].get<std::string>());
        if (!in)
            throw std::runtime_error("cannot open fit file: " +
                                     cfg["fit"].get<std::string>());
        std::stringstream buf;
        buf << in.rdbuf();
        p = params_from_json(buf.str());
    } else {
        throw std::runtime_error("config needs \"params\" or \"fit\"");
    }
    const int horizon = cfg.value("horizon", 10);
    const GarchFit filtered =
        filter_variance(closes_to_returns(prices_from_config(cfg)), p);
    const GarchForecast fc = forecast_multi_step(filtered, horizon);
    json out;
    out["horizon"] = fc.horizon;
    out["expected_variance"] = fc.expected_variance;
    out["one_step"] = fc.expected_variance.front();
    out["unconditional_variance"] = fc.unconditional_variance;
    write_file(o.out, out.dump() + "\n");
    return {{"command", "garch-forecast"}, {"horizon", horizon}, {"out", o.out}};
}

json cmd_ingest(const Options& o, const json& cfg) {
    const HeadlineLoadResult res =
        load_headlines_jsonl(require_string(cfg, "headlines"));
    std::string lines;
    for (const HeadlineRecord& r : res.records) {
        json j = {{"stock", r.stock_id},
                  {"utc", format_timestamp(r.timestamp_utc)},
                  {"text", r.text}};
        lines += j.dump() + "\n";
    }
    write_file(o.out, lines);
    json summary = {{"command", "ingest"},
                    {"accepted", res.records.size()},
                    {"rejected", res.rejects.size()},
                    {"out", o.out}};
    if (!res.rejects.empty()) summary["rejects"] = res.rejects;
    return summary;
}

json cmd_align(const Options& o, const json& cfg) {
    const HeadlineLoadResult res =
        load_headlines_jsonl(require_string(cfg, "headlines"));
    TradingCalendar calendar;
    if (cfg.contains("calendar"))
        calendar = TradingCalendar::load(cfg["calendar"].get<std::string>());
    const auto aligned = align(res.records, calendar);

    std::string lines;
    std::size_t days = 0;
    for (const auto& [stock, day_list] : aligned)
        for (const AlignedDay& day : day_list) {
            json j = {{"stock", day.stock_id},
                      {"date", format_date(day.trading_date)},
                      {"texts", day.raw_texts}};
            lines += j.dump() + "\n";
            ++days;
        }
    write_file(o.out, lines);

    json hist = json::object();
    for (const auto& [cat, count] : category_histogram(res.records, calendar))
        hist[to_string(cat)] = count;
    return {{"command", "align"},     {"stocks", aligned.size()},
            {"days", days},           {"rejected", res.rejects.size()},
            {"histogram", hist},      {"out", o.out}};
}

json cmd_build_dataset(const Options& o, const json& cfg) {
    if (!cfg.contains("model"))
        throw std::runtime_error("config needs \"model\" (model configuration)");
    ModelConfig mc = ModelConfig::from_json(cfg["model"].dump());

    std::vector<StockData> stocks;
    Vocabulary vocab;
    SplitSpec split;
    SentenceVectors sidecar;
    bool have_sidecar = false;

    if (cfg.contains("planted")) {
        PlantedConfig pc = planted_from_json(cfg["planted"]);
        pc.seed = o.seed;
        PlantedData data = generate_planted(pc);
        stocks = std::move(data.stocks);
        vocab = std::move(data.vocab);
        split = data.split;
    } else {
        const auto universe = load_universe(require_string(cfg, "universe"));
        const std::string dir = require_string(cfg, "prices_dir");
        split = SplitSpec::from_json(cfg.at("split").dump());
        std::map<std::string, std::vector<AlignedDay>> aligned;
        if (cfg.contains("headlines")) {
            const HeadlineLoadResult res =
                load_headlines_jsonl(cfg["headlines"].get<std::string>());
            TradingCalendar calendar;
            if (cfg.contains("calendar"))
                calendar = TradingCalendar::load(cfg["calendar"].get<std::string>());
            aligned = align(res.records, calendar);
        }
        for (const auto& [id, sector] : universe) {
            StockData s;
            s.stock_id = id;
            s.sector = sector;
            s.prices = load_ohlc_csv(dir + "/" + id + ".csv", id);
            if (const auto it = aligned.find(id); it != aligned.end())
                s.news = it->second;
            stocks.push_back(std::move(s));
        }
        const bool needs_vocab =
            !mc.price_only && mc.encoder_kind != EncoderKind::fixed_transferred;
        if (needs_vocab)
            vocab = build_vocab(aligned, require_string(cfg, "embeddings"));
        if (cfg.contains("sentence_vectors")) {
            sidecar = load_sentence_vectors(cfg["sentence_vectors"].get<std::string>());
            have_sidecar = true;
        }
    }

    mc.n_stocks = static_cast<int>(stocks.size());
    const Dataset ds =
        build_samples(stocks, vocab, mc, split, have_sidecar ? &sidecar : nullptr);
    ensure_parent(o.out);
    save_samples(o.out, mc, ds);

    if (cfg.contains("vocab_out")) {
        ensure_parent(cfg["vocab_out"].get<std::string>());
        save_vocab(cfg["vocab_out"].get<std::string>(), vocab);
    }
    if (cfg.contains("universe_out")) {
        std::vector<std::pair<std::string, std::string>> entries;
        for (const StockData& s : stocks) entries.emplace_back(s.stock_id, s.sector);
        ensure_parent(cfg["universe_out"].get<std::string>());
        write_universe(cfg["universe_out"].get<std::string>(), entries);
    }
    if (cfg.contains("prices_out")) {
        const std::string dir = cfg["prices_out"].get<std::string>();
        std::filesystem::create_directories(dir);
        for (const StockData& s : stocks)
            write_ohlc_csv(dir + "/" + s.stock_id + ".csv", s.prices);
    }

    return {{"command", "build-dataset"},
            {"stocks", stocks.size()},
            {"train", ds.train.size()},
            {"validation", ds.validation.size()},
            {"test", ds.test.size()},
            {"skipped_history", ds.stats.skipped_history},
            {"skipped_outside", ds.stats.skipped_outside},
            {"out", o.out}};
}

json cmd_train(const Options& o, const json& cfg) {
    if (!cfg.contains("model"))
        throw std::runtime_error("config needs \"model\" (model configuration)");
    ModelConfig mc = ModelConfig::from_json(cfg["model"].dump());
    const Dataset ds = load_samples(require_string(cfg, "dataset"), mc);

    Eigen::MatrixXd emb;
    if (!mc.price_only && mc.encoder_kind != EncoderKind::fixed_transferred) {
        const Vocabulary vocab = load_vocab(require_string(cfg, "vocab"));
        if (vocab.dim != mc.d_w)
            throw std::runtime_error(
                "vocabulary width " + std::to_string(vocab.dim) +
                " does not match the model's d_w=" + std::to_string(mc.d_w));
        emb = embedding_matrix(vocab);
    }

    ModelParams params = ModelParams::init(mc, emb, o.seed);
    TrainConfig tc = train_config_from_json(cfg.value("train", json::object()));
    tc.seed = o.seed;

    const TrainResult r = train(mc, params, ds.train, ds.validation, tc);
    ensure_parent(o.out);
    save_model(o.out, mc, params);

    if (r.diverged)
        throw std::runtime_error(
            "training diverged after " + std::to_string(r.history.size()) +
            " epochs; last finite weights saved to " + o.out);

    json history = json::array();
    for (const EpochStats& e : r.history)
        history.push_back({{"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
    return {{"command", "train"},
            {"epochs", r.history.size()},
            {"best_epoch", r.best_epoch},
            {"best_val_mse", r.best_val_mse},
            {"early_stopped", r.early_stopped},
            {"history", std::move(history)},
            {"out", o.out}};
}

json cmd_predict(const Options& o, const json& cfg) {
    auto [mc, params] = load_model(require_string(cfg, "checkpoint"));
    const Dataset ds = load_samples(require_string(cfg, "dataset"), mc);
    const std::vector<Sample>& part =
        pick_split(ds, cfg.value("split", std::string("test")));
    if (part.empty()) throw std::runtime_error("selected split has no samples");
    const int batch = cfg.value("batch_size", 32);
    const Eigen::VectorXd fc = model_forecasts(mc, params, part, batch);

    std::string tsv = "stock_id\tdate\tforecast\tgarman_klass_vol\tparkinson_vol\n";
    for (std::size_t i = 0; i < part.size(); ++i)
        tsv += part[i].stock_id + "\t" + format_date(part[i].target_date) + "\t" +
               fmt(fc[static_cast<Eigen::Index>(i)]) + "\t" + fmt(part[i].target) +
               "\t" + fmt(part[i].parkinson_vol) + "\n";
    write_file(o.out, tsv);
    return {{"command", "predict"}, {"n", part.size()}, {"out", o.out}};
}

json cmd_evaluate(const Options& o, const json& cfg) {
    const std::string dataset_path = require_string(cfg, "dataset");
    const ModelConfig meta = dataset_meta_config(dataset_path);
    const Dataset ds = load_samples(dataset_path, meta);
    const std::vector<Sample>& part =
        pick_split(ds, cfg.value("split", std::string("test")));
    if (part.empty()) throw std::runtime_error("selected split has no samples");
    const std::vector<EstimatorKind> kinds = proxies_from_config(cfg);
    const int batch = cfg.value("batch_size", 32);

    std::string tsv = evaluation_tsv_header() + "\n";
    json names = json::array();
    int rows = 0;

    for (const json& entry : cfg.value("models", json::array())) {
        const std::string name = entry.at("name").get<std::string>();
        auto [mc, params] = load_model(entry.at("checkpoint").get<std::string>());
        if (mc.window != meta.window || mc.l_n != meta.l_n ||
            mc.l_s != meta.l_s || mc.n_stocks != meta.n_stocks)
            throw std::runtime_error("checkpoint \"" + name +
                                     "\" does not match the dataset dimensions");
        const Eigen::VectorXd fc = model_forecasts(mc, params, part, batch);
        for (const EstimatorKind kind : kinds) {
            const EvaluationResult res =
                evaluate_forecasts_by_sector(fc, part, kind);
            tsv += evaluation_to_tsv(name, kind, res);
            rows += 1 + static_cast<int>(res.sectors.size());
        }
        names.push_back(name);
    }

    if (cfg.contains("garch")) {
        const json& gc = cfg["garch"];
        const auto universe = load_universe(require_string(gc, "universe"));
        const std::string dir = require_string(gc, "prices_dir");
        std::vector<StockData> stocks;
        for (const auto& [id, sector] : universe) {
            StockData s;
            s.stock_id = id;
            s.sector = sector;
            s.prices = load_ohlc_csv(dir + "/" + id + ".csv", id);
            stocks.push_back(std::move(s));
        }
        Date fit_end{1, 1, 1};
        if (gc.contains("fit_end")) {
            fit_end = parse_date(gc["fit_end"].get<std::string>());
        } else {
            bool have = false;
            for (const auto* p : {&ds.train, &ds.validation})
                for (const Sample& s : *p)
                    if (!have || fit_end < s.target_date) {
                        fit_end = s.target_date;
                        have = true;
                    }
            if (!have)
                throw std::runtime_error(
                    "cannot infer the fitting cutoff: dataset has no "
                    "train/validation samples (set garch.fit_end)");
        }
        const Eigen::VectorXd fc = garch_forecasts(stocks, part, fit_end);
        for (const EstimatorKind kind : kinds) {
            const EvaluationResult res =
                evaluate_forecasts_by_sector(fc, part, kind);
            tsv += evaluation_to_tsv("garch", kind, res);
            rows += 1 + static_cast<int>(res.sectors.size());
        }
        names.push_back("garch");
    }

    if (names.empty())
        throw std::runtime_error("config needs \"models\" and/or \"garch\"");
    write_file(o.out, tsv);
    return {{"command", "evaluate"}, {"models", std::move(names)},
            {"n", part.size()}, {"rows", rows}, {"out", o.out}};
}

json cmd_gradcheck(const Options& o, const json& cfg) {
    const double tol = cfg.value("tolerance", 1e-5);
    const auto entries = gradient_battery(o.seed);
    double worst = 0;
    json checks = json::array();
    for (const auto& e : entries) {
        worst = std::max(worst, e.max_rel_error);
        checks.push_back({{"name", e.name}, {"max_rel_error", e.max_rel_error}});
    }
    const bool pass = worst < tol;
    json out = {{"tolerance", tol},
                {"max_rel_error", worst},
                {"pass", pass},
                {"checks", std::move(checks)}};
    write_file(o.out, out.dump(2) + "\n");
    if (!pass)
        throw std::runtime_error("gradient check failed: max relative error " +
                                 fmt(worst) + " >= " + fmt(tol));
    return {{"command", "gradcheck"}, {"checks", entries.size()},
            {"max_rel_error", worst}, {"pass", true}, {"out", o.out}};
}

json cmd_efficiency(const Options& o, const json& cfg) {
    const int n_days = cfg.value("n_days", 2000);
    const int n_steps = cfg.value("n_steps", 200);
    const double sigma = cfg.value("sigma", 0.02);
    const double pk = estimator_efficiency(EstimatorKind::parkinson, n_days,
                                           n_steps, sigma, o.seed);
    const double gk = estimator_efficiency(EstimatorKind::garman_klass, n_days,
                                           n_steps, sigma, o.seed);
    json out = {{"sigma", sigma},
                {"n_days", n_days},
                {"n_steps", n_steps},
                {"parkinson", pk},
                {"garman_klass", gk}};
    write_file(o.out, out.dump(2) + "\n");
    return {{"command", "efficiency"}, {"parkinson", pk},
            {"garman_klass", gk}, {"out", o.out}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"volatility forecasting toolkit"};
    app.require_subcommand(1);

    struct Entry {
        std::string name;
        Options opts;
        CLI::App* cmd = nullptr;
        std::function<json(const Options&, const json&)> run;
    };
    std::vector<std::unique_ptr<Entry>> entries;

    auto add = [&](const std::string& name, const std::string& desc,
                   json (*fn)(const Options&, const json&)) {
        auto e = std::make_unique<Entry>();
        e->name = name;
        e->run = fn;
        e->cmd = app.add_subcommand(name, desc);
        e->cmd->add_option("--config", e->opts.config,
                           "JSON settings: inline text or a file path");
        e->cmd->add_option("--seed", e->opts.seed, "random seed");
        e->cmd->add_option("--out", e->opts.out, "output file")->required();
        entries.push_back(std::move(e));
    };

    add("simulate-gbm", "simulate daily OHLC bars from geometric Brownian motion",
        cmd_simulate_gbm);
    add("simulate-garch", "simulate a GARCH(1,1) return series", cmd_simulate_garch);
    add("estimate", "daily variance estimates from OHLC bars", cmd_estimate);
    add("garch-fit", "fit GARCH(1,1) by quasi-maximum likelihood", cmd_garch_fit);
    add("garch-forecast", "multi-step variance forecast from fitted parameters",
        cmd_garch_forecast);
    add("ingest", "read and normalize a headline JSONL file", cmd_ingest);
    add("align", "assign headlines to trading days", cmd_align);
    add("build-dataset", "assemble train/validation/test samples", cmd_build_dataset);
    add("train", "train the volatility model", cmd_train);
    add("predict", "forecast volatility with a trained checkpoint", cmd_predict);
    add("evaluate", "score forecasts against range-based proxies", cmd_evaluate);
    add("gradcheck", "run the gradient verification battery", cmd_gradcheck);
    add("efficiency", "Monte Carlo variance-estimator efficiency", cmd_efficiency);

    CLI11_PARSE(app, argc, argv);

    for (const auto& e : entries) {
        if (!e->cmd->parsed()) continue;
        try {
            const json cfg = parse_config(e->opts.config);
            const json summary = e->run(e->opts, cfg);
            std::cout << summary.dump() << std::endl;
            return 0;
        } catch (const std::exception& ex) {
            const json err = {{"command", e->name}, {"error", ex.what()}};
            std::cerr << err.dump() << std::endl;
            return 1;
        }
    }
    return 1;  // unreachable: require_subcommand guarantees a match
}
