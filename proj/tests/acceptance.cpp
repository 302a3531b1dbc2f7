// End-to-end acceptance gate for the toolkit. Runs ten independent checks
// covering the estimator Monte Carlos, GARCH recovery and forecasting, the
// gradient battery, model invariances, forecast-evaluation fixtures, corpus
// goldens, and the planted-signal training experiment. Prints one PASS/FAIL
// line per check and exits 0 only if every check passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "volcast/corpus.hpp"
#include "volcast/diagnostics.hpp"
#include "volcast/garch.hpp"
#include "volcast/marketdata.hpp"
#include "volcast/metrics.hpp"
#include "volcast/model.hpp"
#include "volcast/pipeline.hpp"

using namespace volcast;
using Eigen::MatrixXd;

namespace {

const std::string kData = VOLCAST_TEST_DATA_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

/// Collects the conditions of one check; failed conditions carry a message.
struct Gate {
    bool ok = true;
    std::vector<std::string> notes;

    void require(bool cond, const std::string& msg) {
        if (!cond) {
            ok = false;
            notes.push_back(msg);
        }
    }
    void note(const std::string& msg) { notes.push_back(msg); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// 1. Range-estimator efficiency
// ---------------------------------------------------------------------------

void check_estimator_efficiency(Gate& g) {
    const auto t0 = Clock::now();
    const double pk =
        estimator_efficiency(EstimatorKind::parkinson, 20000, 2000, 0.02, 7);
    const double gk =
        estimator_efficiency(EstimatorKind::garman_klass, 20000, 2000, 0.02, 7);
    const double secs = seconds_since(t0);
    g.note(fmt("pk=%.2f gk=%.2f", pk, gk));
    g.require(pk >= 3.7 && pk <= 6.1,
              fmt("parkinson efficiency %.3f outside [3.7, 6.1]", pk));
    g.require(gk >= 5.6 && gk <= 9.2,
              fmt("garman-klass efficiency %.3f outside [5.6, 9.2]", gk));
    g.require(gk > pk, "garman-klass must be strictly more efficient");
    g.require(secs < 60.0, fmt("took %.1f s, budget 60 s", secs));
}

// ---------------------------------------------------------------------------
// 2. Range-estimator near-unbiasedness
// ---------------------------------------------------------------------------

void check_estimator_bias(Gate& g) {
    const int n_days = 20000, n_steps = 2000;
    const double sigma = 0.02, truth = sigma * sigma;
    double sum_pk = 0, sum_gk = 0;
    for (int d = 0; d < n_days; ++d) {
        const OhlcBar bar =
            simulate_gbm_day(sigma, n_steps, 1000003ULL + static_cast<std::uint64_t>(d));
        sum_pk += parkinson(bar).variance;
        sum_gk += garman_klass(bar).variance;
    }
    const double rpk = sum_pk / n_days / truth;
    const double rgk = sum_gk / n_days / truth;
    g.note(fmt("mean/truth pk=%.4f gk=%.4f", rpk, rgk));
    g.require(rpk >= 0.90 && rpk <= 1.02,
              fmt("parkinson mean ratio %.4f outside [0.90, 1.02]", rpk));
    g.require(rgk >= 0.90 && rgk <= 1.02,
              fmt("garman-klass mean ratio %.4f outside [0.90, 1.02]", rgk));
}

// ---------------------------------------------------------------------------
// 3. GARCH parameter recovery
// ---------------------------------------------------------------------------

void check_garch_recovery(Gate& g) {
    const auto t0 = Clock::now();
    const GarchParams truth{0.0, 1e-6, 0.10, 0.85};
    const std::vector<double> returns = simulate_garch(truth, 20000, 97);
    const GarchFit f = fit(returns);
    const double secs = seconds_since(t0);
    const GarchParams& p = f.params;
    g.note(fmt("a0=%.3g a1=%.4f b1=%.4f", p.a0, p.a1, p.b1));
    g.require(f.converged, "fit did not converge");
    g.require(std::abs(p.a1 - truth.a1) <= 0.03,
              fmt("a1=%.4f strays more than 0.03 from %.2f", p.a1, truth.a1));
    g.require(std::abs(p.b1 - truth.b1) <= 0.03,
              fmt("b1=%.4f strays more than 0.03 from %.2f", p.b1, truth.b1));
    g.require(std::abs((p.a1 + p.b1) - (truth.a1 + truth.b1)) <= 0.02,
              fmt("persistence %.4f strays more than 0.02 from %.2f",
                  p.a1 + p.b1, truth.a1 + truth.b1));
    g.require(p.a0 >= truth.a0 / 2 && p.a0 <= truth.a0 * 2,
              fmt("a0=%.3g outside a factor of two of %.1g", p.a0, truth.a0));
    g.require(secs < 30.0, fmt("took %.1f s, budget 30 s", secs));
}

// ---------------------------------------------------------------------------
// 4. Multi-step forecast closed form and monotone convergence
// ---------------------------------------------------------------------------

void check_forecast_identity(Gate& g) {
    const GarchParams p{0.0, 1e-6, 0.10, 0.85};
    const std::vector<double> returns = simulate_garch(p, 300, 11);
    const GarchFit f = filter_variance(returns, p);
    const GarchForecast fc = forecast_multi_step(f, 100);
    const double s2u = p.a0 / (1.0 - p.a1 - p.b1);
    g.require(std::abs(fc.unconditional_variance - s2u) <= 1e-12 * s2u,
              "reported unconditional variance is off");

    const double gap1 = fc.expected_variance[0] - s2u;
    double worst = 0;
    bool monotone = true;
    for (int t = 1; t <= 100; ++t) {
        const double closed = s2u + std::pow(p.a1 + p.b1, t - 1) * gap1;
        worst = std::max(
            worst, std::abs(fc.expected_variance[t - 1] - closed) / std::abs(closed));
        if (t > 1 && std::abs(fc.expected_variance[t - 1] - s2u) >=
                         std::abs(fc.expected_variance[t - 2] - s2u))
            monotone = false;
    }
    g.note(fmt("worst rel err %.1e over 100 horizons", worst));
    g.require(worst < 1e-12, "closed-form relative error at or above 1e-12");
    g.require(monotone, "gap to the unconditional variance must shrink each step");
}

// ---------------------------------------------------------------------------
// 5. Gradient battery
// ---------------------------------------------------------------------------

void check_gradient_battery(Gate& g) {
    const std::vector<GradCheckEntry> entries = gradient_battery(2026);
    double worst = 0;
    std::string worst_name = "-";
    std::set<std::string> names;
    for (const GradCheckEntry& e : entries) {
        names.insert(e.name);
        if (e.max_rel_error > worst) {
            worst = e.max_rel_error;
            worst_name = e.name;
        }
    }
    g.note(fmt("%zu checks, worst %.1e (%s)", entries.size(), worst,
               worst_name.c_str()));
    g.require(entries.size() >= 30, "battery must cover at least 30 checks");
    g.require(worst < 1e-5, "gradient error at or above 1e-5");
    for (const char* req :
         {"net.lstm_step", "net.bilstm_attention", "net.bilstm_maxpool",
          "net.word_attention", "net.relevance_attention", "net.zi_temporal",
          "net.price_encoder", "net.head_multilabel", "net.head_entailment",
          "net.full_forward"})
        g.require(names.count(req) > 0, fmt("battery is missing %s", req));
}

// ---------------------------------------------------------------------------
// 6. Permutation and padding invariance of the full model
// ---------------------------------------------------------------------------

ModelConfig tiny_config() {
    ModelConfig c;
    c.d_w = 3;
    c.n = 2;
    c.d_s = 4;
    c.d_a = 3;
    c.window = 2;
    c.l_n = 3;
    c.l_s = 3;
    c.d_mn = 4;
    c.d_mp = 3;
    c.d_e = 2;
    c.d_jr = 4;
    c.n_stocks = 2;
    return c;
}

Sample random_sample(const ModelConfig& cfg, int vocab_rows, std::mt19937_64& rng) {
    Sample s;
    std::normal_distribution<double> price(0.0, 0.02);
    s.price_window = MatrixXd(cfg.window, 4);
    for (int t = 0; t < cfg.window; ++t)
        for (int j = 0; j < 4; ++j) s.price_window(t, j) = price(rng);
    s.news_window.assign(static_cast<std::size_t>(cfg.window) * cfg.l_n * cfg.l_s, 0);
    std::uniform_int_distribution<int> tok(1, vocab_rows - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < cfg.window; ++t)
        for (int j = 0; j < cfg.l_n; ++j) {
            if (u(rng) < 0.25) continue;  // day/slot without a headline
            const int len = 1 + static_cast<int>(u(rng) * cfg.l_s);
            for (int k = 0; k < len && k < cfg.l_s; ++k)
                s.news_window[(static_cast<std::size_t>(t) * cfg.l_n + j) * cfg.l_s + k] =
                    tok(rng);
        }
    s.stock_index = 1;
    s.target = 0.02;
    return s;
}

void check_invariances(Gate& g) {
    std::mt19937_64 rng(5150);
    const ModelConfig cfg = tiny_config();
    MatrixXd emb(12, cfg.d_w);
    std::normal_distribution<double> d(0.0, 0.4);
    for (int i = 0; i < emb.rows(); ++i)
        for (int j = 0; j < emb.cols(); ++j) emb(i, j) = d(rng);
    emb.row(0).setZero();  // padding row
    ModelParams params = ModelParams::init(cfg, emb, 21);

    const Sample s = random_sample(cfg, 12, rng);
    const double base = model_forward(s, cfg, params);
    g.require(std::isfinite(base), "baseline prediction is not finite");

    // Rotating one day's headline slots must not move the prediction.
    Sample perm = s;
    const int day = 1;
    for (int j = 0; j < cfg.l_n; ++j)
        for (int k = 0; k < cfg.l_s; ++k)
            perm.news_window[(static_cast<std::size_t>(day) * cfg.l_n + j) * cfg.l_s + k] =
                s.news_window[(static_cast<std::size_t>(day) * cfg.l_n +
                               (j + 1) % cfg.l_n) * cfg.l_s + k];
    const double permuted = model_forward(perm, cfg, params);
    g.note(fmt("perm delta %.1e", std::abs(permuted - base)));
    g.require(std::abs(permuted - base) < 1e-12,
              "headline permutation moved the prediction");

    // Re-laying the same content into wider padded slots must not either.
    ModelConfig wide = cfg;
    wide.l_s = cfg.l_s + 2;
    wide.l_n = cfg.l_n + 1;
    Sample padded;
    padded.price_window = s.price_window;
    padded.stock_index = s.stock_index;
    padded.target = s.target;
    padded.news_window.assign(
        static_cast<std::size_t>(wide.window) * wide.l_n * wide.l_s, 0);
    for (int t = 0; t < cfg.window; ++t)
        for (int j = 0; j < cfg.l_n; ++j)
            for (int k = 0; k < cfg.l_s; ++k)
                padded.news_window[(static_cast<std::size_t>(t) * wide.l_n + j) *
                                       wide.l_s + k] =
                    s.news_window[(static_cast<std::size_t>(t) * cfg.l_n + j) *
                                      cfg.l_s + k];
    const double widened = model_forward(padded, wide, params);
    g.note(fmt("pad delta %.1e", std::abs(widened - base)));
    g.require(std::abs(widened - base) < 1e-12,
              "appended padding moved the prediction");
}

// ---------------------------------------------------------------------------
// 7. Forecast-regression fixtures
// ---------------------------------------------------------------------------

void check_regression_fixtures(Gate& g) {
    const std::vector<double> perfect{0.010, 0.015, 0.020, 0.013, 0.018};
    const EvalReport exact = mincer_zarnowitz(perfect, perfect);
    g.require(std::abs(exact.r2 - 1.0) <= 1e-12 &&
                  std::abs(exact.mz_slope - 1.0) <= 1e-12 &&
                  std::abs(exact.mz_intercept) <= 1e-12,
              fmt("perfect forecast: r2=%.15f b=%.15f a=%.2e", exact.r2,
                  exact.mz_slope, exact.mz_intercept));

    const EvalReport reversed = mincer_zarnowitz({3, 2, 1}, {1, 2, 3});
    g.require(std::abs(reversed.mz_slope + 1.0) <= 1e-12 &&
                  std::abs(reversed.mz_intercept - 4.0) <= 1e-12 &&
                  std::abs(reversed.r2 - 1.0) <= 1e-12,
              fmt("reversed fixture: b=%.15f a=%.15f r2=%.15f", reversed.mz_slope,
                  reversed.mz_intercept, reversed.r2));

    // Adding independent noise of equal variance halves the explained share.
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = 100000;
    std::vector<double> f(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = normal(rng);
        p[i] = f[i] + normal(rng);
    }
    const EvalReport noisy = mincer_zarnowitz(f, p);
    g.note(fmt("noise r2=%.4f", noisy.r2));
    g.require(std::abs(noisy.r2 - 0.5) <= 0.02,
              fmt("noise experiment r2=%.4f outside 0.5 +/- 0.02", noisy.r2));
}

// ---------------------------------------------------------------------------
// 8. Corpus categorization, alignment, and histogram golden
// ---------------------------------------------------------------------------

void check_corpus_goldens(Gate& g) {
    const TradingCalendar cal = TradingCalendar::load(kData + "/holidays_2017.txt");

    g.require(categorize(WallTime{Date{2007, 4, 17}, 8, 54, 27}, cal) ==
                  TimeCategory::before_market,
              "08:54:27 should categorize as before_market");
    g.require(categorize(WallTime{Date{2016, 9, 22}, 15, 32, 13}, cal) ==
                  TimeCategory::during_market,
              "15:32:13 should categorize as during_market");

    const std::vector<HeadlineRecord> recs{
        // Tuesday 16:05 New York (EST) -> Wednesday
        {"AAPL", parse_timestamp("2017-01-10T21:05:00Z"), "late tuesday news"},
        // Friday 17:00 New York -> Monday
        {"AAPL", parse_timestamp("2017-02-03T22:00:00Z"), "late friday news"},
    };
    const auto aligned = align(recs, cal);
    g.require(aligned.count("AAPL") > 0 && aligned.at("AAPL").size() == 2,
              "alignment lost records");
    if (aligned.count("AAPL") && aligned.at("AAPL").size() == 2) {
        g.require(aligned.at("AAPL")[0].trading_date == Date{2017, 1, 11},
                  "Tuesday 16:05 should land on Wednesday");
        g.require(aligned.at("AAPL")[1].trading_date == Date{2017, 2, 6},
                  "Friday 17:00 should land on Monday");
    }

    const HeadlineLoadResult loaded =
        load_headlines_jsonl(kData + "/headlines_200.jsonl");
    g.require(loaded.rejects.empty(), "fixture corpus produced rejects");
    g.require(loaded.records.size() == 200, "fixture corpus should have 200 records");
    const std::string text = histogram_to_text(category_histogram(loaded.records, cal));
    const std::string golden = slurp(kData + "/headlines_200_histogram.golden");
    g.note(fmt("histogram %zu bytes", text.size()));
    g.require(text == golden, "category histogram differs from the golden file");
}

// ---------------------------------------------------------------------------
// 9. Overfit sanity on a 32-sample set
// ---------------------------------------------------------------------------

void check_overfit(Gate& g) {
    PlantedConfig pc;
    pc.n_stocks = 1;
    pc.n_days = 60;
    pc.seed = 5;
    const PlantedData data = generate_planted(pc);

    ModelConfig config;
    config.d_w = pc.d_w;
    config.n = 4;
    config.d_s = 8;
    config.d_a = 4;
    config.window = 5;
    config.l_n = 4;
    config.l_s = 6;
    config.d_mn = 8;
    config.d_mp = 8;
    config.d_e = 2;
    config.d_jr = 16;
    config.n_stocks = 1;

    SplitSpec wide = data.split;  // direct every sample into training
    wide.train_end = data.stocks[0].prices.bars.back().date;
    wide.val_start = Date{2030, 1, 1};
    wide.val_end = Date{2030, 1, 2};
    wide.test_start = Date{2030, 1, 3};
    wide.test_end = Date{2030, 1, 4};
    Dataset ds = build_samples(data.stocks, data.vocab, config, wide);
    g.require(ds.train.size() >= 32, "planted set is too small");
    if (ds.train.size() < 32) return;
    ds.train.resize(32);

    TrainConfig tc;
    tc.batch_size = 32;
    tc.max_epochs = 500;
    tc.patience = 500;  // judge on training loss alone
    tc.lr = 3e-3;
    tc.seed = 1;

    auto run = [&] {
        ModelParams params =
            ModelParams::init(config, embedding_matrix(data.vocab), 11);
        const TrainResult r = train(config, params, ds.train, ds.train, tc);
        if (r.diverged) throw std::runtime_error("overfit training diverged");
        return r.history;
    };
    const std::vector<EpochStats> h1 = run();
    g.require(!h1.empty(), "no epochs recorded");
    if (h1.empty()) return;
    double best = h1.front().train_mse;
    int best_epoch = 0;
    for (std::size_t e = 0; e < h1.size(); ++e)
        if (h1[e].train_mse < best) {
            best = h1[e].train_mse;
            best_epoch = static_cast<int>(e);
        }
    g.note(fmt("mse %.2e -> %.2e by epoch %d", h1.front().train_mse, best,
               best_epoch + 1));
    g.require(h1.size() <= 500, "ran past the 500-epoch budget");
    g.require(best < 0.1 * h1.front().train_mse,
              "training MSE did not fall below 10% of its starting value");

    const std::vector<EpochStats> h2 = run();
    bool identical = h1.size() == h2.size();
    for (std::size_t e = 0; identical && e < h1.size(); ++e)
        identical = h1[e].train_mse == h2[e].train_mse &&
                    h1[e].val_mse == h2[e].val_mse;
    g.require(identical, "re-run with the same seed gave a different history");
}

// ---------------------------------------------------------------------------
// 10. Planted-signal ordering across model variants
// ---------------------------------------------------------------------------

void check_planted_ordering(Gate& g) {
    const auto t0 = Clock::now();

    ModelConfig base;
    base.d_w = 8;
    base.n = 4;
    base.d_s = 8;
    base.d_a = 4;
    base.window = 5;
    base.l_n = 4;
    base.l_s = 6;
    base.d_mn = 24;
    base.d_mp = 8;
    base.d_e = 2;
    base.d_jr = 8;
    base.n_stocks = 5;

    int full_beats_avg = 0, avg_beats_price = 0, model_beats_garch = 0;
    for (std::uint64_t seed = 101; seed <= 105; ++seed) {
        PlantedConfig pc;
        pc.n_stocks = 5;
        pc.n_days = 1500;
        pc.shock_prob = 0.25;
        pc.max_daily_headlines = 3;
        pc.seed = seed;
        const PlantedData data = generate_planted(pc);
        const MatrixXd emb = embedding_matrix(data.vocab);
        const Dataset ds = build_samples(data.stocks, data.vocab, base, data.split);

        TrainConfig tc;
        tc.batch_size = 32;
        tc.max_epochs = 26;
        tc.patience = 26;
        tc.lr = 0.01;
        tc.seed = seed;

        auto run = [&](bool nra, bool price_only) {
            ModelConfig cfg = base;
            cfg.nra_enabled = nra;
            cfg.price_only = price_only;
            ModelParams params = ModelParams::init(cfg, emb, seed);
            const TrainResult tr = train(cfg, params, ds.train, ds.validation, tc);
            if (tr.diverged) throw std::runtime_error("planted training diverged");
            return evaluate_model(cfg, params, ds.test,
                                  EstimatorKind::garman_klass, tc.batch_size)
                .overall;
        };
        const EvalReport full = run(true, false);
        const EvalReport avg = run(false, false);
        const EvalReport price = run(true, true);

        Date fit_end = ds.train.front().target_date;
        for (const Sample& s : ds.train) fit_end = std::max(fit_end, s.target_date);
        for (const Sample& s : ds.validation)
            fit_end = std::max(fit_end, s.target_date);
        const EvalReport garch =
            evaluate_garch(data.stocks, ds.test, fit_end,
                           EstimatorKind::garman_klass)
                .overall;

        full_beats_avg += full.mse < avg.mse ? 1 : 0;
        avg_beats_price += avg.mse < price.mse ? 1 : 0;
        model_beats_garch += full.r2 > garch.r2 ? 1 : 0;
        std::printf("       seed %llu: mse full %.3e / avg %.3e / price %.3e, "
                    "r2 full %.3f / garch %.3f\n",
                    static_cast<unsigned long long>(seed), full.mse, avg.mse,
                    price.mse, full.r2, garch.r2);
        std::fflush(stdout);
    }
    const double secs = seconds_since(t0);
    g.note(fmt("full<avg %d/5, avg<price %d/5, model r2>garch %d/5",
               full_beats_avg, avg_beats_price, model_beats_garch));
    g.require(full_beats_avg >= 4,
              "relevance attention must beat plain averaging on >= 4 of 5 seeds");
    g.require(avg_beats_price >= 4,
              "news-aware averaging must beat price-only on >= 4 of 5 seeds");
    g.require(model_beats_garch >= 4,
              "full model r2 must beat the variance filter on >= 4 of 5 seeds");
    g.require(secs < 900.0, fmt("took %.0f s, budget 900 s", secs));
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        void (*fn)(Gate&);
    };
    const std::vector<Entry> checks = {
        {"range-estimator efficiency", check_estimator_efficiency},
        {"range-estimator unbiasedness", check_estimator_bias},
        {"garch parameter recovery", check_garch_recovery},
        {"multi-step forecast identity", check_forecast_identity},
        {"gradient battery", check_gradient_battery},
        {"permutation/padding invariance", check_invariances},
        {"forecast-regression fixtures", check_regression_fixtures},
        {"corpus goldens", check_corpus_goldens},
        {"overfit sanity", check_overfit},
        {"planted-signal ordering", check_planted_ordering},
    };

    bool all_ok = true;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        Gate g;
        const auto t0 = Clock::now();
        try {
            checks[i].fn(g);
        } catch (const std::exception& e) {
            g.ok = false;
            g.notes.push_back(std::string("exception: ") + e.what());
        }
        std::string detail;
        for (const std::string& n : g.notes)
            detail += (detail.empty() ? "" : "; ") + n;
        std::printf("[%s] %2zu/%zu %-32s (%.1fs)%s%s\n", g.ok ? "PASS" : "FAIL",
                    i + 1, checks.size(), checks[i].name, seconds_since(t0),
                    detail.empty() ? "" : "  ", detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && g.ok;
    }
    std::printf("%s\n", all_ok ? "acceptance: all checks passed"
                               : "acceptance: FAILURES present");
    return all_ok ? 0 : 1;
}
