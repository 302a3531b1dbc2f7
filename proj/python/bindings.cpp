// Python bindings for the toolkit's main operations: synthetic market
// simulation, range-based variance estimators, GARCH(1,1) fitting and
// forecasting, forecast evaluation, headline processing, the gradient
// battery, and the planted-signal training experiment.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "volcast/calendar.hpp"
#include "volcast/corpus.hpp"
#include "volcast/diagnostics.hpp"
#include "volcast/garch.hpp"
#include "volcast/marketdata.hpp"
#include "volcast/metrics.hpp"
#include "volcast/model.hpp"
#include "volcast/pipeline.hpp"

namespace py = pybind11;
using namespace volcast;

namespace {

GarchParams params_from_dict(const py::dict& d) {
    GarchParams p;
    if (d.contains("mu")) p.mu = d["mu"].cast<double>();
    if (d.contains("a0")) p.a0 = d["a0"].cast<double>();
    if (d.contains("a1")) p.a1 = d["a1"].cast<double>();
    if (d.contains("b1")) p.b1 = d["b1"].cast<double>();
    return p;
}

py::dict params_to_dict(const GarchParams& p) {
    py::dict d;
    d["mu"] = p.mu;
    d["a0"] = p.a0;
    d["a1"] = p.a1;
    d["b1"] = p.b1;
    return d;
}

py::dict report_to_dict(const EvalReport& r) {
    py::dict d;
    d["mse"] = r.mse;
    d["mae"] = r.mae;
    d["r2"] = r.r2;
    d["mz_intercept"] = r.mz_intercept;
    d["mz_slope"] = r.mz_slope;
    d["n"] = r.n;
    d["proxy_kind"] = r.proxy_kind;
    return d;
}

TradingCalendar calendar_from(const std::vector<std::string>& holidays) {
    std::set<Date> days;
    for (const std::string& h : holidays) days.insert(parse_date(h));
    return TradingCalendar(std::move(days));
}

OhlcBar bar_from_dict(const py::dict& d) {
    OhlcBar b;
    if (d.contains("date")) b.date = parse_date(d["date"].cast<std::string>());
    b.open = d["open"].cast<double>();
    b.high = d["high"].cast<double>();
    b.low = d["low"].cast<double>();
    b.close = d["close"].cast<double>();
    validate_bar(b);
    return b;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() =
        "Volatility forecasting toolkit: range estimators, GARCH(1,1), "
        "headline processing, and a multimodal news+price model.";
    m.attr("__version__") = "0.1.0";

    // ---- market data ------------------------------------------------------
    m.def(
        "simulate_gbm_day",
        [](double sigma_daily, int n_steps, std::uint64_t seed) {
            const OhlcBar b = simulate_gbm_day(sigma_daily, n_steps, seed);
            py::dict d;
            d["open"] = b.open;
            d["high"] = b.high;
            d["low"] = b.low;
            d["close"] = b.close;
            return d;
        },
        py::arg("sigma_daily"), py::arg("n_steps"), py::arg("seed"),
        "One synthetic zero-drift trading day; returns its OHLC prices.");

    m.def(
        "parkinson",
        [](const py::dict& bar) { return parkinson(bar_from_dict(bar)).variance; },
        py::arg("bar"),
        "Parkinson daily variance, ln(H/L)^2 / (4 ln 2), from an OHLC dict.");

    m.def(
        "garman_klass",
        [](const py::dict& bar) { return garman_klass(bar_from_dict(bar)).variance; },
        py::arg("bar"),
        "Garman-Klass daily variance from an OHLC dict.");

    m.def(
        "estimator_efficiency",
        [](const std::string& kind, int n_days, int n_steps, double sigma,
           std::uint64_t seed) {
            return estimator_efficiency(estimator_from_string(kind), n_days,
                                        n_steps, sigma, seed);
        },
        py::arg("kind"), py::arg("n_days"), py::arg("n_steps"), py::arg("sigma"),
        py::arg("seed"),
        "Monte Carlo variance ratio of the squared-return estimator to the "
        "named range estimator.");

    // ---- GARCH(1,1) -------------------------------------------------------
    m.def(
        "simulate_garch",
        [](const py::dict& params, int n, std::uint64_t seed) {
            return simulate_garch(params_from_dict(params), n, seed);
        },
        py::arg("params"), py::arg("n"), py::arg("seed"),
        "Simulated return series with Gaussian shocks; params keys mu, a0, "
        "a1, b1.");

    m.def(
        "garch_fit",
        [](const std::vector<double>& returns) {
            const GarchFit f = fit(returns);
            py::dict d = params_to_dict(f.params);
            d["log_likelihood"] = f.log_likelihood;
            d["converged"] = f.converged;
            d["iterations"] = f.iterations;
            return d;
        },
        py::arg("returns"),
        "Quasi-maximum-likelihood GARCH(1,1) fit; returns the parameters and "
        "fit diagnostics.");

    m.def(
        "garch_forecast",
        [](const std::vector<double>& returns, const py::dict& params,
           int horizon) {
            const GarchFit f = filter_variance(returns, params_from_dict(params));
            const GarchForecast fc = forecast_multi_step(f, horizon);
            py::dict d;
            d["expected_variance"] = fc.expected_variance;
            d["unconditional_variance"] = fc.unconditional_variance;
            return d;
        },
        py::arg("returns"), py::arg("params"), py::arg("horizon"),
        "Filters the variance recursion at fixed parameters, then forecasts "
        "expected variances at horizons 1..horizon.");

    // ---- forecast evaluation ---------------------------------------------
    m.def(
        "evaluate_forecasts",
        [](const std::vector<double>& forecast, const std::vector<double>& proxy,
           const std::string& proxy_kind) {
            return report_to_dict(evaluate_forecasts(forecast, proxy, proxy_kind));
        },
        py::arg("forecast"), py::arg("proxy"), py::arg("proxy_kind") = "garman_klass",
        "MSE, MAE, and the proxy-on-forecast regression (slope, intercept, "
        "r2) in one report.");

    // ---- headline processing ---------------------------------------------
    m.def("tokenize", &tokenize, py::arg("text"),
          "Lower-cased word tokens with punctuation stripped.");

    m.def(
        "categorize",
        [](const std::string& timestamp, const std::vector<std::string>& holidays) {
            const TradingCalendar cal = calendar_from(holidays);
            return to_string(categorize(to_new_york(parse_timestamp(timestamp)), cal));
        },
        py::arg("timestamp"), py::arg("holidays") = std::vector<std::string>{},
        "Release-time category of an ISO timestamp relative to the New York "
        "trading session: before_market, during_market, after_market, "
        "weekend, or holiday.");

    m.def(
        "align_headlines",
        [](const std::vector<std::map<std::string, std::string>>& records,
           const std::vector<std::string>& holidays) {
            std::vector<HeadlineRecord> recs;
            recs.reserve(records.size());
            for (const auto& r : records)
                recs.push_back({r.at("stock"), parse_timestamp(r.at("utc")),
                                r.at("text")});
            const TradingCalendar cal = calendar_from(holidays);
            py::dict out;
            for (const auto& [stock, days] : align(recs, cal)) {
                py::list items;
                for (const AlignedDay& d : days) {
                    py::dict day;
                    day["date"] = format_date(d.trading_date);
                    day["texts"] = d.raw_texts;
                    day["tokens"] = d.headlines;
                    items.append(day);
                }
                out[py::str(stock)] = items;
            }
            return out;
        },
        py::arg("records"), py::arg("holidays") = std::vector<std::string>{},
        "Groups headline records (dicts with stock/utc/text) onto trading "
        "days: same day before the close, next trading day after it.");

    // ---- model diagnostics ------------------------------------------------
    m.def(
        "gradient_battery",
        [](std::uint64_t seed) {
            py::list out;
            for (const GradCheckEntry& e : gradient_battery(seed)) {
                py::dict d;
                d["name"] = e.name;
                d["max_rel_error"] = e.max_rel_error;
                out.append(d);
            }
            return out;
        },
        py::arg("seed") = 0,
        "Central-difference checks of every operator and network block; each "
        "entry reports its worst relative error.");

    // ---- planted-signal experiment ---------------------------------------
    m.def(
        "planted_experiment",
        [](std::uint64_t seed, const std::string& model_config, int n_stocks,
           int n_days, double shock_prob, double vol_multiplier,
           int max_daily_headlines, int batch_size, int max_epochs, int patience,
           double lr, const std::string& proxy) {
            PlantedConfig pc;
            pc.n_stocks = n_stocks;
            pc.n_days = n_days;
            pc.shock_prob = shock_prob;
            pc.vol_multiplier = vol_multiplier;
            pc.max_daily_headlines = max_daily_headlines;
            pc.seed = seed;
            const PlantedData data = generate_planted(pc);

            ModelConfig mc = ModelConfig::from_json(model_config);
            mc.n_stocks = n_stocks;
            mc.validate();
            const Eigen::MatrixXd emb = embedding_matrix(data.vocab);
            if (!mc.price_only && emb.cols() != mc.d_w)
                throw std::invalid_argument(
                    "model d_w does not match the synthetic embedding width " +
                    std::to_string(emb.cols()));

            const Dataset ds = build_samples(data.stocks, data.vocab, mc, data.split);
            TrainConfig tc;
            tc.batch_size = batch_size;
            tc.max_epochs = max_epochs;
            tc.patience = patience;
            tc.lr = lr;
            tc.seed = seed;
            ModelParams params = ModelParams::init(mc, emb, seed);
            const TrainResult tr = train(mc, params, ds.train, ds.validation, tc);

            const EstimatorKind kind = estimator_from_string(proxy);
            const EvaluationResult model_eval =
                evaluate_model(mc, params, ds.test, kind, tc.batch_size);
            Date fit_end = ds.train.front().target_date;
            for (const Sample& s : ds.train)
                fit_end = std::max(fit_end, s.target_date);
            for (const Sample& s : ds.validation)
                fit_end = std::max(fit_end, s.target_date);
            const EvaluationResult garch_eval =
                evaluate_garch(data.stocks, ds.test, fit_end, kind);

            py::dict out;
            py::list history;
            for (const EpochStats& e : tr.history) {
                py::dict h;
                h["train_mse"] = e.train_mse;
                h["val_mse"] = e.val_mse;
                history.append(h);
            }
            out["history"] = history;
            out["best_epoch"] = tr.best_epoch;
            out["best_val_mse"] = tr.best_val_mse;
            out["early_stopped"] = tr.early_stopped;
            out["diverged"] = tr.diverged;
            out["train_samples"] = ds.train.size();
            out["validation_samples"] = ds.validation.size();
            out["test_samples"] = ds.test.size();
            out["model"] = report_to_dict(model_eval.overall);
            out["garch"] = report_to_dict(garch_eval.overall);
            return out;
        },
        py::arg("seed"), py::arg("model_config"), py::arg("n_stocks") = 5,
        py::arg("n_days") = 1500, py::arg("shock_prob") = 0.15,
        py::arg("vol_multiplier") = 2.0, py::arg("max_daily_headlines") = 3,
        py::arg("batch_size") = 32, py::arg("max_epochs") = 200,
        py::arg("patience") = 8, py::arg("lr") = 1e-3,
        py::arg("proxy") = "garman_klass",
        "Generates a synthetic market with a planted news signal, trains the "
        "model described by model_config (a JSON string), and scores it "
        "against a per-stock GARCH(1,1) baseline on the held-out test range.");
}
