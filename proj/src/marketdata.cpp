#include "volcast/marketdata.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace volcast {

void validate_bar(const OhlcBar& bar) {
    if (!(bar.low > 0)) throw std::invalid_argument("bar prices must be positive");
    if (bar.low > bar.high) throw std::invalid_argument("bar has low > high");
    if (bar.open < bar.low || bar.open > bar.high)
        throw std::invalid_argument("bar open outside [low, high]");
    if (bar.close < bar.low || bar.close > bar.high)
        throw std::invalid_argument("bar close outside [low, high]");
}

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::squared_return: return "squared_return";
        case EstimatorKind::parkinson: return "parkinson";
        case EstimatorKind::garman_klass: return "garman_klass";
    }
    throw std::invalid_argument("unknown estimator kind");
}

EstimatorKind estimator_from_string(const std::string& s) {
    if (s == "squared_return") return EstimatorKind::squared_return;
    if (s == "parkinson") return EstimatorKind::parkinson;
    if (s == "garman_klass") return EstimatorKind::garman_klass;
    throw std::invalid_argument("unknown estimator kind '" + s + "'");
}

double close_return(double p_t, double p_prev) {
    if (!(p_t > 0) || !(p_prev > 0))
        throw std::invalid_argument("prices must be positive for returns");
    return p_t / p_prev - 1.0;
}

std::array<double, 4> price_features(const OhlcBar& bar, double close_prev) {
    validate_bar(bar);
    return {close_return(bar.open, close_prev), close_return(bar.high, close_prev),
            close_return(bar.low, close_prev), close_return(bar.close, close_prev)};
}

DailyVolProxy parkinson(const OhlcBar& bar) {
    validate_bar(bar);
    const double x = std::log(bar.high / bar.low);
    return {bar.date, x * x / (4.0 * std::log(2.0)), EstimatorKind::parkinson};
}

DailyVolProxy garman_klass(const OhlcBar& bar) {
    validate_bar(bar);
    const double hl = std::log(bar.high / bar.low);
    const double co = std::log(bar.close / bar.open);
    const double v = 0.5 * hl * hl - (2.0 * std::log(2.0) - 1.0) * co * co;
    return {bar.date, v, EstimatorKind::garman_klass};
}

DailyVolProxy squared_return_proxy(double r_t) {
    return {Date{}, r_t * r_t, EstimatorKind::squared_return};
}

namespace {

// Log extrema and endpoints of one simulated day; enough to evaluate every
// estimator without leaving log space.
struct DayPath {
    double log_hl;     // ln(H/L)
    double log_co;     // ln(C/O)
};

DayPath simulate_day_path(double sigma_daily, int n_steps, std::mt19937_64& rng) {
    const double step_sd = sigma_daily / std::sqrt(static_cast<double>(n_steps));
    std::normal_distribution<double> normal(0.0, step_sd);
    double x = 0.0, lo = 0.0, hi = 0.0;
    for (int i = 0; i < n_steps; ++i) {
        x += normal(rng);
        if (x < lo) lo = x;
        if (x > hi) hi = x;
    }
    return {hi - lo, x};
}

}  // namespace

OhlcBar simulate_gbm_day(double sigma_daily, int n_steps, std::uint64_t rng_seed) {
    if (!(sigma_daily > 0)) throw std::invalid_argument("sigma_daily must be positive");
    if (n_steps < 1) throw std::invalid_argument("n_steps must be at least 1");
    std::mt19937_64 rng(rng_seed);
    const double step_sd = sigma_daily / std::sqrt(static_cast<double>(n_steps));
    std::normal_distribution<double> normal(0.0, step_sd);
    double x = 0.0, lo = 0.0, hi = 0.0;
    for (int i = 0; i < n_steps; ++i) {
        x += normal(rng);
        if (x < lo) lo = x;
        if (x > hi) hi = x;
    }
    OhlcBar bar;
    bar.open = 100.0;
    bar.high = 100.0 * std::exp(hi);
    bar.low = 100.0 * std::exp(lo);
    bar.close = 100.0 * std::exp(x);
    return bar;
}

double estimator_efficiency(EstimatorKind kind, int n_days, int n_steps, double sigma,
                            std::uint64_t rng_seed) {
    if (n_days < 1000) throw std::invalid_argument("efficiency needs n_days >= 1000");
    if (kind == EstimatorKind::squared_return) return 1.0;

    std::mt19937_64 rng(rng_seed);
    const double k_pk = 1.0 / (4.0 * std::log(2.0));
    const double k_gk = 2.0 * std::log(2.0) - 1.0;

    std::vector<double> sq(n_days), cand(n_days);
    for (int d = 0; d < n_days; ++d) {
        const DayPath p = simulate_day_path(sigma, n_steps, rng);
        const double r = std::exp(p.log_co) - 1.0;
        sq[d] = r * r;
        cand[d] = kind == EstimatorKind::parkinson
                      ? k_pk * p.log_hl * p.log_hl
                      : 0.5 * p.log_hl * p.log_hl - k_gk * p.log_co * p.log_co;
    }
    auto variance = [](const std::vector<double>& v) {
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return ss / static_cast<double>(v.size() - 1);
    };
    return variance(sq) / variance(cand);
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_price(const std::string& s, const std::string& path, int lineno) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": bad price field '" + s + "'");
    }
}

}  // namespace

PriceSeries load_ohlc_csv(const std::string& path, const std::string& stock_id) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open price file: " + path);
    PriceSeries series;
    series.stock_id = stock_id;

    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,open,high,low,close")
        throw std::runtime_error(path + ":1: expected header 'date,open,high,low,close'");

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_row(line);
        if (fields.size() != 5)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 5 fields, got " +
                                     std::to_string(fields.size()));
        OhlcBar bar;
        try {
            bar.date = parse_date(fields[0]);
        } catch (const std::invalid_argument& ex) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + ex.what());
        }
        bar.open = parse_price(fields[1], path, lineno);
        bar.high = parse_price(fields[2], path, lineno);
        bar.low = parse_price(fields[3], path, lineno);
        bar.close = parse_price(fields[4], path, lineno);
        try {
            validate_bar(bar);
        } catch (const std::invalid_argument& ex) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + ex.what());
        }
        if (!series.bars.empty() && !(series.bars.back().date < bar.date))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": dates must be strictly increasing");
        series.bars.push_back(bar);
    }
    return series;
}

PriceSeries load_ohlc_csv(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv")
        stem = stem.substr(0, stem.size() - 4);
    return load_ohlc_csv(path, stem);
}

void write_ohlc_csv(const std::string& path, const PriceSeries& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write price file: " + path);
    out << "date,open,high,low,close\n";
    char buf[160];
    for (const auto& bar : series.bars) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g\n",
                      format_date(bar.date).c_str(), bar.open, bar.high, bar.low, bar.close);
        out << buf;
    }
}

}  // namespace volcast
