#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "volcast/calendar.hpp"

namespace volcast {

/// One trading day of prices. All prices strictly positive, low ≤ open,close ≤ high.
struct OhlcBar {
    Date date;
    double open = 0;
    double high = 0;
    double low = 0;
    double close = 0;
};

/// Throws std::invalid_argument if the bar violates its price ordering
/// or positivity constraints.
void validate_bar(const OhlcBar& bar);

struct PriceSeries {
    std::string stock_id;
    std::vector<OhlcBar> bars;  // strictly increasing dates
};

enum class EstimatorKind { squared_return, parkinson, garman_klass };

std::string to_string(EstimatorKind k);
EstimatorKind estimator_from_string(const std::string& s);

/// Daily variance estimate (squared-return units).
struct DailyVolProxy {
    Date date;
    double variance = 0;
    EstimatorKind estimator_kind = EstimatorKind::squared_return;
};

/// Simple return p_t / p_prev - 1.
double close_return(double p_t, double p_prev);

/// [O/Cprev-1, H/Cprev-1, L/Cprev-1, C/Cprev-1].
std::array<double, 4> price_features(const OhlcBar& bar, double close_prev);

/// Range-based daily variance, ln(H/L)^2 / (4 ln 2).
DailyVolProxy parkinson(const OhlcBar& bar);

/// Range-based daily variance using open/close as well:
/// 0.5 ln(H/L)^2 - (2 ln 2 - 1) ln(C/O)^2.
DailyVolProxy garman_klass(const OhlcBar& bar);

/// Noisy baseline: the squared simple return.
DailyVolProxy squared_return_proxy(double r_t);

/// One synthetic day of prices from a zero-drift geometric Brownian motion:
/// n_steps i.i.d. Gaussian log-price increments with per-step standard
/// deviation sigma_daily/sqrt(n_steps), open normalized to 100.
OhlcBar simulate_gbm_day(double sigma_daily, int n_steps, std::uint64_t rng_seed);

/// Monte Carlo relative efficiency of a variance estimator:
/// Var[squared-return estimator] / Var[candidate] over n_days simulated
/// zero-drift GBM days. The squared-return estimator has efficiency 1 by
/// construction.
double estimator_efficiency(EstimatorKind kind, int n_days, int n_steps, double sigma,
                            std::uint64_t rng_seed);

/// Reads a `date,open,high,low,close` CSV. Rows violating bar constraints or
/// date ordering raise std::runtime_error naming the offending line number.
PriceSeries load_ohlc_csv(const std::string& path, const std::string& stock_id);

/// As above, with the stock id taken from the file name stem (`XYZ.csv` -> "XYZ").
PriceSeries load_ohlc_csv(const std::string& path);

void write_ohlc_csv(const std::string& path, const PriceSeries& series);

}  // namespace volcast
