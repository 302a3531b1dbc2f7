#pragma once

#include <string>
#include <vector>

namespace volcast {

/// Forecast-evaluation summary for one (model, proxy) pairing.
struct EvalReport {
    double mse = 0;           // volatility^2 units
    double mae = 0;           // volatility units
    double r2 = 0;
    double mz_intercept = 0;  // a in proxy = a + b * forecast + e
    double mz_slope = 0;      // b
    std::size_t n = 0;
    std::string proxy_kind;
};

/// Mean squared difference; sequences must have equal nonzero length.
double mse(const std::vector<double>& forecast, const std::vector<double>& proxy);

/// Mean absolute difference.
double mae(const std::vector<double>& forecast, const std::vector<double>& proxy);

/// Ordinary least squares of proxy on forecast. Fills mz_intercept, mz_slope,
/// and r2; r2 is the squared Pearson correlation between the two sequences,
/// so it measures linear association rather than accuracy. Requires >= 3
/// pairs and a non-constant forecast.
EvalReport mincer_zarnowitz(const std::vector<double>& forecast,
                            const std::vector<double>& proxy);

/// MSE + MAE + regression fields in one report.
EvalReport evaluate_forecasts(const std::vector<double>& forecast,
                              const std::vector<double>& proxy,
                              const std::string& proxy_kind);

std::string report_to_json(const EvalReport& report);

/// One tab-separated row: proxy_kind, n, mse, mae, r2, intercept, slope.
std::string report_to_tsv(const EvalReport& report);
std::string report_tsv_header();

}  // namespace volcast
