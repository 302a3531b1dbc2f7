#include "volcast/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace volcast {

namespace {

void check_lengths(const std::vector<double>& f, const std::vector<double>& p) {
    if (f.size() != p.size())
        throw std::invalid_argument("forecast/proxy length mismatch: " +
                                    std::to_string(f.size()) + " vs " +
                                    std::to_string(p.size()));
    if (f.empty()) throw std::invalid_argument("need at least one forecast/proxy pair");
}

}  // namespace

double mse(const std::vector<double>& forecast, const std::vector<double>& proxy) {
    check_lengths(forecast, proxy);
    double acc = 0;
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        const double d = forecast[i] - proxy[i];
        acc += d * d;
    }
    return acc / static_cast<double>(forecast.size());
}

double mae(const std::vector<double>& forecast, const std::vector<double>& proxy) {
    check_lengths(forecast, proxy);
    double acc = 0;
    for (std::size_t i = 0; i < forecast.size(); ++i)
        acc += std::abs(forecast[i] - proxy[i]);
    return acc / static_cast<double>(forecast.size());
}

EvalReport mincer_zarnowitz(const std::vector<double>& forecast,
                            const std::vector<double>& proxy) {
    check_lengths(forecast, proxy);
    const std::size_t n = forecast.size();
    if (n < 3) throw std::invalid_argument("regression needs at least 3 pairs");

    double fmean = 0, pmean = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fmean += forecast[i];
        pmean += proxy[i];
    }
    fmean /= static_cast<double>(n);
    pmean /= static_cast<double>(n);

    double sff = 0, spp = 0, sfp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double df = forecast[i] - fmean;
        const double dp = proxy[i] - pmean;
        sff += df * df;
        spp += dp * dp;
        sfp += df * dp;
    }
    if (sff <= 0.0)
        throw std::invalid_argument("degenerate regression: forecast is constant");

    EvalReport rep;
    rep.n = n;
    rep.mz_slope = sfp / sff;
    rep.mz_intercept = pmean - rep.mz_slope * fmean;
    // Squared Pearson correlation. A constant proxy regresses with zero slope
    // and zero association.
    rep.r2 = spp > 0.0 ? (sfp * sfp) / (sff * spp) : 0.0;
    return rep;
}

EvalReport evaluate_forecasts(const std::vector<double>& forecast,
                              const std::vector<double>& proxy,
                              const std::string& proxy_kind) {
    EvalReport rep = mincer_zarnowitz(forecast, proxy);
    rep.mse = mse(forecast, proxy);
    rep.mae = mae(forecast, proxy);
    rep.proxy_kind = proxy_kind;
    return rep;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["mse"] = report.mse;
    j["mae"] = report.mae;
    j["r2"] = report.r2;
    j["mz_intercept"] = report.mz_intercept;
    j["mz_slope"] = report.mz_slope;
    j["n"] = report.n;
    j["proxy_kind"] = report.proxy_kind;
    return j.dump(2);
}

std::string report_tsv_header() {
    return "proxy_kind\tn\tmse\tmae\tr2\tmz_intercept\tmz_slope";
}

std::string report_to_tsv(const EvalReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s\t%zu\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g",
                  report.proxy_kind.c_str(), report.n, report.mse, report.mae,
                  report.r2, report.mz_intercept, report.mz_slope);
    return buf;
}

}  // namespace volcast
