#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "volcast/metrics.hpp"

using namespace volcast;

TEST_CASE("mse") {
    CHECK(mse({0.01, 0.02, 0.03}, {0.01, 0.02, 0.03}) == 0.0);
    CHECK(mse({3, 2, 1}, {1, 2, 3}) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    CHECK(mse({0.02}, {0.01}) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK_THROWS_AS(mse({1, 2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(mse({}, {}), std::invalid_argument);
}

TEST_CASE("mae") {
    CHECK(mae({0.01, 0.02}, {0.01, 0.02}) == 0.0);
    CHECK(mae({3, 2, 1}, {1, 2, 3}) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    // symmetric in its arguments
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 0.1);
    std::vector<double> a(50), b(50);
    for (std::size_t i = 0; i < 50; ++i) {
        a[i] = u(rng);
        b[i] = u(rng);
    }
    CHECK(mae(a, b) == doctest::Approx(mae(b, a)).epsilon(1e-15));
    CHECK(mse(a, b) >= 0.0);
    CHECK(mae(a, b) >= 0.0);
}

TEST_CASE("regression on a perfect forecast") {
    const std::vector<double> f{0.010, 0.015, 0.020, 0.013, 0.018};
    const auto rep = mincer_zarnowitz(f, f);
    CHECK(rep.mz_intercept == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.mz_slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("regression measures linear association, not accuracy") {
    // An exactly affine (but inverted) relation still earns r2 = 1.
    const auto rep = mincer_zarnowitz({3, 2, 1}, {1, 2, 3});
    CHECK(rep.mz_slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(rep.mz_intercept == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rep.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("r2 equals the squared correlation between forecast and proxy") {
    // We normalize by the proxy's total sum of squares (the correlation
    // form). Normalizing by regressor deviations instead coincides with it
    // only when the fit is exact; the half-signal experiment below is the
    // observable difference: the correlation form yields 1/2.
    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> f(500), p(500);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = 0.02 + 0.005 * normal(rng);
        p[i] = 0.6 * f[i] + 0.003 * normal(rng);
    }
    const auto rep = mincer_zarnowitz(f, p);

    double fm = 0, pm = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        fm += f[i];
        pm += p[i];
    }
    fm /= f.size();
    pm /= p.size();
    double sff = 0, spp = 0, sfp = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        sff += (f[i] - fm) * (f[i] - fm);
        spp += (p[i] - pm) * (p[i] - pm);
        sfp += (f[i] - fm) * (p[i] - pm);
    }
    const double rho = sfp / std::sqrt(sff * spp);
    CHECK(rep.r2 == doctest::Approx(rho * rho).epsilon(1e-10));
    CHECK(rep.r2 <= 1.0);
}

TEST_CASE("equal-variance noise halves r2") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = 100000;
    std::vector<double> f(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = normal(rng);
        p[i] = f[i] + normal(rng);  // independent noise, same variance
    }
    const auto rep = mincer_zarnowitz(f, p);
    CHECK(rep.r2 == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("degenerate regressions raise") {
    CHECK_THROWS_AS(mincer_zarnowitz({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(mincer_zarnowitz({1, 2}, {1, 2}), std::invalid_argument);
}

TEST_CASE("report serialization") {
    const auto rep =
        evaluate_forecasts({0.01, 0.02, 0.03, 0.04}, {0.012, 0.019, 0.031, 0.042},
                           "parkinson");
    const std::string j = report_to_json(rep);
    CHECK(j.find("\"proxy_kind\": \"parkinson\"") != std::string::npos);
    CHECK(j.find("\"n\": 4") != std::string::npos);
    CHECK(j.find("mz_slope") != std::string::npos);

    const std::string row = report_to_tsv(rep);
    CHECK(row.substr(0, 9) == "parkinson");
    // header and row have the same column count
    auto count_tabs = [](const std::string& s) {
        return std::count(s.begin(), s.end(), '\t');
    };
    CHECK(count_tabs(row) == count_tabs(report_tsv_header()));
}
