#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace volcast {

/// GARCH(1,1) parameter set: r_t = mu + eps_t, eps_t = sigma_t z_t,
/// sigma2_t = a0 + a1 eps2_{t-1} + b1 sigma2_{t-1}.
struct GarchParams {
    double mu = 0;
    double a0 = 1e-6;
    double a1 = 0.05;
    double b1 = 0.90;
};

/// Throws std::invalid_argument unless a0 > 0, a1 >= 0, b1 >= 0, a1 + b1 < 1.
void validate_params(const GarchParams& p);

struct GarchFit {
    GarchParams params;
    std::vector<double> cond_variance;  // sigma2_t, aligned to the returns
    std::vector<double> residuals;      // eps_t = r_t - mu
    double log_likelihood = 0;
    bool converged = false;
    int iterations = 0;
};

struct GarchForecast {
    int horizon = 0;
    std::vector<double> expected_variance;  // E_T[sigma2_{T+1..T+horizon}]
    double unconditional_variance = 0;
};

/// Runs the conditional-variance recursion at fixed parameters.
/// sigma2_1 is the sample variance of demeaned returns; the Gaussian
/// quasi-log-likelihood sum_t -0.5 (ln 2pi + ln sigma2_t + eps2_t/sigma2_t)
/// is attached. Requires at least 20 observations.
GarchFit filter_variance(const std::vector<double>& returns, const GarchParams& params);

/// Quasi-maximum-likelihood fit. The mean is the sample average of returns;
/// the three variance parameters are optimized in an unconstrained
/// reparameterization (a0 = exp(t0), persistence = logistic(t1),
/// arch share = logistic(t2)) with an adaptive first-order method,
/// finite-difference gradients, and five random restarts. Deterministic.
GarchFit fit(const std::vector<double>& returns);

/// a0 + a1 eps2_T + b1 sigma2_T from the final filtered state.
double forecast_one_step(const GarchFit& fit);

/// Expected variances at horizons 1..horizon. Every step satisfies
/// E[sigma2_{T+t}] - sigma2_u = (a1+b1)^{t-1} (E[sigma2_{T+1}] - sigma2_u)
/// with sigma2_u = a0 / (1 - a1 - b1).
GarchForecast forecast_multi_step(const GarchFit& fit, int horizon);

/// Simulates n returns r_t = mu + sigma_t z_t with standard Gaussian shocks,
/// starting the variance recursion from its unconditional level.
std::vector<double> simulate_garch(const GarchParams& params, int n, std::uint64_t rng_seed);

/// {mu, a0, a1, b1, log_likelihood, converged, iterations} as JSON text.
std::string fit_to_json(const GarchFit& fit);

/// Reads the parameter fields back from a fit document.
GarchParams params_from_json(const std::string& text);

}  // namespace volcast
