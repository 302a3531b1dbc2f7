#include "volcast/garch.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace volcast {

void validate_params(const GarchParams& p) {
    if (!(p.a0 > 0)) throw std::invalid_argument("garch a0 must be positive");
    if (p.a1 < 0 || p.b1 < 0) throw std::invalid_argument("garch a1, b1 must be non-negative");
    if (!(p.a1 + p.b1 < 1)) throw std::invalid_argument("garch requires a1 + b1 < 1");
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
constexpr double kMinVar = 1e-18;               // keeps ln finite on flat series

// Optimizer workspace: squared residuals fixed per fit, variance path reused
// across objective evaluations. The scalar recursion is cheap; the log/ratio
// reductions run through Eigen's vectorized array kernels.
struct NllWorkspace {
    Eigen::ArrayXd eps2;
    Eigen::ArrayXd s2;
    double s2_init = 0;

    explicit NllWorkspace(const std::vector<double>& r, double mu) {
        const auto n = static_cast<Eigen::Index>(r.size());
        eps2.resize(n);
        s2.resize(n);
        for (Eigen::Index t = 0; t < n; ++t) {
            const double e = r[static_cast<std::size_t>(t)] - mu;
            eps2[t] = e * e;
        }
        s2_init = std::max(eps2.mean(), kMinVar);
    }

    double negative_loglik(double a0, double a1, double b1) {
        const Eigen::Index n = eps2.size();
        double v = s2_init;
        s2[0] = v;
        for (Eigen::Index t = 1; t < n; ++t) {
            v = a0 + a1 * eps2[t - 1] + b1 * v;
            s2[t] = v;
        }
        const double nll = 0.5 * (static_cast<double>(n) * kLog2Pi +
                                  s2.log().sum() + (eps2 / s2).sum());
        return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
    }
};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

GarchParams decode_theta(const double* theta, double mu) {
    const double p = logistic(theta[1]);
    const double q = logistic(theta[2]);
    return GarchParams{mu, std::exp(theta[0]), p * q, p * (1.0 - q)};
}

}  // namespace

GarchFit filter_variance(const std::vector<double>& returns, const GarchParams& params) {
    if (returns.size() < 20)
        throw std::invalid_argument("variance filtering needs at least 20 observations");
    validate_params(params);

    const std::size_t n = returns.size();
    GarchFit fit;
    fit.params = params;
    fit.cond_variance.resize(n);
    fit.residuals.resize(n);

    double s2 = 0;
    for (double x : returns) s2 += (x - params.mu) * (x - params.mu);
    s2 = std::max(s2 / static_cast<double>(n), kMinVar);

    double ll = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) {
            const double e = fit.residuals[t - 1];
            s2 = params.a0 + params.a1 * e * e + params.b1 * fit.cond_variance[t - 1];
        }
        fit.cond_variance[t] = s2;
        fit.residuals[t] = returns[t] - params.mu;
        ll -= 0.5 * (kLog2Pi + std::log(s2) +
                     fit.residuals[t] * fit.residuals[t] / s2);
    }
    fit.log_likelihood = ll;
    return fit;
}

GarchFit fit(const std::vector<double>& returns) {
    if (returns.size() < 20)
        throw std::invalid_argument("garch fitting needs at least 20 observations");
    const std::size_t n = returns.size();
    double mu = 0;
    for (double x : returns) mu += x;
    mu /= static_cast<double>(n);

    double var = 0;
    for (double x : returns) var += (x - mu) * (x - mu);
    var = std::max(var / static_cast<double>(n), kMinVar);

    NllWorkspace ws(returns, mu);
    auto objective = [&](const double* theta) {
        const GarchParams p = decode_theta(theta, mu);
        return ws.negative_loglik(p.a0, p.a1, p.b1);
    };

    // Restart 0 is a standard persistent start; the rest perturb it.
    std::mt19937_64 restart_rng(0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    double best_nll = std::numeric_limits<double>::infinity();
    double best_theta[3] = {0, 0, 0};
    bool best_converged = false;
    int best_iterations = 0;
    int finite_starts = 0;

    for (int restart = 0; restart < 5; ++restart) {
        double theta[3];
        if (restart == 0) {
            // standard persistent start
            theta[0] = std::log(0.05 * var);
            theta[1] = logit(0.9);
            theta[2] = logit(0.1);
        } else if (restart == 1) {
            // low-persistence start; wins on serially uncorrelated data
            theta[0] = std::log(0.9 * var);
            theta[1] = logit(0.1);
            theta[2] = logit(0.5);
        } else {
            theta[0] = std::log(var * (0.01 + 0.5 * u01(restart_rng)));
            theta[1] = logit(0.4 + 0.58 * u01(restart_rng));
            theta[2] = logit(0.05 + 0.6 * u01(restart_rng));
        }
        double nll = objective(theta);
        if (!std::isfinite(nll)) continue;
        ++finite_starts;

        // Adam on three parameters with central-difference gradients and a
        // decaying step size so the iterate settles instead of orbiting.
        const double lr0 = 0.05, beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
        const double h = 1e-5;
        double m[3] = {0, 0, 0}, v[3] = {0, 0, 0};
        bool converged = false;
        int iters = 0;
        int quiet = 0;
        for (int it = 1; it <= 2000; ++it) {
            iters = it;
            double grad[3];
            for (int i = 0; i < 3; ++i) {
                double tp[3] = {theta[0], theta[1], theta[2]};
                tp[i] += h;
                const double fp = objective(tp);
                tp[i] -= 2 * h;
                const double fm = objective(tp);
                if (!std::isfinite(fp) || !std::isfinite(fm)) {
                    grad[i] = 0;
                } else {
                    grad[i] = (fp - fm) / (2 * h);
                }
            }
            const double lr = lr0 / (1.0 + it / 500.0);
            for (int i = 0; i < 3; ++i) {
                m[i] = beta1 * m[i] + (1 - beta1) * grad[i];
                v[i] = beta2 * v[i] + (1 - beta2) * grad[i] * grad[i];
                const double mhat = m[i] / (1 - std::pow(beta1, it));
                const double vhat = v[i] / (1 - std::pow(beta2, it));
                theta[i] -= lr * mhat / (std::sqrt(vhat) + adam_eps);
            }
            const double next = objective(theta);
            if (std::isfinite(next)) {
                const double improvement =
                    (nll - next) / (std::abs(nll) + 1e-12);
                if (std::abs(improvement) < 1e-9) {
                    if (++quiet >= 10) {
                        converged = true;
                        nll = std::min(nll, next);
                        break;
                    }
                } else {
                    quiet = 0;
                }
                nll = std::min(nll, next);
            }
        }
        if (nll < best_nll) {
            best_nll = nll;
            best_theta[0] = theta[0];
            best_theta[1] = theta[1];
            best_theta[2] = theta[2];
            best_converged = converged;
            best_iterations = iters;
        }
    }

    if (finite_starts == 0 || !std::isfinite(best_nll)) {
        throw std::runtime_error(
            "garch fit failed: likelihood non-finite at every restart (n=" +
            std::to_string(n) + ", sample variance=" + std::to_string(var) + ")");
    }

    GarchFit result = filter_variance(returns, decode_theta(best_theta, mu));
    result.converged = best_converged;
    result.iterations = best_iterations;
    return result;
}

double forecast_one_step(const GarchFit& fit) {
    if (fit.cond_variance.empty())
        throw std::invalid_argument("forecast needs a filtered fit");
    const double eps = fit.residuals.back();
    return fit.params.a0 + fit.params.a1 * eps * eps +
           fit.params.b1 * fit.cond_variance.back();
}

GarchForecast forecast_multi_step(const GarchFit& fit, int horizon) {
    if (horizon < 1) throw std::invalid_argument("forecast horizon must be >= 1");
    const double kappa = fit.params.a1 + fit.params.b1;
    if (kappa >= 1.0)
        throw std::invalid_argument("multi-step forecast requires a1 + b1 < 1");

    GarchForecast out;
    out.horizon = horizon;
    out.unconditional_variance = fit.params.a0 / (1.0 - kappa);
    out.expected_variance.resize(horizon);
    // Deviation form of the recursion: exact for both the step identity and
    // the closed-form geometric decay.
    double dev = forecast_one_step(fit) - out.unconditional_variance;
    for (int t = 0; t < horizon; ++t) {
        out.expected_variance[t] = out.unconditional_variance + dev;
        dev *= kappa;
    }
    return out;
}

std::vector<double> simulate_garch(const GarchParams& params, int n, std::uint64_t rng_seed) {
    validate_params(params);
    if (n < 1) throw std::invalid_argument("simulation length must be >= 1");
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> r(n);
    double s2 = params.a0 / (1.0 - params.a1 - params.b1);
    double eps = 0;
    for (int t = 0; t < n; ++t) {
        if (t > 0) s2 = params.a0 + params.a1 * eps * eps + params.b1 * s2;
        eps = std::sqrt(s2) * normal(rng);
        r[t] = params.mu + eps;
    }
    return r;
}

std::string fit_to_json(const GarchFit& fit) {
    nlohmann::json j;
    j["mu"] = fit.params.mu;
    j["a0"] = fit.params.a0;
    j["a1"] = fit.params.a1;
    j["b1"] = fit.params.b1;
    j["log_likelihood"] = fit.log_likelihood;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    return j.dump(2);
}

GarchParams params_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GarchParams p;
    p.mu = j.at("mu").get<double>();
    p.a0 = j.at("a0").get<double>();
    p.a1 = j.at("a1").get<double>();
    p.b1 = j.at("b1").get<double>();
    validate_params(p);
    return p;
}

}  // namespace volcast
