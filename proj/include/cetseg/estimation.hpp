#pragma once

// Per-configuration estimators. Regression parameters are ordinary least
// squares fitted regime by regime against the global time index t = 1..N;
// the AR(1) coefficient and innovation variance are then estimated from the
// residuals.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cetseg/core.hpp"

namespace cetseg {

inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

/// Residuals D_t = X_t - f(t) of a fitted mean function.
struct ResidualSeries {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

struct VarianceRegimeFit {
    ChangepointConfiguration config;
    std::vector<double> regime_variances;
    double neg2loglik = 0.0;
};

namespace detail {

inline void check_config(std::size_t n, const ChangepointConfiguration& config, std::size_t min_len,
                         const char* model) {
    if (config.series_length() != n) {
        throw std::domain_error("configuration length " + std::to_string(config.series_length()) +
                                " does not match series length " + std::to_string(n));
    }
    if (config.shortest_regime() < min_len) {
        throw std::domain_error(std::string(model) + " requires every regime to have at least " +
                                std::to_string(min_len) + " observations");
    }
}

struct RegimeMoments {
    double x_bar = 0.0;
    double t_bar = 0.0;
    double sxt = 0.0;  // sum (X_t - x_bar)(t - t_bar)
    double stt = 0.0;  // sum (t - t_bar)^2
};

inline RegimeMoments regime_moments(std::span<const double> x, Regime r) {
    RegimeMoments m;
    const double len = static_cast<double>(r.length());
    double sum = 0.0;
    for (std::size_t t = r.first; t <= r.last; ++t) sum += x[t - 1];
    m.x_bar = sum / len;
    m.t_bar = 0.5 * static_cast<double>(r.first + r.last);
    for (std::size_t t = r.first; t <= r.last; ++t) {
        const double dt = static_cast<double>(t) - m.t_bar;
        m.sxt += (x[t - 1] - m.x_bar) * dt;
        m.stt += dt * dt;
    }
    return m;
}

}  // namespace detail

/// Segment averages mu_0..mu_m (slopes are zero).
inline std::vector<RegimeParams> fit_mean_shift(std::span<const double> x, const ChangepointConfiguration& config) {
    detail::check_config(x.size(), config, 1, "mean-shift model");
    std::vector<RegimeParams> params;
    params.reserve(config.regime_count());
    for (const auto& r : config.regimes()) {
        double sum = 0.0;
        for (std::size_t t = r.first; t <= r.last; ++t) sum += x[t - 1];
        params.push_back({sum / static_cast<double>(r.length()), 0.0});
    }
    return params;
}

/// Separate least-squares line in every regime.
inline std::vector<RegimeParams> fit_trend_shift(std::span<const double> x, const ChangepointConfiguration& config) {
    detail::check_config(x.size(), config, 3, "trend-shift model");
    std::vector<RegimeParams> params;
    params.reserve(config.regime_count());
    for (const auto& r : config.regimes()) {
        const auto m = detail::regime_moments(x, r);
        const double beta = m.sxt / m.stt;
        params.push_back({m.x_bar - beta * m.t_bar, beta});
    }
    return params;
}

/// Regime-specific intercepts with one pooled slope: the ratio of summed
/// within-regime cross products to summed within-regime time variation.
inline std::vector<RegimeParams> fit_fixed_slope(std::span<const double> x, const ChangepointConfiguration& config) {
    detail::check_config(x.size(), config, 2, "fixed-slope model");
    std::vector<detail::RegimeMoments> moments;
    moments.reserve(config.regime_count());
    double sxt = 0.0;
    double stt = 0.0;
    for (const auto& r : config.regimes()) {
        moments.push_back(detail::regime_moments(x, r));
        sxt += moments.back().sxt;
        stt += moments.back().stt;
    }
    const double beta = sxt / stt;
    std::vector<RegimeParams> params;
    params.reserve(moments.size());
    for (const auto& m : moments) params.push_back({m.x_bar - beta * m.t_bar, beta});
    return params;
}

/// Fitted mean f(t) for t = 1..N.
inline std::vector<double> fitted_mean(const ChangepointConfiguration& config, std::span<const RegimeParams> params) {
    if (params.size() != config.regime_count()) {
        throw std::invalid_argument("one parameter set per regime required");
    }
    std::vector<double> f(config.series_length());
    for (std::size_t k = 0; k < config.regime_count(); ++k) {
        const auto r = config.regime(k);
        for (std::size_t t = r.first; t <= r.last; ++t) {
            f[t - 1] = params[k].intercept + params[k].slope * static_cast<double>(t);
        }
    }
    return f;
}

inline ResidualSeries detrend(std::span<const double> x, std::span<const double> fitted) {
    if (x.size() != fitted.size()) {
        throw std::invalid_argument("detrend: series has " + std::to_string(x.size()) +
                                    " values but fitted mean has " + std::to_string(fitted.size()));
    }
    ResidualSeries d;
    d.values.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d.values[i] = x[i] - fitted[i];
    return d;
}

/// phi = sum_{t<N} D_t D_{t+1} / sum_t D_t^2. Zero residuals give phi = 0.
inline double estimate_ar1(std::span<const double> d) {
    if (d.size() < 2) throw std::domain_error("AR(1) estimation needs at least two residuals");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) num += d[i] * d[i + 1];
    for (double v : d) den += v * v;
    if (den == 0.0) return 0.0;
    return num / den;
}

/// Mean squared one-step prediction error with predictor phi * D_{t-1}
/// and start-up prediction 0.
inline double innovation_variance(std::span<const double> d, double phi) {
    if (!(std::abs(phi) <= 1.0)) throw std::domain_error("|phi| must not exceed 1");
    if (d.empty()) throw std::domain_error("empty residual series");
    double ss = d[0] * d[0];
    for (std::size_t i = 1; i < d.size(); ++i) {
        const double e = d[i] - phi * d[i - 1];
        ss += e * e;
    }
    return ss / static_cast<double>(d.size());
}

/// -2 log L* = N log(sigma2) + N + N log(2 pi).
inline double neg2_loglik(double sigma2, std::size_t n) {
    if (!(sigma2 > 0.0)) throw DegenerateFit("innovation variance is zero; fit is degenerate");
    const double nn = static_cast<double>(n);
    return nn * std::log(sigma2) + nn + nn * kLog2Pi;
}

/// Regime variances of a zero-mean series and the profiled Gaussian -2 log L:
/// sum_k len_k log(v_k^2) + N log(2 pi) + N.
inline VarianceRegimeFit fit_variance_shift(std::span<const double> d, const ChangepointConfiguration& config) {
    detail::check_config(d.size(), config, 2, "variance-shift model");
    VarianceRegimeFit fit{config, {}, 0.0};
    fit.regime_variances.reserve(config.regime_count());
    const double n = static_cast<double>(d.size());
    double neg2 = n * kLog2Pi + n;
    for (const auto& r : config.regimes()) {
        double ss = 0.0;
        for (std::size_t t = r.first; t <= r.last; ++t) ss += d[t - 1] * d[t - 1];
        const double v = ss / static_cast<double>(r.length());
        if (!(v > 0.0)) throw DegenerateFit("regime variance is zero; fit is degenerate");
        fit.regime_variances.push_back(v);
        neg2 += static_cast<double>(r.length()) * std::log(v);
    }
    fit.neg2loglik = neg2;
    return fit;
}

}  // namespace cetseg
