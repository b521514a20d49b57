#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cetseg/core.hpp"
#include "cetseg/estimation.hpp"

namespace cetseg {

/// Applies (1 - B)^d through its binomial expansion truncated at
/// `truncation_lag` and at the available history.
inline std::vector<double> frac_diff(std::span<const double> input, double d, std::size_t truncation_lag) {
    if (d < 0.0 || d > 1.0) throw std::domain_error("fractional difference order must lie in [0,1]");
    if (truncation_lag < 1) throw std::domain_error("truncation lag must be positive");
    const std::size_t n = input.size();
    const std::size_t lags = std::min(truncation_lag, n == 0 ? 0 : n - 1);
    std::vector<double> weights(lags + 1);
    weights[0] = 1.0;
    for (std::size_t j = 1; j <= lags; ++j) {
        weights[j] = weights[j - 1] * (static_cast<double>(j) - 1.0 - d) / static_cast<double>(j);
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t top = std::min(t, lags);
        double acc = 0.0;
        for (std::size_t j = 0; j <= top; ++j) acc += weights[j] * input[t - j];
        out[t] = acc;
    }
    return out;
}

struct ArfimaProbe {
    double d;
    double phi;
    double css;
};

struct ArfimaFit {
    int p = 0;
    double d = 0.0;
    std::optional<double> phi;
    double mu = 0.0;
    double sigma2 = 0.0;
    double neg2loglik = 0.0;
    double penalty_value = 0.0;
    double bic_score = 0.0;
    bool d_at_boundary = false;
    std::vector<ArfimaProbe> probes;  // every (d, phi) the optimizer evaluated

    double loglik() const noexcept { return -0.5 * neg2loglik; }
};

namespace detail {

inline constexpr double kArfimaDLower = 1e-6;
inline constexpr double kArfimaDUpper = 0.5 - 1e-6;
inline constexpr double kArfimaPhiBound = 0.99;

struct CssPoint {
    double phi;
    double css;
};

// Conditional sum of squares at d; for p = 1 the AR coefficient is profiled
// out exactly (the objective is quadratic in phi) and clamped to the bound.
inline CssPoint arfima_css(std::span<const double> centered, double d, int p) {
    const auto w = frac_diff(centered, d, centered.size());
    if (p == 0) {
        double css = 0.0;
        for (double v : w) css += v * v;
        return {0.0, css};
    }
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t t = 1; t < w.size(); ++t) {
        sxy += w[t] * w[t - 1];
        sxx += w[t - 1] * w[t - 1];
    }
    double phi = sxx > 0.0 ? sxy / sxx : 0.0;
    phi = std::clamp(phi, -kArfimaPhiBound, kArfimaPhiBound);
    double css = w[0] * w[0];
    for (std::size_t t = 1; t < w.size(); ++t) {
        const double e = w[t] - phi * w[t - 1];
        css += e * e;
    }
    return {phi, css};
}

}  // namespace detail

/// ARFIMA(p, d, 0) by conditional sum of squares: grid scan over d followed
/// by golden-section refinement around the best grid cell.
inline ArfimaFit fit_arfima(const TimeSeries& series, int p, double tolerance = 1e-5) {
    if (p != 0 && p != 1) throw std::domain_error("ARFIMA autoregressive order must be 0 or 1");
    const std::size_t n = series.size();
    if (n < 30) throw std::domain_error("long-memory fit needs at least 30 observations");

    const auto x = series.values();
    ArfimaFit fit;
    fit.p = p;
    fit.mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(x.begin(), x.end());
    for (double& v : centered) v -= fit.mu;

    auto probe = [&](double d) {
        const auto pt = detail::arfima_css(centered, d, p);
        fit.probes.push_back({d, pt.phi, pt.css});
        return pt.css;
    };

    constexpr int kGrid = 50;
    const double lo = detail::kArfimaDLower;
    const double hi = detail::kArfimaDUpper;
    std::size_t best = 0;
    std::vector<double> grid(kGrid + 1);
    for (int i = 0; i <= kGrid; ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / kGrid;
        probe(grid[i]);
        if (fit.probes.back().css < fit.probes[best].css) best = fit.probes.size() - 1;
    }

    double a = grid[best == 0 ? 0 : best - 1];
    double b = grid[std::min<std::size_t>(best + 1, kGrid)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double e = a + inv_phi * (b - a);
    double fc = probe(c);
    double fe = probe(e);
    while (b - a > tolerance) {
        if (fc < fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = probe(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = probe(e);
        }
    }

    const auto& winner = *std::min_element(fit.probes.begin(), fit.probes.end(),
                                           [](const auto& l, const auto& r) { return l.css < r.css; });
    fit.d = winner.d;
    if (p == 1) fit.phi = winner.phi;
    fit.d_at_boundary = fit.d - lo < 1e-3 || hi - fit.d < 1e-3;
    fit.sigma2 = winner.css / static_cast<double>(n);
    fit.neg2loglik = neg2_loglik(fit.sigma2, n);
    // d, sigma^2 and phi when present; the mean is not counted.
    fit.penalty_value = static_cast<double>(2 + p) * std::log(static_cast<double>(n));
    fit.bic_score = fit.neg2loglik + fit.penalty_value;
    return fit;
}

}  // namespace cetseg
