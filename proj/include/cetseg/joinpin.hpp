#pragma once

// Continuous piecewise-linear ("joinpin") trend models. The mean function is
// a + b t + sum_i c_i (t - tau_i)_+, which is continuous at every knot by
// construction, fitted by global least squares with a fixed error variance.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cetseg/core.hpp"
#include "cetseg/estimation.hpp"
#include "cetseg/search.hpp"

namespace cetseg {

struct JoinpinFit {
    ChangepointConfiguration config;
    std::vector<double> knot_values;   // fitted mean at each tau_i
    std::vector<double> fitted;        // fitted mean for t = 1..N
    std::vector<RegimeParams> regime_params;
    double sigma2 = 0.0;               // plugged-in error variance
    double rss = 0.0;
    double neg2loglik = 0.0;
    double penalty_value = 0.0;
    double bic_score = 0.0;

    double loglik() const noexcept { return -0.5 * neg2loglik; }
};

inline double default_joinpin_penalty(std::size_t n) { return 3.0 * std::log(static_cast<double>(n)); }

inline JoinpinFit fit_joinpin(const TimeSeries& series, const ChangepointConfiguration& config, double sigma2,
                              std::optional<double> per_changepoint = std::nullopt) {
    const std::size_t n = series.size();
    if (!(sigma2 > 0.0)) throw std::domain_error("joinpin error variance must be positive");
    detail::check_config(n, config, 2, "joinpin model");
    const std::size_t m = config.count();
    const std::size_t p = m + 2;
    if (n < p) throw std::domain_error("joinpin design has more columns than observations");

    Eigen::MatrixXd design(n, p);
    Eigen::VectorXd y(n);
    for (std::size_t t = 1; t <= n; ++t) {
        const auto row = static_cast<Eigen::Index>(t - 1);
        design(row, 0) = 1.0;
        design(row, 1) = static_cast<double>(t);
        for (std::size_t i = 0; i < m; ++i) {
            const double excess = static_cast<double>(t) - static_cast<double>(config.taus()[i]);
            design(row, static_cast<Eigen::Index>(i + 2)) = excess > 0.0 ? excess : 0.0;
        }
        y(row) = series.at(t);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < static_cast<Eigen::Index>(p)) {
        throw std::domain_error("joinpin design matrix is singular");
    }
    const Eigen::VectorXd coef = qr.solve(y);

    JoinpinFit fit;
    fit.config = config;
    fit.sigma2 = sigma2;

    // Regime k line: intercept and slope accumulate the hinges already active.
    double intercept = coef(0);
    double slope = coef(1);
    fit.regime_params.push_back({intercept, slope});
    for (std::size_t i = 0; i < m; ++i) {
        const double c = coef(static_cast<Eigen::Index>(i + 2));
        const double tau = static_cast<double>(config.taus()[i]);
        slope += c;
        intercept -= c * tau;
        fit.regime_params.push_back({intercept, slope});
        fit.knot_values.push_back(fit.regime_params[i].intercept + fit.regime_params[i].slope * tau);
    }

    const Eigen::VectorXd f = design * coef;
    fit.fitted.assign(f.data(), f.data() + f.size());
    fit.rss = (y - f).squaredNorm();
    const double nn = static_cast<double>(n);
    fit.neg2loglik = fit.rss / sigma2 + nn * std::log(sigma2) + nn * kLog2Pi;
    fit.penalty_value = per_changepoint.value_or(default_joinpin_penalty(n)) * static_cast<double>(m);
    fit.bic_score = fit.neg2loglik + fit.penalty_value;
    return fit;
}

using JoinpinReport = BasicSearchReport<JoinpinFit>;

namespace detail {

inline auto joinpin_fitness(const TimeSeries& series, double sigma2, std::optional<double> per_changepoint) {
    return [&series, sigma2, per_changepoint](const ChangepointConfiguration& c) {
        try {
            return fit_joinpin(series, c, sigma2, per_changepoint).bic_score;
        } catch (const std::domain_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
}

inline JoinpinReport make_joinpin_report(const TimeSeries& series, double sigma2,
                                         std::optional<double> per_changepoint, SearchOutcome&& outcome,
                                         std::uint64_t seed) {
    if (!std::isfinite(outcome.score)) throw std::domain_error("no admissible joinpin configuration");
    return {fit_joinpin(series, outcome.config, sigma2, per_changepoint), std::move(outcome.score_history),
            outcome.generations_run, outcome.evaluations, seed};
}

}  // namespace detail

/// BIC-minimal joinpin configuration found by the genetic algorithm.
inline JoinpinReport joinpin_search(const TimeSeries& series, double sigma2, std::size_t max_m,
                                    const GAParams& params = {},
                                    std::optional<double> per_changepoint = std::nullopt) {
    const SearchConstraints cons{series.size(), min_segment_length(MeanStructure::Joinpoint), max_m};
    auto outcome = genetic_search(cons, detail::joinpin_fitness(series, sigma2, per_changepoint), params);
    return detail::make_joinpin_report(series, sigma2, per_changepoint, std::move(outcome), params.seed);
}

/// Exhaustive counterpart of joinpin_search for short series.
inline JoinpinReport joinpin_exhaustive(const TimeSeries& series, double sigma2, std::size_t max_m,
                                        std::optional<double> per_changepoint = std::nullopt) {
    const SearchConstraints cons{series.size(), min_segment_length(MeanStructure::Joinpoint), max_m};
    auto outcome = exhaustive_search(cons, detail::joinpin_fitness(series, sigma2, per_changepoint));
    return detail::make_joinpin_report(series, sigma2, per_changepoint, std::move(outcome), 0);
}

}  // namespace cetseg
