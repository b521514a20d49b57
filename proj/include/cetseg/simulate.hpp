#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "cetseg/core.hpp"

namespace cetseg {

struct SimSpec {
    std::size_t n = 100;
    int first_year = 1;
    std::vector<std::size_t> taus;        // regime boundaries, tau convention
    std::vector<RegimeParams> regimes;    // one per regime
    ErrorModel error_model = ErrorModel::WhiteNoise;
    double phi = 0.0;
    double sigma = 1.0;                   // innovation standard deviation
    std::uint64_t seed = 1;

    void validate() const {
        ChangepointConfiguration config(n, taus);
        if (regimes.size() != config.regime_count()) {
            throw std::invalid_argument("simulation needs one parameter set per regime");
        }
        if (!(std::abs(phi) < 1.0)) throw std::invalid_argument("|phi| must be below 1");
        if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
    }
};

inline constexpr std::size_t kSimulationBurnIn = 100;

/// Zero-mean Gaussian errors: white noise or AR(1) after a discarded burn-in.
inline std::vector<double> simulate_errors(std::size_t n, ErrorModel model, double phi, double sigma,
                                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> innovation(0.0, 1.0);
    std::vector<double> eps(n);
    if (model == ErrorModel::WhiteNoise) {
        for (auto& e : eps) e = sigma * innovation(rng);
        return eps;
    }
    double state = 0.0;
    for (std::size_t i = 0; i < kSimulationBurnIn; ++i) state = phi * state + sigma * innovation(rng);
    for (auto& e : eps) {
        state = phi * state + sigma * innovation(rng);
        e = state;
    }
    return eps;
}

/// X_t = mu_r(t) + beta_r(t) t + eps_t.
inline TimeSeries simulate_series(const SimSpec& spec) {
    spec.validate();
    const ChangepointConfiguration config(spec.n, spec.taus);
    const auto eps = simulate_errors(spec.n, spec.error_model, spec.phi, spec.sigma, spec.seed);
    std::vector<double> x(spec.n);
    for (std::size_t t = 1; t <= spec.n; ++t) {
        const auto& r = spec.regimes[config.regime_index(t)];
        x[t - 1] = r.intercept + r.slope * static_cast<double>(t) + eps[t - 1];
    }
    return TimeSeries(spec.first_year, std::move(x));
}

}  // namespace cetseg
