#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cetseg/estimation.hpp"
#include "cetseg/search.hpp"
#include "oracles/oracles.hpp"

using namespace cetseg;
using Catch::Approx;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> z(0.0, sd);
    std::vector<double> x(n);
    for (auto& v : x) v = z(rng);
    return x;
}

ChangepointConfiguration random_config(std::mt19937_64& rng, std::size_t n, std::size_t min_len) {
    std::vector<std::uint8_t> genes(n - 1);
    std::bernoulli_distribution pick(0.25);
    for (auto& g : genes) g = pick(rng);
    repair(genes, {n, min_len});
    std::vector<std::size_t> taus;
    for (std::size_t j = 0; j < genes.size(); ++j) {
        if (genes[j]) taus.push_back(j + 1);
    }
    return {n, taus};
}

}  // namespace

TEST_CASE("segment averages", "[estimation]") {
    const std::vector<double> flat{5, 5, 5, 5};
    auto p = fit_mean_shift(flat, ChangepointConfiguration::none(4));
    REQUIRE(p.size() == 1);
    CHECK(p[0].intercept == 5.0);

    const std::vector<double> step{1, 1, 3, 3};
    p = fit_mean_shift(step, ChangepointConfiguration(4, {2}));
    CHECK(p[0].intercept == 1.0);
    CHECK(p[1].intercept == 3.0);
    CHECK(p[1].slope == 0.0);

    CHECK_THROWS_AS(fit_mean_shift(step, ChangepointConfiguration(5, {2})), std::domain_error);
}

TEST_CASE("regime-wise least squares lines", "[estimation]") {
    std::vector<double> line(20);
    for (std::size_t t = 1; t <= line.size(); ++t) line[t - 1] = 2.0 + 0.5 * static_cast<double>(t);
    const auto p = fit_trend_shift(line, ChangepointConfiguration::none(20));
    CHECK_THAT(p[0].intercept, WithinAbs(2.0, 1e-12));
    CHECK_THAT(p[0].slope, WithinAbs(0.5, 1e-12));

    CHECK_THROWS_AS(fit_trend_shift(line, ChangepointConfiguration(20, {2})), std::domain_error);
    CHECK_THROWS_AS(fit_trend_shift(line, ChangepointConfiguration(20, {18})), std::domain_error);
}

TEST_CASE("trend-shift estimates match a normal-equations solve per regime", "[estimation][oracle]") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_series(rng, 12, 2.0);
        const ChangepointConfiguration c(12, {5});
        const auto p = fit_trend_shift(x, c);
        for (std::size_t k = 0; k < 2; ++k) {
            const auto r = c.regime(k);
            std::vector<std::vector<double>> design;
            std::vector<double> y;
            for (std::size_t t = r.first; t <= r.last; ++t) {
                design.push_back({1.0, static_cast<double>(t)});
                y.push_back(x[t - 1]);
            }
            const auto beta = oracle::least_squares(design, y);
            REQUIRE_THAT(p[k].intercept, WithinAbs(beta[0], 1e-10));
            REQUIRE_THAT(p[k].slope, WithinAbs(beta[1], 1e-10));
        }
    }
}

TEST_CASE("pooled-slope estimates", "[estimation]") {
    std::vector<double> line(15);
    for (std::size_t t = 1; t <= line.size(); ++t) line[t - 1] = -1.0 + 0.3 * static_cast<double>(t);
    const auto fixed = fit_fixed_slope(line, ChangepointConfiguration::none(15));
    const auto trend = fit_trend_shift(line, ChangepointConfiguration::none(15));
    CHECK(fixed[0] == trend[0]);

    // Two regimes sharing slope 0.7 with an offset jump; no noise.
    std::vector<double> jump(16);
    for (std::size_t t = 1; t <= jump.size(); ++t) {
        jump[t - 1] = (t <= 7 ? 1.0 : 4.5) + 0.7 * static_cast<double>(t);
    }
    const auto p = fit_fixed_slope(jump, ChangepointConfiguration(16, {7}));
    CHECK_THAT(p[0].slope, WithinAbs(0.7, 1e-10));
    CHECK_THAT(p[1].slope, WithinAbs(0.7, 1e-10));
    CHECK_THAT(p[0].intercept, WithinAbs(1.0, 1e-10));
    CHECK_THAT(p[1].intercept, WithinAbs(4.5, 1e-10));

    CHECK_THROWS_AS(fit_fixed_slope(jump, ChangepointConfiguration(16, {1})), std::domain_error);
}

TEST_CASE("pooled-slope estimates match the dummy-variable regression", "[estimation][oracle]") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_series(rng, 13);
        const ChangepointConfiguration c(13, {4, 9});
        const auto f = fitted_mean(c, fit_fixed_slope(x, c));
        const auto g = oracle::fitted_values(x, c.taus(), oracle::Family::FixedSlope);
        for (std::size_t i = 0; i < f.size(); ++i) REQUIRE_THAT(f[i], WithinAbs(g[i], 1e-10));
    }
}

TEST_CASE("one-regime trend fit equals the m = 0 pooled-slope fit", "[estimation][property]") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_series(rng, 3 + trial);
        const auto c = ChangepointConfiguration::none(x.size());
        REQUIRE(fit_trend_shift(x, c) == fit_fixed_slope(x, c));
    }
}

TEST_CASE("detrending", "[estimation]") {
    std::mt19937_64 rng(3);
    const auto x = random_series(rng, 30);
    const ChangepointConfiguration c(30, {8, 19});
    const auto d = detrend(x, fitted_mean(c, fit_trend_shift(x, c)));
    double total = 0.0;
    for (const auto& r : c.regimes()) {
        double s = 0.0;
        for (std::size_t t = r.first; t <= r.last; ++t) s += d.values[t - 1];
        CHECK(std::abs(s) < 1e-9);
        total += s;
    }
    CHECK(std::abs(total / 30.0) < 1e-9);

    const std::vector<double> zero(30, 0.0);
    CHECK(detrend(x, zero).values == x);
    CHECK_THROWS_AS(detrend(x, std::vector<double>(29, 0.0)), std::invalid_argument);
}

TEST_CASE("AR(1) coefficient", "[estimation]") {
    const std::vector<double> alt{1, -1, 1, -1};
    CHECK(estimate_ar1(alt) == -0.75);
    CHECK(estimate_ar1(std::vector<double>{0, 0, 0}) == 0.0);
    CHECK_THROWS_AS(estimate_ar1(std::vector<double>{1.0}), std::domain_error);
}

TEST_CASE("|phi| never exceeds one", "[estimation][property]") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> len(2, 40);
    for (int trial = 0; trial < 500; ++trial) {
        auto d = random_series(rng, len(rng));
        if (trial % 3 == 0) {
            for (std::size_t i = 1; i < d.size(); ++i) d[i] = d[i - 1];  // constant run
        }
        REQUIRE(std::abs(estimate_ar1(d)) <= 1.0);
    }
}

TEST_CASE("innovation variance", "[estimation]") {
    CHECK_THAT(innovation_variance(std::vector<double>{2, 0, 0}, 0.0), WithinRel(4.0 / 3.0, 1e-15));
    CHECK_THAT(innovation_variance(std::vector<double>{1, 1, 1}, 1.0), WithinRel(1.0 / 3.0, 1e-15));
    CHECK_THROWS_AS(innovation_variance(std::vector<double>{1, 1}, 1.5), std::domain_error);
}

TEST_CASE("Gaussian -2 log likelihood", "[estimation]") {
    CHECK_THAT(neg2_loglik(1.0, 10), WithinAbs(28.37877066409345, 1e-10));
    CHECK_THAT(neg2_loglik(std::exp(1.0), 5), WithinAbs(19.189385332046726, 1e-10));
    CHECK_THROWS_AS(neg2_loglik(0.0, 10), DegenerateFit);
    // -2 log L* = 581.04 corresponds to sigma2 ~ 0.29 at N = 362.
    CHECK_THAT(neg2_loglik(0.2915, 362), WithinAbs(581.04, 0.6));
}

TEST_CASE("regime variances", "[estimation]") {
    const std::vector<double> d{1, -1, 1, -1, 3, -3, 3, -3};
    const auto one = fit_variance_shift(d, ChangepointConfiguration::none(8));
    CHECK(one.regime_variances == std::vector<double>{5.0});

    const auto two = fit_variance_shift(d, ChangepointConfiguration(8, {4}));
    CHECK(two.regime_variances == std::vector<double>{1.0, 9.0});
    CHECK_THAT(two.neg2loglik, WithinAbs(4 * std::log(9.0) + 8 * kLog2Pi + 8, 1e-12));

    CHECK_THROWS_AS(fit_variance_shift(d, ChangepointConfiguration(8, {1})), std::domain_error);
    const std::vector<double> dead{0, 0, 1, -1};
    CHECK_THROWS_AS(fit_variance_shift(dead, ChangepointConfiguration(4, {2})), DegenerateFit);
}

namespace {

const ModelSpec kFamilies[] = {
    {MeanStructure::MeanShift, ErrorModel::WhiteNoise, Penalty::BIC},
    {MeanStructure::MeanShift, ErrorModel::AR1, Penalty::MDL},
    {MeanStructure::TrendShift, ErrorModel::WhiteNoise, Penalty::BIC},
    {MeanStructure::TrendShift, ErrorModel::AR1, Penalty::BIC},
    {MeanStructure::FixedSlope, ErrorModel::AR1, Penalty::MDL},
};

}  // namespace

TEST_CASE("location shifts leave residual-based quantities unchanged", "[estimation][property]") {
    std::mt19937_64 rng(21);
    for (const auto& spec : kFamilies) {
        for (int trial = 0; trial < 40; ++trial) {
            auto x = random_series(rng, 25);
            const auto c = random_config(rng, 25, min_segment_length(spec.mean_structure));
            auto shifted = x;
            for (auto& v : shifted) v += 37.5;
            const auto a = evaluate(TimeSeries(1, x), spec, c);
            const auto b = evaluate(TimeSeries(1, shifted), spec, c);
            REQUIRE_THAT(b.neg2loglik, WithinAbs(a.neg2loglik, 1e-9));
            REQUIRE_THAT(b.sigma2_hat, WithinAbs(a.sigma2_hat, 1e-9));
            REQUIRE_THAT(b.score, WithinAbs(a.score, 1e-9));
            if (a.phi_hat) REQUIRE_THAT(*b.phi_hat, WithinAbs(*a.phi_hat, 1e-9));
            for (std::size_t k = 0; k < a.regime_params.size(); ++k) {
                REQUIRE_THAT(b.regime_params[k].intercept, WithinAbs(a.regime_params[k].intercept + 37.5, 1e-9));
                REQUIRE_THAT(b.regime_params[k].slope, WithinAbs(a.regime_params[k].slope, 1e-9));
            }
        }
    }
}

TEST_CASE("positive scaling shifts -2 log L* uniformly", "[estimation][property]") {
    std::mt19937_64 rng(22);
    const double a = 3.7;
    for (const auto& spec : kFamilies) {
        for (int trial = 0; trial < 40; ++trial) {
            auto x = random_series(rng, 25);
            const auto c = random_config(rng, 25, min_segment_length(spec.mean_structure));
            auto scaled = x;
            for (auto& v : scaled) v *= a;
            const auto f = evaluate(TimeSeries(1, x), spec, c);
            const auto g = evaluate(TimeSeries(1, scaled), spec, c);
            REQUIRE_THAT(g.sigma2_hat, WithinRel(a * a * f.sigma2_hat, 1e-10));
            REQUIRE_THAT(g.neg2loglik - f.neg2loglik, WithinAbs(2.0 * 25 * std::log(a), 1e-9));
        }
    }
}

TEST_CASE("adding a changepoint never increases the minimized -2 log L*", "[estimation][property]") {
    std::mt19937_64 rng(23);
    const ModelSpec nested[] = {
        {MeanStructure::MeanShift, ErrorModel::WhiteNoise, Penalty::BIC},
        {MeanStructure::TrendShift, ErrorModel::WhiteNoise, Penalty::BIC},
        {MeanStructure::FixedSlope, ErrorModel::WhiteNoise, Penalty::BIC},
        {MeanStructure::VarianceShift, ErrorModel::WhiteNoise, Penalty::BIC},
    };
    for (const auto& spec : nested) {
        const std::size_t min_len = min_segment_length(spec.mean_structure);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 20;
            const auto x = random_series(rng, n);
            const auto c = random_config(rng, n, min_len);
            // Insert one more admissible boundary, if any exists.
            std::vector<std::size_t> candidates;
            for (std::size_t tau = 1; tau < n; ++tau) {
                auto taus = c.taus();
                if (std::find(taus.begin(), taus.end(), tau) != taus.end()) continue;
                taus.insert(std::upper_bound(taus.begin(), taus.end(), tau), tau);
                if (ChangepointConfiguration(n, taus).shortest_regime() >= min_len) candidates.push_back(tau);
            }
            if (candidates.empty()) continue;
            auto taus = c.taus();
            const auto tau = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
            taus.insert(std::upper_bound(taus.begin(), taus.end(), tau), tau);
            const TimeSeries s(1, x);
            const auto coarse = evaluate(s, spec, c);
            const auto fine = evaluate(s, spec, ChangepointConfiguration(n, taus));
            REQUIRE(fine.neg2loglik <= coarse.neg2loglik + 1e-9);
        }
    }
}
