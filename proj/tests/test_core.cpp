#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cetseg/core.hpp"

using namespace cetseg;

TEST_CASE("regime_index follows the tau convention", "[core]") {
    const ChangepointConfiguration ten(10, {4});
    CHECK(regime_index(1, ten) == 0);
    CHECK(regime_index(4, ten) == 0);
    CHECK(regime_index(5, ten) == 1);
    CHECK(regime_index(10, ten) == 1);

    const ChangepointConfiguration cet(362, {41, 80, 329});
    CHECK(regime_index(1, cet) == 0);
    CHECK(regime_index(330, cet) == 3);
    CHECK(regime_index(329, cet) == 2);

    CHECK_THROWS_AS(regime_index(0, cet), std::domain_error);
    CHECK_THROWS_AS(regime_index(363, cet), std::domain_error);
}

TEST_CASE("year and index maps", "[core]") {
    const TimeSeries s(1659, std::vector<double>(362, 9.0));
    CHECK(s.year_of(1) == 1659);
    CHECK(s.index_of(1700) == 42);
    CHECK(s.year_of(362) == 2020);
    CHECK(s.index_of(1659) == 1);
    CHECK_THROWS_AS(s.year_of(363), std::domain_error);
    CHECK_THROWS_AS(s.index_of(1658), std::domain_error);
    CHECK_THROWS_AS(s.index_of(2021), std::domain_error);
    for (std::size_t t = 1; t <= s.size(); ++t) REQUIRE(s.index_of(s.year_of(t)) == t);
}

TEST_CASE("flagged years are the first year of each new regime", "[core]") {
    const TimeSeries s(1659, std::vector<double>(362, 9.0));
    const ChangepointConfiguration c(362, {41, 80, 329});
    CHECK(changepoint_years(c, s) == std::vector<int>{1700, 1739, 1988});
    const std::vector<int> years{1700, 1739, 1988};
    CHECK(config_from_years(s, years) == c);

    const auto regimes = c.regimes();
    CHECK(s.year_of(regimes[0].first) == 1659);
    CHECK(s.year_of(regimes[0].last) == 1699);
    CHECK(s.year_of(regimes[3].first) == 1988);
    CHECK(s.year_of(regimes[3].last) == 2020);
}

TEST_CASE("configurations reject malformed boundaries", "[core]") {
    CHECK_THROWS_AS(ChangepointConfiguration(10, {0}), std::domain_error);
    CHECK_THROWS_AS(ChangepointConfiguration(10, {10}), std::domain_error);
    CHECK_THROWS_AS(ChangepointConfiguration(10, {5, 5}), std::domain_error);
    CHECK_THROWS_AS(ChangepointConfiguration(10, {6, 3}), std::domain_error);
    CHECK_NOTHROW(ChangepointConfiguration(10, {1, 9}));
}

TEST_CASE("empty series and missing data are rejected at construction", "[core]") {
    CHECK_THROWS_AS(TimeSeries(2000, {}), DataError);
}

TEST_CASE("regime bookkeeping invariants on random configurations", "[core][property]") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 60)(rng);
        std::vector<std::size_t> taus;
        std::bernoulli_distribution pick(0.2);
        for (std::size_t tau = 1; tau < n; ++tau) {
            if (pick(rng)) taus.push_back(tau);
        }
        const ChangepointConfiguration c(n, taus);

        std::size_t total = 0;
        for (const auto& r : c.regimes()) total += r.length();
        REQUIRE(total == n);

        std::size_t prev = 0;
        std::vector<bool> seen(c.regime_count(), false);
        for (std::size_t t = 1; t <= n; ++t) {
            const auto r = regime_index(t, c);
            REQUIRE(r >= prev);
            REQUIRE(c.regime(r).first <= t);
            REQUIRE(t <= c.regime(r).last);
            seen[r] = true;
            prev = r;
        }
        for (bool s : seen) REQUIRE(s);
    }
}

TEST_CASE("model spec validation", "[core]") {
    CHECK_THROWS(ModelSpec{MeanStructure::Joinpoint, ErrorModel::WhiteNoise, Penalty::MDL}.validate());
    CHECK_THROWS(ModelSpec{MeanStructure::LongMemory, ErrorModel::WhiteNoise, Penalty::MDL}.validate());
    CHECK_NOTHROW(ModelSpec{MeanStructure::TrendShift, ErrorModel::AR1, Penalty::MDL}.validate());
    CHECK(min_segment_length(MeanStructure::MeanShift) == 1);
    CHECK(min_segment_length(MeanStructure::TrendShift) == 3);
    CHECK(min_segment_length(MeanStructure::FixedSlope) == 2);
    CHECK(min_segment_length(MeanStructure::VarianceShift) == 2);
    CHECK_THROWS(min_segment_length(MeanStructure::LongMemory));
    CHECK(parse_mean_structure("joinpin") == MeanStructure::Joinpoint);
    CHECK_THROWS(parse_penalty("aic"));
}

TEST_CASE("restricting a series to a year range", "[core]") {
    const TimeSeries s(1659, std::vector<double>(363, 1.0));
    const auto r = s.restrict(1659, 2020);
    CHECK(r.size() == 362);
    CHECK(r.first_year() == 1659);
    CHECK_THROWS_AS(s.restrict(1650, 2000), DataError);
    CHECK_THROWS_AS(s.restrict(2000, 1990), DataError);
}
