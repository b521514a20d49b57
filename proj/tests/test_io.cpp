#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "cetseg/io.hpp"

using namespace cetseg;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

std::string hadcet_row(int year, double annual, double month = 5.0) {
    std::ostringstream os;
    os << year;
    for (int m = 0; m < 12; ++m) os << "  " << month;
    os << "  " << annual << "\n";
    return os.str();
}

std::string hadcet_header() {
    return "Monthly Central England Temperature (degrees C)\n"
           "1659-1973 Manley (Q.J.R.METEOROL.SOC., 1974)\n"
           "YEAR   JAN   FEB   MAR   APR   MAY   JUN   JUL   AUG   SEP   OCT   NOV   DEC   YEAR\n";
}

std::string error_of(const std::string& text, bool csv) {
    try {
        csv ? parse_csv(text) : parse_hadcet(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("HadCET rows take the last field as the annual mean", "[io]") {
    const auto parsed = parse_hadcet(hadcet_header() + "1659  3.0  4.0  6.0  7.0 11.0 13.0 16.0 16.0 13.0 10.0  5.0  2.0  9.7\n" +
                                     hadcet_row(1660, 9.1));
    CHECK(parsed.series.first_year() == 1659);
    CHECK(parsed.series.size() == 2);
    CHECK(parsed.series.at(1) == 9.7);
    CHECK(parsed.series.at(2) == 9.1);
    CHECK(parsed.warnings.empty());
}

TEST_CASE("incomplete trailing year is dropped with a warning", "[io]") {
    const auto parsed = parse_hadcet(hadcet_row(2019, 10.1) + hadcet_row(2020, 10.9) +
                                     "2021   4.4   5.7 -99.9 -99.9 -99.9 -99.9 -99.9 -99.9 -99.9 -99.9 -99.9 -99.9 -99.99\n");
    CHECK(parsed.series.size() == 2);
    CHECK(parsed.series.last_year() == 2020);
    REQUIRE(parsed.warnings.size() == 1);
    CHECK_THAT(parsed.warnings[0], ContainsSubstring("2021"));
}

TEST_CASE("HadCET errors name the offending line", "[io]") {
    const auto gap = error_of(hadcet_row(1700, 9.0) + hadcet_row(1702, 9.0), false);
    CHECK_THAT(gap, ContainsSubstring("line 2"));
    CHECK_THAT(gap, ContainsSubstring("1702"));

    const auto short_row = error_of(hadcet_header() + hadcet_row(1700, 9.0) + "1701 1 2 3\n", false);
    CHECK_THAT(short_row, ContainsSubstring("line 5"));

    const auto junk = error_of(hadcet_row(1700, 9.0) + "1701 1 2 3 4 5 6 7 8 9 10 11 x 9.0\n", false);
    CHECK_THAT(junk, ContainsSubstring("line 2"));

    const auto interior_missing = error_of(hadcet_row(1700, 9.0) + hadcet_row(1701, -99.99) + hadcet_row(1702, 9.0), false);
    CHECK_THAT(interior_missing, ContainsSubstring("line 2"));

    CHECK_THAT(error_of(hadcet_header(), false), ContainsSubstring("no observations"));
}

TEST_CASE("CSV input with and without header", "[io]") {
    const auto with = parse_csv("year,temp\n2000,9.1\n2001,9.3");
    CHECK(with.series.first_year() == 2000);
    CHECK(with.series.size() == 2);
    const auto without = parse_csv("2000,9.1\n2001,9.3\n");
    CHECK(with.series == without.series);

    CHECK_THAT(error_of("year,temp\n2000,9.1\n2000,9.3\n", true), ContainsSubstring("duplicate year"));
    CHECK_THAT(error_of("2000,9.1\n2002,9.3\n", true), ContainsSubstring("line 2"));
    CHECK_THAT(error_of("2000,9.1\n2001,warm\n", true), ContainsSubstring("line 2"));
    CHECK_THAT(error_of("2000,9.1,3\n", true), ContainsSubstring("line 1"));
}

TEST_CASE("CSV output round-trips exactly", "[io][property]") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(9.0, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 80)(rng);
        const int first = std::uniform_int_distribution<int>(-50, 2500)(rng);
        std::vector<double> x(n);
        for (auto& v : x) v = z(rng);
        const TimeSeries s(first, x);
        REQUIRE(parse_csv(write_csv(s)).series == s);
    }
}

TEST_CASE("a full-length record restricts to the 362-year study period", "[io]") {
    std::string text = hadcet_header();
    for (int year = 1659; year <= 2021; ++year) text += hadcet_row(year, year == 2021 ? -99.99 : 9.0 + 0.001 * (year - 1659));
    const auto parsed = parse_hadcet(text);
    CHECK(parsed.warnings.size() == 1);
    const auto study = parsed.series.restrict(1659, 2020);
    CHECK(study.size() == 362);
    CHECK_THAT(study.at(362), WithinAbs(9.361, 1e-12));
}

TEST_CASE("fitted CSV columns", "[io]") {
    const TimeSeries s(1990, {1.0, 2.0});
    const std::vector<double> fitted{0.5, 2.5};
    CHECK(write_fitted_csv(s, fitted) == "year,observed,fitted,residual\n1990,1,0.5,0.5\n1991,2,2.5,-0.5\n");
    CHECK_THROWS_AS(write_fitted_csv(s, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(read_text_file("/nonexistent/cet.txt"), DataError);
}
