#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cetseg {

/// Bad or missing input data (maps to CLI exit code 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested model cannot be fitted under its segment-length constraints
/// (maps to CLI exit code 3).
class InfeasibleModel : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A fit collapsed to zero residual variance.
class DegenerateFit : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Annual observations indexed t = 1..N, where t = 1 is `first_year`.
class TimeSeries {
public:
    TimeSeries(int first_year, std::vector<double> values)
        : first_year_(first_year), values_(std::move(values)) {
        if (values_.empty()) {
            throw DataError("time series must contain at least one observation");
        }
    }

    int first_year() const noexcept { return first_year_; }
    int last_year() const noexcept { return first_year_ + static_cast<int>(values_.size()) - 1; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }

    /// Observation at 1-based index t.
    double at(std::size_t t) const {
        check_index(t);
        return values_[t - 1];
    }

    int year_of(std::size_t t) const {
        check_index(t);
        return first_year_ + static_cast<int>(t) - 1;
    }

    std::size_t index_of(int year) const {
        if (year < first_year_ || year > last_year()) {
            throw std::domain_error("year " + std::to_string(year) + " outside series span " +
                                    std::to_string(first_year_) + "-" + std::to_string(last_year()));
        }
        return static_cast<std::size_t>(year - first_year_) + 1;
    }

    /// Sub-series covering the calendar years [from, to].
    TimeSeries restrict(int from, int to) const {
        if (from > to) {
            throw DataError("year range is empty: " + std::to_string(from) + " > " + std::to_string(to));
        }
        if (from < first_year_ || to > last_year()) {
            throw DataError("year range " + std::to_string(from) + "-" + std::to_string(to) +
                            " outside data span " + std::to_string(first_year_) + "-" +
                            std::to_string(last_year()));
        }
        auto begin = values_.begin() + (from - first_year_);
        auto end = values_.begin() + (to - first_year_) + 1;
        return TimeSeries(from, std::vector<double>(begin, end));
    }

    bool operator==(const TimeSeries&) const = default;

private:
    void check_index(std::size_t t) const {
        if (t < 1 || t > values_.size()) {
            throw std::domain_error("index " + std::to_string(t) + " outside 1.." +
                                    std::to_string(values_.size()));
        }
    }

    int first_year_;
    std::vector<double> values_;
};

/// Inclusive 1-based index range of one regime.
struct Regime {
    std::size_t first;
    std::size_t last;

    std::size_t length() const noexcept { return last - first + 1; }
};

/// Changepoints tau_1 < ... < tau_m inside a series of length N. tau_i is the
/// last index of the old regime, so regime i covers tau_i + 1 .. tau_{i+1}
/// with tau_0 = 0 and tau_{m+1} = N.
class ChangepointConfiguration {
public:
    ChangepointConfiguration() = default;

    ChangepointConfiguration(std::size_t n, std::vector<std::size_t> taus)
        : n_(n), taus_(std::move(taus)) {
        if (n_ < 1) {
            throw std::domain_error("series length must be positive");
        }
        for (std::size_t i = 0; i < taus_.size(); ++i) {
            if (taus_[i] < 1 || taus_[i] >= n_) {
                throw std::domain_error("changepoint " + std::to_string(taus_[i]) +
                                        " outside 1.." + std::to_string(n_ - 1));
            }
            if (i > 0 && taus_[i] <= taus_[i - 1]) {
                throw std::domain_error("changepoints must be strictly increasing");
            }
        }
    }

    /// No changepoints.
    static ChangepointConfiguration none(std::size_t n) { return {n, {}}; }

    std::size_t series_length() const noexcept { return n_; }
    std::size_t count() const noexcept { return taus_.size(); }
    std::size_t regime_count() const noexcept { return taus_.size() + 1; }
    const std::vector<std::size_t>& taus() const noexcept { return taus_; }

    /// tau_i with the tau_0 = 0, tau_{m+1} = N convention.
    std::size_t boundary(std::size_t i) const {
        if (i == 0) return 0;
        if (i == taus_.size() + 1) return n_;
        if (i > taus_.size() + 1) throw std::out_of_range("boundary index out of range");
        return taus_[i - 1];
    }

    Regime regime(std::size_t k) const {
        if (k > taus_.size()) throw std::out_of_range("regime index out of range");
        return {boundary(k) + 1, boundary(k + 1)};
    }

    std::vector<Regime> regimes() const {
        std::vector<Regime> out;
        out.reserve(regime_count());
        for (std::size_t k = 0; k < regime_count(); ++k) out.push_back(regime(k));
        return out;
    }

    std::size_t shortest_regime() const {
        std::size_t shortest = n_;
        for (std::size_t k = 0; k < regime_count(); ++k) {
            shortest = std::min(shortest, boundary(k + 1) - boundary(k));
        }
        return shortest;
    }

    /// Regime id r(t) in 0..m for 1-based t.
    std::size_t regime_index(std::size_t t) const {
        if (t < 1 || t > n_) {
            throw std::domain_error("index " + std::to_string(t) + " outside 1.." + std::to_string(n_));
        }
        auto it = std::lower_bound(taus_.begin(), taus_.end(), t);
        return static_cast<std::size_t>(it - taus_.begin());
    }

    bool operator==(const ChangepointConfiguration&) const = default;

    /// Report ordering: fewer changepoints first, then lexicographic taus.
    friend bool precedes(const ChangepointConfiguration& a, const ChangepointConfiguration& b) {
        if (a.count() != b.count()) return a.count() < b.count();
        return a.taus_ < b.taus_;
    }

private:
    std::size_t n_ = 1;
    std::vector<std::size_t> taus_;
};

inline std::size_t regime_index(std::size_t t, const ChangepointConfiguration& config) {
    return config.regime_index(t);
}

/// Calendar years flagged by a configuration: the first year of each new regime.
inline std::vector<int> changepoint_years(const ChangepointConfiguration& config, const TimeSeries& series) {
    std::vector<int> years;
    years.reserve(config.count());
    for (auto tau : config.taus()) years.push_back(series.first_year() + static_cast<int>(tau));
    return years;
}

/// Inverse of changepoint_years.
inline ChangepointConfiguration config_from_years(const TimeSeries& series, std::span<const int> years) {
    std::vector<std::size_t> taus;
    taus.reserve(years.size());
    for (int y : years) {
        if (y <= series.first_year() || y > series.last_year()) {
            throw std::domain_error("changepoint year " + std::to_string(y) + " cannot start a new regime");
        }
        taus.push_back(static_cast<std::size_t>(y - series.first_year()));
    }
    return {series.size(), std::move(taus)};
}

enum class MeanStructure { MeanShift, TrendShift, FixedSlope, VarianceShift, Joinpoint, LongMemory };
enum class ErrorModel { WhiteNoise, AR1 };
enum class Penalty { BIC, MDL };

struct ModelSpec {
    MeanStructure mean_structure = MeanStructure::MeanShift;
    ErrorModel error_model = ErrorModel::AR1;
    Penalty penalty = Penalty::BIC;

    void validate() const {
        if ((mean_structure == MeanStructure::Joinpoint || mean_structure == MeanStructure::LongMemory) &&
            penalty != Penalty::BIC) {
            throw std::domain_error("joinpoint and long-memory models support the BIC penalty only");
        }
        if (mean_structure == MeanStructure::VarianceShift && error_model != ErrorModel::WhiteNoise) {
            throw std::domain_error("variance-shift model assumes independent errors");
        }
        if (mean_structure == MeanStructure::Joinpoint && error_model != ErrorModel::WhiteNoise) {
            throw std::domain_error("joinpoint model assumes independent errors");
        }
    }

    bool operator==(const ModelSpec&) const = default;
};

/// Shortest admissible regime for each changepoint model family.
inline std::size_t min_segment_length(MeanStructure s) {
    switch (s) {
        case MeanStructure::MeanShift: return 1;
        case MeanStructure::TrendShift: return 3;
        case MeanStructure::FixedSlope: return 2;
        case MeanStructure::VarianceShift: return 2;
        case MeanStructure::Joinpoint: return 2;
        case MeanStructure::LongMemory: break;
    }
    throw std::domain_error("long-memory model has no changepoints");
}

inline std::string_view to_string(MeanStructure s) {
    switch (s) {
        case MeanStructure::MeanShift: return "mean-shift";
        case MeanStructure::TrendShift: return "trend-shift";
        case MeanStructure::FixedSlope: return "fixed-slope";
        case MeanStructure::VarianceShift: return "variance-shift";
        case MeanStructure::Joinpoint: return "joinpin";
        case MeanStructure::LongMemory: return "long-memory";
    }
    return "?";
}

inline std::string_view to_string(ErrorModel e) { return e == ErrorModel::AR1 ? "ar1" : "wn"; }
inline std::string_view to_string(Penalty p) { return p == Penalty::BIC ? "bic" : "mdl"; }

inline MeanStructure parse_mean_structure(std::string_view s) {
    for (auto m : {MeanStructure::MeanShift, MeanStructure::TrendShift, MeanStructure::FixedSlope,
                   MeanStructure::VarianceShift, MeanStructure::Joinpoint, MeanStructure::LongMemory}) {
        if (s == to_string(m)) return m;
    }
    if (s == "joinpoint") return MeanStructure::Joinpoint;
    throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

inline ErrorModel parse_error_model(std::string_view s) {
    if (s == "wn") return ErrorModel::WhiteNoise;
    if (s == "ar1") return ErrorModel::AR1;
    throw std::invalid_argument("unknown error model '" + std::string(s) + "'");
}

inline Penalty parse_penalty(std::string_view s) {
    if (s == "bic") return Penalty::BIC;
    if (s == "mdl") return Penalty::MDL;
    throw std::invalid_argument("unknown penalty '" + std::string(s) + "'");
}

/// Per-regime regression coefficients; the fitted mean in regime k is
/// intercept + slope * t with t the global index.
struct RegimeParams {
    double intercept = 0.0;
    double slope = 0.0;

    bool operator==(const RegimeParams&) const = default;
};

struct FitResult {
    ModelSpec spec;
    ChangepointConfiguration config;
    std::vector<RegimeParams> regime_params;
    std::vector<double> regime_variances;  // variance-shift model only
    std::optional<double> phi_hat;         // AR(1) errors only
    double sigma2_hat = 0.0;
    double neg2loglik = 0.0;
    double penalty_value = 0.0;
    double score = 0.0;

    double loglik() const noexcept { return -0.5 * neg2loglik; }
};

}  // namespace cetseg
