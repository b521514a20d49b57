#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "cetseg/core.hpp"

namespace cetseg {

struct PenaltyContext {
    ModelSpec spec;
    std::size_t n = 0;
    ChangepointConfiguration config;
    /// Joinpoint only: penalty charged per changepoint. Defaults to 3 log N.
    std::optional<double> joinpoint_per_changepoint;
};

namespace detail {

// Parameter counts charged at log N each by BIC: regression coefficients,
// error parameters, and one location per changepoint.
inline double bic_multiplier(const ModelSpec& spec, double m) {
    const bool ar1 = spec.error_model == ErrorModel::AR1;
    switch (spec.mean_structure) {
        case MeanStructure::MeanShift: return 2 * m + (ar1 ? 3 : 2);
        case MeanStructure::TrendShift: return 3 * m + (ar1 ? 4 : 3);
        case MeanStructure::FixedSlope: return 2 * m + (ar1 ? 4 : 3);
        case MeanStructure::VarianceShift: return 2 * m + 1;
        default: break;
    }
    throw std::domain_error("no BIC parameter count for model " + std::string(to_string(spec.mean_structure)));
}

// MDL terms: multiples of log N, weight on log segment lengths.
struct MdlShape {
    double log_n_multiple;
    double length_weight;
};

inline MdlShape mdl_shape(const ModelSpec& spec) {
    const bool ar1 = spec.error_model == ErrorModel::AR1;
    switch (spec.mean_structure) {
        case MeanStructure::MeanShift: return {ar1 ? 2.0 : 1.0, 1.0};
        case MeanStructure::TrendShift: return {ar1 ? 2.0 : 1.0, 2.0};
        case MeanStructure::FixedSlope: return {ar1 ? 3.0 : 2.0, 1.0};
        case MeanStructure::VarianceShift: return {0.0, 1.0};
        default: break;
    }
    throw std::domain_error("no MDL penalty for model " + std::string(to_string(spec.mean_structure)));
}

}  // namespace detail

/// Complexity penalty P(m; tau_1..tau_m), natural logarithms throughout.
/// Every MDL penalty is zero when m = 0.
inline double penalty_value(const PenaltyContext& ctx) {
    if (ctx.config.series_length() != ctx.n) {
        throw std::domain_error("penalty context: configuration does not match series length");
    }
    const double log_n = std::log(static_cast<double>(ctx.n));
    const double m = static_cast<double>(ctx.config.count());
    const auto& spec = ctx.spec;

    if (spec.mean_structure == MeanStructure::Joinpoint) {
        if (spec.penalty != Penalty::BIC) throw std::domain_error("joinpoint model supports BIC only");
        return ctx.joinpoint_per_changepoint.value_or(3.0 * log_n) * m;
    }
    if (spec.mean_structure == MeanStructure::LongMemory) {
        throw std::domain_error("long-memory penalties are computed by the ARFIMA fit");
    }

    if (spec.penalty == Penalty::BIC) return detail::bic_multiplier(spec, m) * log_n;

    const auto shape = detail::mdl_shape(spec);
    if (ctx.config.count() == 0) return 0.0;
    double lengths = 0.0;
    for (const auto& r : ctx.config.regimes()) lengths += std::log(static_cast<double>(r.length()));
    double locations = 0.0;
    const auto& taus = ctx.config.taus();
    for (std::size_t i = 1; i < taus.size(); ++i) locations += std::log(static_cast<double>(taus[i]));
    return shape.log_n_multiple * log_n + 2.0 * std::log(m) + shape.length_weight * lengths + 2.0 * locations;
}

inline double penalized_score(double neg2loglik, const PenaltyContext& ctx) {
    return neg2loglik + penalty_value(ctx);
}

}  // namespace cetseg
