#pragma once

// End-to-end analyses behind the command-line tool: fitting one model,
// the full model comparison, residual export and simulation. Results are
// rendered as JSON, CSV or a plain-text table.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cetseg/core.hpp"
#include "cetseg/estimation.hpp"
#include "cetseg/io.hpp"
#include "cetseg/joinpin.hpp"
#include "cetseg/longmemory.hpp"
#include "cetseg/penalties.hpp"
#include "cetseg/plot.hpp"
#include "cetseg/search.hpp"
#include "cetseg/simulate.hpp"

namespace cetseg {

enum class Command { Fit, Compare, Residuals, Simulate };
enum class OutputFormat { Json, Csv, Table };

inline OutputFormat parse_output_format(std::string_view s) {
    if (s == "json") return OutputFormat::Json;
    if (s == "csv") return OutputFormat::Csv;
    if (s == "table") return OutputFormat::Table;
    throw std::invalid_argument("unknown output format '" + std::string(s) + "'");
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitInfeasible = 3;

inline constexpr std::uint64_t kDefaultSeed = 20211;

/// CETSEG_SEED overrides the built-in default seed.
inline std::uint64_t default_seed() {
    if (const char* env = std::getenv("CETSEG_SEED"); env && *env) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("CETSEG_SEED is not an unsigned integer: ") + env);
        }
    }
    return kDefaultSeed;
}

/// What to fit. `ar_order` applies to the long-memory model only.
struct ModelChoice {
    ModelSpec spec;
    int ar_order = 0;
};

struct AnalysisRequest {
    Command command = Command::Fit;
    std::string input_path;
    InputFormat format = InputFormat::HadCET;
    std::optional<int> from;
    std::optional<int> to;
    ModelChoice model;
    GAParams ga;
    std::optional<std::size_t> max_m;
    std::optional<double> joinpin_sigma2;
    double joinpin_penalty_factor = 3.0;  // per-changepoint penalty in units of log N
    OutputFormat output = OutputFormat::Json;
    std::optional<std::string> out_path;
    std::optional<std::string> plot_path;
    SimSpec simulation;  // simulate command only
};

struct SegmentReport {
    int start_year;
    int end_year;
    double intercept;
    double slope;
    std::optional<double> variance;
};

/// One fitted model in reporting form.
struct ModelReport {
    ModelChoice model;
    ChangepointConfiguration config;
    std::vector<int> changepoint_years;
    std::vector<SegmentReport> segments;
    std::optional<double> phi_hat;
    double sigma2_hat = 0.0;
    double neg2loglik = 0.0;
    double penalty_value = 0.0;
    double score = 0.0;
    std::uint64_t seed = 0;
    std::optional<GAParams> ga;
    std::size_t generations_run = 0;
    std::size_t evaluations = 0;
    std::optional<double> fixed_sigma2;       // joinpin
    std::optional<double> fractional_d;       // long memory
    std::optional<bool> d_at_boundary;        // long memory
    TimeSeries plotted{0, {0.0}};             // series the fit describes
    std::vector<double> fitted;
    bool continuous = false;

    double loglik() const { return -0.5 * neg2loglik; }
};

namespace detail {

inline std::vector<SegmentReport> segments_of(const TimeSeries& series, const ChangepointConfiguration& config,
                                              std::span<const RegimeParams> params,
                                              std::span<const double> variances = {}) {
    std::vector<SegmentReport> out;
    for (std::size_t k = 0; k < config.regime_count(); ++k) {
        const auto r = config.regime(k);
        SegmentReport s{series.year_of(r.first), series.year_of(r.last), params[k].intercept, params[k].slope,
                        std::nullopt};
        if (!variances.empty()) s.variance = variances[k];
        out.push_back(s);
    }
    return out;
}

inline ModelReport from_fit(const TimeSeries& series, const FitResult& fit, const SearchReport& search,
                            const GAParams& ga) {
    ModelReport r;
    r.model = {fit.spec, 0};
    r.config = fit.config;
    r.changepoint_years = changepoint_years(fit.config, series);
    r.segments = segments_of(series, fit.config, fit.regime_params, fit.regime_variances);
    r.phi_hat = fit.phi_hat;
    r.sigma2_hat = fit.sigma2_hat;
    r.neg2loglik = fit.neg2loglik;
    r.penalty_value = fit.penalty_value;
    r.score = fit.score;
    r.seed = ga.seed;
    r.ga = ga;
    r.generations_run = search.generations_run;
    r.evaluations = search.evaluations;
    r.plotted = series;
    r.fitted = fit.spec.mean_structure == MeanStructure::VarianceShift
                   ? std::vector<double>(series.size(), 0.0)
                   : fitted_mean(fit.config, fit.regime_params);
    return r;
}

}  // namespace detail

/// Trend-shift white-noise fit used to seed the joinpin variance and the
/// variance-shift residuals.
inline SearchReport trend_shift_wn(const TimeSeries& series, Penalty penalty, const GAParams& ga,
                                   std::optional<std::size_t> max_m) {
    return ga_optimize(series, {MeanStructure::TrendShift, ErrorModel::WhiteNoise, penalty}, ga,
                       max_m.value_or(std::numeric_limits<std::size_t>::max()));
}

/// Fits one model to the series with the GA (or closed form for long memory).
inline ModelReport fit_model(const TimeSeries& series, const ModelChoice& choice, const GAParams& ga,
                             std::optional<std::size_t> max_m = std::nullopt,
                             std::optional<double> joinpin_sigma2 = std::nullopt,
                             double joinpin_penalty_factor = 3.0) {
    const auto& spec = choice.spec;
    spec.validate();
    const std::size_t cap = max_m.value_or(std::numeric_limits<std::size_t>::max());

    switch (spec.mean_structure) {
        case MeanStructure::LongMemory: {
            const auto fit = fit_arfima(series, choice.ar_order);
            ModelReport r;
            r.model = choice;
            r.config = ChangepointConfiguration::none(series.size());
            r.segments = {{series.first_year(), series.last_year(), fit.mu, 0.0, std::nullopt}};
            r.phi_hat = fit.phi;
            r.sigma2_hat = fit.sigma2;
            r.neg2loglik = fit.neg2loglik;
            r.penalty_value = fit.penalty_value;
            r.score = fit.bic_score;
            r.seed = ga.seed;
            r.fractional_d = fit.d;
            r.d_at_boundary = fit.d_at_boundary;
            r.plotted = series;
            r.fitted.assign(series.size(), fit.mu);
            r.continuous = true;
            return r;
        }
        case MeanStructure::Joinpoint: {
            const double sigma2 = joinpin_sigma2 ? *joinpin_sigma2
                                                 : trend_shift_wn(series, Penalty::BIC, ga, max_m).best.sigma2_hat;
            const double per_cp = joinpin_penalty_factor * std::log(static_cast<double>(series.size()));
            const auto search = joinpin_search(series, sigma2, cap, ga, per_cp);
            const auto& fit = search.best;
            ModelReport r;
            r.model = choice;
            r.config = fit.config;
            r.changepoint_years = changepoint_years(fit.config, series);
            r.segments = detail::segments_of(series, fit.config, fit.regime_params);
            r.sigma2_hat = sigma2;
            r.neg2loglik = fit.neg2loglik;
            r.penalty_value = fit.penalty_value;
            r.score = fit.bic_score;
            r.seed = ga.seed;
            r.ga = ga;
            r.generations_run = search.generations_run;
            r.evaluations = search.evaluations;
            r.fixed_sigma2 = sigma2;
            r.plotted = series;
            r.fitted = fit.fitted;
            r.continuous = true;
            return r;
        }
        case MeanStructure::VarianceShift: {
            // Variance shifts are sought in the residuals of the trend-shift fit.
            const auto base = trend_shift_wn(series, spec.penalty, ga, max_m).best;
            const auto d = detrend(series.values(), fitted_mean(base.config, base.regime_params));
            const TimeSeries residuals(series.first_year(), d.values);
            const auto search = ga_optimize(residuals, spec, ga, cap);
            return detail::from_fit(residuals, search.best, search, ga);
        }
        default: {
            const auto search = ga_optimize(series, spec, ga, cap);
            return detail::from_fit(series, search.best, search, ga);
        }
    }
}

/// The full comparison table: mean shifts + AR(1) (BIC, MDL), trend shifts +
/// AR(1) (BIC, MDL), trend shifts + WN (BIC, MDL), fixed slope + AR(1) (BIC,
/// MDL), joinpin (BIC) and long memory with and without an AR(1) term.
inline std::vector<ModelReport> compare_models(const TimeSeries& series, const GAParams& ga,
                                               std::optional<std::size_t> max_m = std::nullopt,
                                               std::optional<double> joinpin_sigma2 = std::nullopt,
                                               double joinpin_penalty_factor = 3.0) {
    using MS = MeanStructure;
    using EM = ErrorModel;
    std::vector<ModelReport> rows;
    for (auto [ms, em] : {std::pair{MS::MeanShift, EM::AR1}, std::pair{MS::TrendShift, EM::AR1},
                          std::pair{MS::TrendShift, EM::WhiteNoise}, std::pair{MS::FixedSlope, EM::AR1}}) {
        for (auto pen : {Penalty::BIC, Penalty::MDL}) {
            rows.push_back(fit_model(series, {{ms, em, pen}, 0}, ga, max_m));
        }
    }
    const double sigma2 = joinpin_sigma2.value_or(rows[4].sigma2_hat);  // trend shifts + WN, BIC
    rows.push_back(fit_model(series, {{MS::Joinpoint, EM::WhiteNoise, Penalty::BIC}, 0}, ga, max_m, sigma2,
                             joinpin_penalty_factor));
    rows.push_back(fit_model(series, {{MS::LongMemory, EM::AR1, Penalty::BIC}, 1}, ga));
    rows.push_back(fit_model(series, {{MS::LongMemory, EM::WhiteNoise, Penalty::BIC}, 0}, ga));
    return rows;
}

inline nlohmann::ordered_json ga_to_json(const GAParams& ga) {
    return {{"population_size", ga.population_size}, {"max_generations", ga.max_generations},
            {"stagnation_limit", ga.stagnation_limit}, {"crossover_prob", ga.crossover_prob},
            {"mutation_rate", ga.mutation_rate},     {"shift_prob", ga.shift_prob},
            {"elite_fraction", ga.elite_fraction},   {"immigrant_fraction", ga.immigrant_fraction},
            {"seed", ga.seed}};
}

inline nlohmann::ordered_json to_json(const ModelReport& r) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["model"] = std::string(to_string(r.model.spec.mean_structure));
    j["errors"] = std::string(to_string(r.model.spec.error_model));
    j["penalty"] = std::string(to_string(r.model.spec.penalty));
    if (r.model.spec.mean_structure == MeanStructure::LongMemory) j["ar_order"] = r.model.ar_order;
    j["n"] = r.plotted.size();
    j["first_year"] = r.plotted.first_year();
    j["last_year"] = r.plotted.last_year();
    j["changepoint_years"] = r.changepoint_years;
    ordered_json segs = ordered_json::array();
    for (const auto& s : r.segments) {
        ordered_json seg{{"start_year", s.start_year}, {"end_year", s.end_year}, {"intercept", s.intercept},
                         {"slope", s.slope}};
        if (s.variance) seg["variance"] = *s.variance;
        segs.push_back(std::move(seg));
    }
    j["segments"] = std::move(segs);
    j["phi_hat"] = r.phi_hat ? ordered_json(*r.phi_hat) : ordered_json(nullptr);
    j["sigma2_hat"] = r.sigma2_hat;
    if (r.fractional_d) {
        j["d"] = *r.fractional_d;
        j["d_at_boundary"] = r.d_at_boundary.value_or(false);
    }
    j["loglik"] = r.loglik();
    j["neg2loglik"] = r.neg2loglik;
    j["penalty_value"] = r.penalty_value;
    j["score"] = r.score;
    j["seed"] = r.seed;
    j["ga_params"] = r.ga ? ga_to_json(*r.ga) : ordered_json(nullptr);
    j["generations_run"] = r.generations_run;
    j["evaluations"] = r.evaluations;
    return j;
}

inline std::string label_of(const ModelReport& r) {
    const auto& s = r.model.spec;
    switch (s.mean_structure) {
        case MeanStructure::MeanShift: return std::string("Mean shifts+") + (s.error_model == ErrorModel::AR1 ? "AR(1)" : "WN");
        case MeanStructure::TrendShift: return std::string("Trend shifts+") + (s.error_model == ErrorModel::AR1 ? "AR(1)" : "WN");
        case MeanStructure::FixedSlope: return std::string("Mean shifts+fixed slope+") + (s.error_model == ErrorModel::AR1 ? "AR(1)" : "WN");
        case MeanStructure::VarianceShift: return "Variance shifts";
        case MeanStructure::Joinpoint: return "Joinpin";
        case MeanStructure::LongMemory: return r.model.ar_order == 1 ? "Long memory+AR(1)" : "Long memory";
    }
    return "?";
}

inline std::string years_text(const std::vector<int>& years) {
    if (years.empty()) return "NA";
    std::string s;
    for (std::size_t i = 0; i < years.size(); ++i) s += (i ? "," : "") + std::to_string(years[i]);
    return s;
}

inline std::string render_table(const std::vector<ModelReport>& rows) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-32s %-7s %-40s %12s %12s\n", "Model", "Penalty", "Flagged changepoints",
                  "Log-lik", "Score");
    out += buf;
    out += std::string(107, '-') + "\n";
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-32s %-7s %-40s %12.2f %12.2f\n", label_of(r).c_str(),
                      r.model.spec.penalty == Penalty::BIC ? "BIC" : "MDL", years_text(r.changepoint_years).c_str(),
                      r.loglik(), r.score);
        out += buf;
    }
    return out;
}

inline std::string render_rows_csv(const std::vector<ModelReport>& rows) {
    std::string out = "model,errors,penalty,changepoint_years,loglik,penalty_value,score\n";
    for (const auto& r : rows) {
        std::string years = years_text(r.changepoint_years);
        for (auto& c : years) {
            if (c == ',') c = ';';
        }
        out += std::string(to_string(r.model.spec.mean_structure)) + "," + std::string(to_string(r.model.spec.error_model)) +
               "," + std::string(to_string(r.model.spec.penalty)) + "," + years + "," + format_double(r.loglik()) +
               "," + format_double(r.penalty_value) + "," + format_double(r.score) + "\n";
    }
    return out;
}

inline PlotFit plot_fit_of(const ModelReport& r) {
    return {r.config, r.fitted, r.continuous, label_of(r) + " (" + std::string(r.model.spec.penalty == Penalty::BIC ? "BIC" : "MDL") + ")"};
}

namespace detail {

inline void write_output(const std::string& text, const std::optional<std::string>& path, std::ostream& out) {
    if (!path) {
        out << text;
        return;
    }
    std::ofstream f(*path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + *path + "'");
    f << text;
}

inline TimeSeries load_request_series(const AnalysisRequest& req, std::ostream& err) {
    auto parsed = load_series(req.input_path, req.format);
    for (const auto& w : parsed.warnings) err << "warning: " << w << "\n";
    const int from = req.from.value_or(parsed.series.first_year());
    const int to = req.to.value_or(parsed.series.last_year());
    return parsed.series.restrict(from, to);
}

}  // namespace detail

/// Executes one request. Returns the process exit code: 0 on success, 2 for
/// data errors, 3 when the model cannot be fitted under its constraints.
inline int run_analysis(const AnalysisRequest& req, std::ostream& out, std::ostream& err) {
    try {
        switch (req.command) {
            case Command::Simulate: {
                const auto series = simulate_series(req.simulation);
                detail::write_output(write_csv(series), req.out_path, out);
                return kExitOk;
            }
            case Command::Fit: {
                const auto series = detail::load_request_series(req, err);
                const auto report = fit_model(series, req.model, req.ga, req.max_m, req.joinpin_sigma2,
                                              req.joinpin_penalty_factor);
                std::string text;
                switch (req.output) {
                    case OutputFormat::Json: text = to_json(report).dump(2) + "\n"; break;
                    case OutputFormat::Csv: text = write_fitted_csv(report.plotted, report.fitted); break;
                    case OutputFormat::Table: text = render_table({report}); break;
                }
                detail::write_output(text, req.out_path, out);
                if (req.plot_path) emit_plot(report.plotted, plot_fit_of(report), *req.plot_path);
                return kExitOk;
            }
            case Command::Residuals: {
                const auto series = detail::load_request_series(req, err);
                const auto report = fit_model(series, req.model, req.ga, req.max_m, req.joinpin_sigma2,
                                              req.joinpin_penalty_factor);
                detail::write_output(write_fitted_csv(report.plotted, report.fitted), req.out_path, out);
                return kExitOk;
            }
            case Command::Compare: {
                const auto series = detail::load_request_series(req, err);
                const auto rows =
                    compare_models(series, req.ga, req.max_m, req.joinpin_sigma2, req.joinpin_penalty_factor);
                std::string text;
                switch (req.output) {
                    case OutputFormat::Json: {
                        nlohmann::ordered_json j = nlohmann::ordered_json::array();
                        for (const auto& r : rows) j.push_back(to_json(r));
                        text = j.dump(2) + "\n";
                        break;
                    }
                    case OutputFormat::Csv: text = render_rows_csv(rows); break;
                    case OutputFormat::Table: text = render_table(rows); break;
                }
                detail::write_output(text, req.out_path, out);
                return kExitOk;
            }
        }
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const InfeasibleModel& e) {
        err << "infeasible model: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const DegenerateFit& e) {
        err << "infeasible model: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace cetseg
