// cetseg: changepoint analysis of annual temperature series.
//
//   cetseg fit       --input FILE [--model M --errors E --penalty P ...]
//   cetseg compare   --input FILE
//   cetseg residuals --input FILE --model M ...
//   cetseg simulate  --n N --change-years ... --intercepts ... --slopes ...

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cetseg/analysis.hpp"

namespace {

struct Options {
    std::string input;
    std::string format = "hadcet";
    std::optional<int> from;
    std::optional<int> to;
    std::string model = "trend-shift";
    std::string errors = "wn";
    std::string penalty = "bic";
    int ar_order = 0;
    std::optional<std::uint64_t> seed;
    std::size_t population = 200;
    std::size_t generations = 20000;
    std::size_t stagnation = 1000;
    std::size_t workers = 1;
    std::optional<std::size_t> max_m;
    std::optional<double> sigma2;
    double joinpin_penalty = 3.0;
    std::string output = "json";
    std::optional<std::string> out;
    std::optional<std::string> plot;

    // simulate
    std::size_t n = 100;
    int first_year = 1;
    std::vector<int> change_years;
    std::vector<double> intercepts{0.0};
    std::vector<double> slopes;
    double phi = 0.0;
    double sigma = 1.0;
};

void add_data_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--input", o.input, "Input data file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--format", o.format, "Input format: hadcet | csv")->check(CLI::IsMember({"hadcet", "csv"}));
    cmd->add_option("--from", o.from, "First calendar year to analyse");
    cmd->add_option("--to", o.to, "Last calendar year to analyse");
    cmd->add_option("--seed", o.seed, "GA seed (default: $CETSEG_SEED or built-in)");
    cmd->add_option("--population", o.population, "GA population size");
    cmd->add_option("--generations", o.generations, "GA maximum generations");
    cmd->add_option("--stagnation", o.stagnation, "Generations without improvement before stopping");
    cmd->add_option("--workers", o.workers, "Concurrent fitness evaluations per generation");
    cmd->add_option("--max-m", o.max_m, "Maximum number of changepoints");
    cmd->add_option("--sigma2", o.sigma2, "Fixed error variance for the joinpin model");
    cmd->add_option("--joinpin-penalty", o.joinpin_penalty, "Joinpin penalty per changepoint, in units of log N");
    cmd->add_option("--out", o.out, "Write results to this file instead of standard output");
}

void add_model_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--model", o.model,
                    "mean-shift | trend-shift | fixed-slope | variance-shift | joinpin | long-memory")
        ->check(CLI::IsMember({"mean-shift", "trend-shift", "fixed-slope", "variance-shift", "joinpin", "joinpoint",
                               "long-memory"}));
    cmd->add_option("--errors", o.errors, "Error model: wn | ar1")->check(CLI::IsMember({"wn", "ar1"}));
    cmd->add_option("--penalty", o.penalty, "Penalty: bic | mdl")->check(CLI::IsMember({"bic", "mdl"}));
    cmd->add_option("--ar-order", o.ar_order, "Long-memory AR order (0 or 1)")->check(CLI::Range(0, 1));
}

cetseg::AnalysisRequest to_request(cetseg::Command command, const Options& o) {
    cetseg::AnalysisRequest req;
    req.command = command;
    req.input_path = o.input;
    req.format = cetseg::parse_input_format(o.format);
    req.from = o.from;
    req.to = o.to;
    req.model.spec = {cetseg::parse_mean_structure(o.model), cetseg::parse_error_model(o.errors),
                      cetseg::parse_penalty(o.penalty)};
    req.model.ar_order = o.ar_order;
    req.ga.seed = o.seed.value_or(cetseg::default_seed());
    req.ga.population_size = o.population;
    req.ga.max_generations = o.generations;
    req.ga.stagnation_limit = o.stagnation;
    req.ga.workers = o.workers;
    req.max_m = o.max_m;
    req.joinpin_sigma2 = o.sigma2;
    req.joinpin_penalty_factor = o.joinpin_penalty;
    req.output = cetseg::parse_output_format(o.output);
    req.out_path = o.out;
    req.plot_path = o.plot;
    return req;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiple changepoint detection for annual temperature series"};
    app.require_subcommand(1);
    Options o;

    auto* fit = app.add_subcommand("fit", "Fit one changepoint model");
    add_data_options(fit, o);
    add_model_options(fit, o);
    fit->add_option("--output-format", o.output, "json | csv | table")->check(CLI::IsMember({"json", "csv", "table"}));
    fit->add_option("--plot", o.plot, "Write an SVG plot of the fit");

    auto* compare = app.add_subcommand("compare", "Fit and compare the full set of models");
    add_data_options(compare, o);
    compare->add_option("--output-format", o.output, "json | csv | table")
        ->check(CLI::IsMember({"json", "csv", "table"}));

    auto* residuals = app.add_subcommand("residuals", "Emit observed, fitted and residual values of a fit");
    add_data_options(residuals, o);
    add_model_options(residuals, o);

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic series as CSV");
    simulate->add_option("--n", o.n, "Series length")->check(CLI::PositiveNumber);
    simulate->add_option("--first-year", o.first_year, "Calendar year of the first observation");
    simulate->add_option("--change-years", o.change_years, "First year of each new regime")->delimiter(',');
    simulate->add_option("--intercepts", o.intercepts, "Per-regime intercepts")->delimiter(',');
    simulate->add_option("--slopes", o.slopes, "Per-regime slopes (default 0)")->delimiter(',');
    simulate->add_option("--errors", o.errors, "wn | ar1")->check(CLI::IsMember({"wn", "ar1"}));
    simulate->add_option("--phi", o.phi, "AR(1) coefficient");
    simulate->add_option("--sigma", o.sigma, "Innovation standard deviation");
    simulate->add_option("--seed", o.seed, "Random seed");
    simulate->add_option("--out", o.out, "Output CSV path");

    CLI11_PARSE(app, argc, argv);

    cetseg::AnalysisRequest req;
    try {
        if (fit->parsed()) {
            req = to_request(cetseg::Command::Fit, o);
        } else if (compare->parsed()) {
            req = to_request(cetseg::Command::Compare, o);
            if (o.output == "json" && compare->count("--output-format") == 0) req.output = cetseg::OutputFormat::Table;
        } else if (residuals->parsed()) {
            req = to_request(cetseg::Command::Residuals, o);
        } else {
            req.command = cetseg::Command::Simulate;
            req.out_path = o.out;
            auto& sim = req.simulation;
            sim.n = o.n;
            sim.first_year = o.first_year;
            for (int y : o.change_years) {
                if (y <= o.first_year || y >= o.first_year + static_cast<int>(o.n)) {
                    throw std::invalid_argument("change year " + std::to_string(y) + " outside simulated span");
                }
                sim.taus.push_back(static_cast<std::size_t>(y - o.first_year));
            }
            const std::size_t regimes = sim.taus.size() + 1;
            if (o.intercepts.size() != regimes) throw std::invalid_argument("need one intercept per regime");
            if (!o.slopes.empty() && o.slopes.size() != regimes) throw std::invalid_argument("need one slope per regime");
            for (std::size_t k = 0; k < regimes; ++k) {
                sim.regimes.push_back({o.intercepts[k], o.slopes.empty() ? 0.0 : o.slopes[k]});
            }
            sim.error_model = cetseg::parse_error_model(o.errors);
            sim.phi = o.phi;
            sim.sigma = o.sigma;
            sim.seed = o.seed.value_or(cetseg::default_seed());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cetseg::kExitUsage;
    }
    return cetseg::run_analysis(req, std::cout, std::cerr);
}
