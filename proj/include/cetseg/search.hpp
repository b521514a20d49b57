#pragma once

// Changepoint configuration search: full-pipeline evaluation of a single
// configuration, an exhaustive enumerator for short series, and a genetic
// algorithm over boundary-inclusion bitvectors.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cetseg/core.hpp"
#include "cetseg/estimation.hpp"
#include "cetseg/penalties.hpp"

namespace cetseg {

struct GAParams {
    std::size_t population_size = 200;
    std::size_t max_generations = 20000;
    std::size_t stagnation_limit = 1000;
    double crossover_prob = 0.8;
    double mutation_rate = 1.0;  // expected flipped loci per chromosome
    double shift_prob = 0.5;     // chance an offspring moves one boundary by up to kMaxShift
    double elite_fraction = 0.05;
    double immigrant_fraction = 0.05;  // offspring slots refilled with fresh random chromosomes
    std::uint64_t seed = 20211;
    std::size_t workers = 1;

    void validate() const {
        if (population_size < 2) throw std::invalid_argument("population_size must be at least 2");
        if (crossover_prob < 0.0 || crossover_prob > 1.0) throw std::invalid_argument("crossover_prob must lie in [0,1]");
        if (elite_fraction < 0.0 || elite_fraction > 1.0) throw std::invalid_argument("elite_fraction must lie in [0,1]");
        if (immigrant_fraction < 0.0 || immigrant_fraction > 1.0) {
            throw std::invalid_argument("immigrant_fraction must lie in [0,1]");
        }
        if (mutation_rate < 0.0) throw std::invalid_argument("mutation_rate must be non-negative");
        if (shift_prob < 0.0 || shift_prob > 1.0) throw std::invalid_argument("shift_prob must lie in [0,1]");
        if (max_generations < 1) throw std::invalid_argument("max_generations must be positive");
        if (workers < 1) throw std::invalid_argument("workers must be positive");
    }
};

template <class Fit>
struct BasicSearchReport {
    Fit best;
    std::vector<double> score_history;  // best score after each generation
    std::size_t generations_run = 0;
    std::size_t evaluations = 0;
    std::uint64_t seed = 0;
};

using SearchReport = BasicSearchReport<FitResult>;

/// Admissible configurations: every regime at least `min_segment` long and
/// at most `max_changepoints` boundaries.
struct SearchConstraints {
    std::size_t n = 0;
    std::size_t min_segment = 1;
    std::size_t max_changepoints = std::numeric_limits<std::size_t>::max();

    bool admits(const ChangepointConfiguration& c) const {
        return c.series_length() == n && c.count() <= max_changepoints && c.shortest_regime() >= min_segment;
    }
};

/// Runs the estimation pipeline for one configuration of a changepoint model.
/// The residual-variance floor used to detect degenerate fits is relative to
/// the series' own variance, so it is location and scale free.
class Evaluator {
public:
    Evaluator(const TimeSeries& series, ModelSpec spec) : x_(series.values()), spec_(spec) {
        spec_.validate();
        if (spec_.mean_structure == MeanStructure::Joinpoint || spec_.mean_structure == MeanStructure::LongMemory) {
            throw std::domain_error("model " + std::string(to_string(spec_.mean_structure)) +
                                    " is not evaluated by the changepoint pipeline");
        }
        double scale = 0.0;
        if (spec_.mean_structure == MeanStructure::VarianceShift) {
            for (double v : x_) scale += v * v;
        } else {
            const double mean = std::accumulate(x_.begin(), x_.end(), 0.0) / static_cast<double>(x_.size());
            for (double v : x_) scale += (v - mean) * (v - mean);
        }
        variance_floor_ = 1e-20 * scale / static_cast<double>(x_.size());
    }

    const ModelSpec& spec() const noexcept { return spec_; }
    std::size_t size() const noexcept { return x_.size(); }

    FitResult operator()(const ChangepointConfiguration& config) const {
        FitResult fit;
        fit.spec = spec_;
        fit.config = config;
        const std::size_t n = x_.size();

        if (spec_.mean_structure == MeanStructure::VarianceShift) {
            auto vfit = fit_variance_shift(x_, config);
            for (double v : vfit.regime_variances) {
                if (v <= variance_floor_) throw DegenerateFit("regime variance is zero; fit is degenerate");
            }
            fit.regime_params.assign(config.regime_count(), RegimeParams{});
            fit.regime_variances = std::move(vfit.regime_variances);
            fit.sigma2_hat = 0.0;
            for (double v : x_) fit.sigma2_hat += v * v;
            fit.sigma2_hat /= static_cast<double>(n);
            fit.neg2loglik = vfit.neg2loglik;
        } else {
            fit.regime_params = fit_regression(config);
            const auto f = fitted_mean(config, fit.regime_params);
            const auto d = detrend(x_, f);
            double phi = 0.0;
            if (spec_.error_model == ErrorModel::AR1) {
                phi = estimate_ar1(d.values);
                fit.phi_hat = phi;
            }
            fit.sigma2_hat = innovation_variance(d.values, phi);
            if (fit.sigma2_hat <= variance_floor_) {
                throw DegenerateFit("innovation variance is zero; fit is degenerate");
            }
            fit.neg2loglik = neg2_loglik(fit.sigma2_hat, n);
        }
        fit.penalty_value = penalty_value({spec_, n, config, std::nullopt});
        fit.score = fit.neg2loglik + fit.penalty_value;
        return fit;
    }

    /// Score, with degenerate fits mapped to +infinity.
    double score(const ChangepointConfiguration& config) const {
        try {
            return (*this)(config).score;
        } catch (const DegenerateFit&) {
            return std::numeric_limits<double>::infinity();
        }
    }

private:
    std::vector<RegimeParams> fit_regression(const ChangepointConfiguration& config) const {
        switch (spec_.mean_structure) {
            case MeanStructure::MeanShift: return fit_mean_shift(x_, config);
            case MeanStructure::TrendShift: return fit_trend_shift(x_, config);
            case MeanStructure::FixedSlope: return fit_fixed_slope(x_, config);
            default: break;
        }
        throw std::domain_error("no regression fit for this model");
    }

    std::span<const double> x_;
    ModelSpec spec_;
    double variance_floor_ = 0.0;
};

/// Full FitResult for one configuration. Invalid configurations throw.
inline FitResult evaluate(const TimeSeries& series, const ModelSpec& spec, const ChangepointConfiguration& config) {
    if (config.series_length() != series.size()) {
        throw std::domain_error("configuration does not match series length");
    }
    if (config.shortest_regime() < min_segment_length(spec.mean_structure)) {
        throw std::domain_error("configuration violates the minimum regime length of " +
                                std::to_string(min_segment_length(spec.mean_structure)));
    }
    return Evaluator(series, spec)(config);
}

// ---------------------------------------------------------------------------
// Generic search engine over configurations. Fitness is any callable mapping a
// configuration to a score (lower is better, +inf for unusable fits).

template <class F>
concept ConfigFitness = requires(const F& f, const ChangepointConfiguration& c) {
    { f(c) } -> std::convertible_to<double>;
};

struct SearchOutcome {
    ChangepointConfiguration config;
    double score = std::numeric_limits<double>::infinity();
    std::vector<double> score_history;
    std::size_t generations_run = 0;
    std::size_t evaluations = 0;
};

namespace detail {

/// (score, m, lexicographic taus) ordering used for every tie-break.
inline bool better(double score_a, const ChangepointConfiguration& a, double score_b,
                   const ChangepointConfiguration& b) {
    if (score_a != score_b) return score_a < score_b;
    return precedes(a, b);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent stream for one population slot of one generation.
inline std::mt19937_64 slot_stream(std::uint64_t seed, std::uint64_t generation, std::uint64_t slot) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ splitmix64(generation + 0x51ED2701ULL));
    h = splitmix64(h ^ splitmix64(slot + 0xA24BAED4ULL));
    return std::mt19937_64(h);
}

using Chromosome = std::vector<std::uint8_t>;  // locus j <=> tau = j + 1

inline ChangepointConfiguration decode(const Chromosome& c, std::size_t n) {
    std::vector<std::size_t> taus;
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (c[j]) taus.push_back(j + 1);
    }
    return {n, std::move(taus)};
}

inline Chromosome encode(const ChangepointConfiguration& c) {
    Chromosome out(c.series_length() - 1, 0);
    for (auto tau : c.taus()) out[tau - 1] = 1;
    return out;
}

inline constexpr std::size_t kMaxShift = 3;

/// Moves one randomly chosen boundary left or right by 1..kMaxShift loci.
inline void shift_boundary(Chromosome& c, std::mt19937_64& rng) {
    std::vector<std::size_t> set;
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (c[j]) set.push_back(j);
    }
    if (set.empty()) return;
    const std::size_t from = set[std::uniform_int_distribution<std::size_t>(0, set.size() - 1)(rng)];
    const auto step = static_cast<std::ptrdiff_t>(std::uniform_int_distribution<std::size_t>(1, kMaxShift)(rng));
    const std::ptrdiff_t to = static_cast<std::ptrdiff_t>(from) + (std::bernoulli_distribution(0.5)(rng) ? step : -step);
    if (to < 0 || to >= static_cast<std::ptrdiff_t>(c.size()) || c[static_cast<std::size_t>(to)]) return;
    c[from] = 0;
    c[static_cast<std::size_t>(to)] = 1;
}

inline std::string pack(const Chromosome& c) {
    std::string key((c.size() + 7) / 8, '\0');
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (c[j]) key[j / 8] = static_cast<char>(key[j / 8] | (1 << (j % 8)));
    }
    return key;
}

}  // namespace detail

/// Makes a chromosome admissible: scanning left to right, a boundary is kept
/// only if the regime it closes is long enough; then trailing boundaries are
/// removed until the final regime and the changepoint cap are satisfied.
inline void repair(std::vector<std::uint8_t>& chromosome, const SearchConstraints& cons) {
    std::vector<std::size_t> kept;
    std::size_t prev = 0;
    for (std::size_t j = 0; j < chromosome.size(); ++j) {
        if (!chromosome[j]) continue;
        const std::size_t tau = j + 1;
        if (tau - prev >= cons.min_segment) {
            kept.push_back(tau);
            prev = tau;
        } else {
            chromosome[j] = 0;
        }
    }
    while (!kept.empty() && (cons.n - kept.back() < cons.min_segment || kept.size() > cons.max_changepoints)) {
        chromosome[kept.back() - 1] = 0;
        kept.pop_back();
    }
}

/// Every admissible configuration of a short series, visited in increasing
/// (m, lexicographic taus) order.
inline void enumerate_configurations(const SearchConstraints& cons,
                                     const std::function<void(const ChangepointConfiguration&)>& visit) {
    std::vector<std::size_t> taus;
    // Extend `taus` with boundaries >= start until exactly `target` are placed.
    std::function<void(std::size_t, std::size_t)> place = [&](std::size_t start, std::size_t target) {
        if (taus.size() == target) {
            visit(ChangepointConfiguration(cons.n, taus));
            return;
        }
        const std::size_t remaining = target - taus.size();
        for (std::size_t tau = start; tau + remaining * cons.min_segment <= cons.n; ++tau) {
            taus.push_back(tau);
            place(tau + cons.min_segment, target);
            taus.pop_back();
        }
    };
    if (cons.n < cons.min_segment) return;
    const std::size_t max_m = std::min(cons.max_changepoints, cons.n / cons.min_segment - 1);
    for (std::size_t m = 0; m <= max_m; ++m) place(cons.min_segment, m);
}

inline constexpr std::size_t kExhaustiveLimit = 25;

template <ConfigFitness Fitness>
SearchOutcome exhaustive_search(const SearchConstraints& cons, const Fitness& fitness) {
    if (cons.n > kExhaustiveLimit) {
        throw std::domain_error("exhaustive search refused for N = " + std::to_string(cons.n) + " > " +
                                std::to_string(kExhaustiveLimit) + "; use the genetic algorithm");
    }
    if (cons.n < cons.min_segment) throw InfeasibleModel("series shorter than the minimum regime length");
    SearchOutcome out;
    bool have = false;
    enumerate_configurations(cons, [&](const ChangepointConfiguration& c) {
        const double s = fitness(c);
        ++out.evaluations;
        if (!have || detail::better(s, c, out.score, out.config)) {
            out.score = s;
            out.config = c;
            have = true;
        }
    });
    out.score_history = {out.score};
    out.generations_run = 0;
    return out;
}

/// Elitist genetic algorithm over inclusion bitvectors. Each offspring slot
/// draws from its own random stream derived from (seed, generation, slot), so
/// the trajectory does not depend on the number of evaluation workers.
template <ConfigFitness Fitness>
SearchOutcome genetic_search(const SearchConstraints& cons, const Fitness& fitness, const GAParams& params,
                             std::span<const ChangepointConfiguration> initial = {}) {
    using detail::Chromosome;
    params.validate();
    if (cons.n < 2 * cons.min_segment) {
        throw InfeasibleModel("series of length " + std::to_string(cons.n) +
                              " cannot hold two regimes of minimum length " + std::to_string(cons.min_segment));
    }
    const std::size_t loci = cons.n - 1;
    const std::size_t pop = params.population_size;
    const std::size_t elites = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(params.elite_fraction * static_cast<double>(pop))), 1, pop);
    const double flip_prob = std::min(1.0, params.mutation_rate / static_cast<double>(loci));
    const double init_prob = std::min(1.0, 3.0 / static_cast<double>(cons.n));
    const std::size_t immigrants = std::min(
        pop - elites, static_cast<std::size_t>(std::ceil(params.immigrant_fraction * static_cast<double>(pop))));

    // Density log-uniform on [1/N, 1], so both sparse and heavily segmented
    // configurations are proposed.
    auto random_genes = [&](std::mt19937_64& rng, double density) {
        if (density < 0.0) {
            const double lo = std::log(1.0 / static_cast<double>(cons.n));
            density = std::exp(std::uniform_real_distribution<double>(lo, 0.0)(rng));
        }
        std::bernoulli_distribution include(density);
        Chromosome genes(loci);
        for (auto& g : genes) g = include(rng) ? 1 : 0;
        return genes;
    };

    struct Individual {
        Chromosome genes;
        ChangepointConfiguration config;
        double score = std::numeric_limits<double>::infinity();
    };

    SearchOutcome out;
    std::unordered_map<std::string, double> cache;
    constexpr std::size_t kCacheCap = 1u << 19;

    auto score_all = [&](std::vector<Individual>& group) {
        std::vector<std::size_t> pending;
        std::vector<std::string> keys(group.size());
        for (std::size_t i = 0; i < group.size(); ++i) {
            group[i].config = detail::decode(group[i].genes, cons.n);
            keys[i] = detail::pack(group[i].genes);
            if (auto it = cache.find(keys[i]); it != cache.end()) {
                group[i].score = it->second;
            } else {
                pending.push_back(i);
            }
        }
        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) {
                auto& ind = group[pending[k]];
                ind.score = fitness(ind.config);
            }
        };
        const std::size_t workers = std::min(params.workers, pending.size());
        if (workers <= 1) {
            work(0, pending.size());
        } else {
            std::vector<std::jthread> threads;
            const std::size_t chunk = (pending.size() + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t b = w * chunk;
                const std::size_t e = std::min(pending.size(), b + chunk);
                if (b < e) threads.emplace_back(work, b, e);
            }
        }
        if (cache.size() > kCacheCap) cache.clear();
        for (auto i : pending) {
            // Duplicates within one batch are scored more than once; count them all.
            cache.emplace(keys[i], group[i].score);
        }
        out.evaluations += pending.size();
    };

    auto rank = [](std::vector<Individual>& group) {
        std::sort(group.begin(), group.end(), [](const Individual& a, const Individual& b) {
            return detail::better(a.score, a.config, b.score, b.config);
        });
    };

    // Generation 0: supplied configurations, the empty configuration, then
    // random chromosomes. Most are sparse; every fourth draws its own density.
    std::vector<Individual> population(pop);
    for (std::size_t slot = 0; slot < pop; ++slot) {
        auto& genes = population[slot].genes;
        if (slot < initial.size()) {
            genes = detail::encode(initial[slot]);
        } else if (slot == initial.size()) {
            genes.assign(loci, 0);
        } else {
            auto rng = detail::slot_stream(params.seed, 0, slot);
            genes = random_genes(rng, slot % 4 == 3 ? -1.0 : init_prob);
        }
        repair(genes, cons);
    }
    score_all(population);
    rank(population);
    out.score_history.push_back(population.front().score);

    std::size_t since_improvement = 0;
    std::size_t generation = 0;
    while (generation + 1 < params.max_generations && since_improvement < params.stagnation_limit) {
        ++generation;
        std::vector<Individual> next(pop);
        for (std::size_t slot = 0; slot < elites; ++slot) next[slot] = population[slot];
        for (std::size_t slot = elites; slot < pop; ++slot) {
            auto rng = detail::slot_stream(params.seed, generation, slot);
            if (slot >= pop - immigrants) {
                next[slot].genes = random_genes(rng, -1.0);
                repair(next[slot].genes, cons);
                continue;
            }
            std::uniform_int_distribution<std::size_t> pick(0, pop - 1);
            auto tournament = [&]() -> const Individual& {
                const std::size_t a = pick(rng);
                const std::size_t b = pick(rng);
                return population[std::min(a, b)];  // population is ranked
            };
            const Individual& mother = tournament();
            const Individual& father = tournament();
            Chromosome child = mother.genes;
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            if (unit(rng) < params.crossover_prob) {
                std::bernoulli_distribution coin(0.5);
                for (std::size_t j = 0; j < loci; ++j) {
                    if (coin(rng)) child[j] = father.genes[j];
                }
            }
            if (flip_prob > 0.0) {
                std::bernoulli_distribution flip(flip_prob);
                for (auto& g : child) {
                    if (flip(rng)) g ^= 1;
                }
            }
            if (unit(rng) < params.shift_prob) detail::shift_boundary(child, rng);
            repair(child, cons);
            next[slot].genes = std::move(child);
        }
        std::vector<Individual> offspring(std::make_move_iterator(next.begin() + elites),
                                          std::make_move_iterator(next.end()));
        score_all(offspring);
        std::move(offspring.begin(), offspring.end(), next.begin() + elites);
        rank(next);

        const double previous_best = population.front().score;
        population = std::move(next);
        if (population.front().score < previous_best) {
            since_improvement = 0;
        } else {
            ++since_improvement;
        }
        out.score_history.push_back(population.front().score);
    }

    out.config = population.front().config;
    out.score = population.front().score;
    out.generations_run = generation + 1;
    return out;
}

// ---------------------------------------------------------------------------
// Changepoint-model front ends.

inline SearchConstraints constraints_for(const TimeSeries& series, const ModelSpec& spec,
                                         std::size_t max_changepoints = std::numeric_limits<std::size_t>::max()) {
    return {series.size(), min_segment_length(spec.mean_structure), max_changepoints};
}

namespace detail {

inline SearchReport make_report(const Evaluator& eval, SearchOutcome&& outcome, std::uint64_t seed) {
    if (!std::isfinite(outcome.score)) {
        throw DegenerateFit("every admissible configuration produced a degenerate fit");
    }
    SearchReport report{eval(outcome.config), std::move(outcome.score_history), outcome.generations_run,
                        outcome.evaluations, seed};
    return report;
}

}  // namespace detail

/// Global optimum over every configuration with at most `max_m` changepoints.
inline SearchReport exhaustive_optimize(const TimeSeries& series, const ModelSpec& spec, std::size_t max_m) {
    if (max_m + 1 > series.size()) throw std::domain_error("max_m must not exceed N - 1");
    const Evaluator eval(series, spec);
    auto outcome =
        exhaustive_search(constraints_for(series, spec, max_m), [&](const auto& c) { return eval.score(c); });
    return detail::make_report(eval, std::move(outcome), 0);
}

inline SearchReport ga_optimize(const TimeSeries& series, const ModelSpec& spec, const GAParams& params,
                                std::size_t max_m = std::numeric_limits<std::size_t>::max(),
                                std::span<const ChangepointConfiguration> initial = {}) {
    const Evaluator eval(series, spec);
    auto outcome = genetic_search(constraints_for(series, spec, max_m),
                                  [&](const auto& c) { return eval.score(c); }, params, initial);
    return detail::make_report(eval, std::move(outcome), params.seed);
}

}  // namespace cetseg
