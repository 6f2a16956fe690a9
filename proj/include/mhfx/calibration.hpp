#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhfx/fourier.hpp"
#include "mhfx/model.hpp"
#include "mhfx/quotes.hpp"

namespace mhfx {

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
};

struct ParamBounds {
    Bounds kappa{0.05, 10.0};
    Bounds theta{1e-4, 1.0};
    Bounds xi{0.01, 1.0};
    Bounds rho{-0.95, 0.95};
    Bounds v0{1e-4, 1.0};
    Bounds exposure{0.0, 3.0};

    void validate() const;
};

// Layout of the parameter vector: for k = 1..d the five factor entries (kappa, theta, xi, rho, v0), then the
// exposures of each currency (in system order), d entries each. Names: "kappa1", "rho2", "a_EUR_1", ...
std::vector<std::string> parameter_names(const CurrencySystem& layout);
std::vector<double> encode(const CurrencySystem& system);
CurrencySystem decode(const std::vector<double>& params, const CurrencySystem& layout);

struct CalibConfig {
    CurrencySystem market;                          // currencies, rates, spots, parameter measure
    std::size_t factors = 2;
    std::vector<std::string> fixed;                 // parameter names held at their starting value
    ParamBounds bounds;
    std::map<std::string, std::string> measures;    // pair code -> pricing measure (default: domestic)
    std::optional<CurrencySystem> start;            // replaces the expansion-based guess
    std::size_t multistart = 4;                     // total starts, the first is the unjittered guess
    double jitter = 0.1;                            // relative size of restart perturbations
    std::size_t max_iterations = 200;
    double ftol = 1e-8;                             // relative objective decrease
    double fatol = 1e-12;                           // objective small enough to stop
    double xtol = 1e-10;                            // relative step
    double gtol = 1e-14;                            // projected gradient
    double ridge = 1e-8;                            // weight on |a^base|^2, base = first currency
    double penalty = 1.0;                           // residual (in vol) for quotes that cannot be priced
    std::uint64_t seed = 42;
    unsigned jobs = 1;
    QuadratureConfig quad;

    void validate() const;
    std::string measure_for(const CurrencyPair& pair) const;
};

struct Target {
    VolQuote quote;
    double strike = 0.0;
};

// Strikes from the quote's own vol under the market spots and rates. Throws InfeasibleDelta.
std::vector<Target> resolve_targets(const QuoteSet& quotes, const CurrencySystem& market);

// Model implied vol of each target, NaN where pricing or inversion fails.
std::vector<double> model_vols(const CurrencySystem& system, const std::vector<Target>& targets,
                               const CalibConfig& config);

// Sum of squared vol differences (without the ridge term). Unpriceable quotes contribute config.penalty^2,
// a system that cannot be moved to a pricing measure contributes penalty^2 per quote.
double objective(const std::vector<double>& params, const std::vector<Target>& targets, const CalibConfig& config);

struct QuoteError {
    VolQuote quote;
    double strike = 0.0;
    double model_vol = 0.0;  // NaN when unpriceable
    double error = 0.0;      // market - model
};

struct CalibResult {
    CurrencySystem system;
    double residual_norm = 0.0;  // sum of squared vol errors
    std::vector<QuoteError> errors;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    std::size_t penalized = 0;  // evaluations that hit a penalty
    std::size_t best_start = 0;
    std::vector<double> start_objectives;  // final objective of each start
    bool converged = false;
    std::string stop_reason;
};

// Box-bounded Levenberg-Marquardt with forward-difference Jacobian from every start; the best objective
// wins (lowest start index on ties). A start that exhausts max_iterations leaves converged = false.
CalibResult calibrate(const QuoteSet& quotes, const CalibConfig& config);

struct HoldoutRow {
    VolQuote quote;
    double model_vol = 0.0;
    double difference = 0.0;  // market - model
};

struct HoldoutReport {
    double cutoff = 0.0;
    CalibResult fit;
    std::vector<HoldoutRow> rows;
    double max_abs_difference() const;
};

// Fits tenors <= cutoff and reports the excluded tenors. Throws InvalidInput if either side is empty.
HoldoutReport holdout_report(const QuoteSet& quotes, double cutoff, const CalibConfig& config);

nlohmann::json to_json(const CalibResult& result);
nlohmann::json to_json(const HoldoutReport& report);
// Reads the calibration settings document; the market system is loaded separately.
void apply_json(CalibConfig& config, const nlohmann::json& doc);

}  // namespace mhfx
