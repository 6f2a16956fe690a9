#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mhfx/fourier.hpp"
#include "mhfx/model.hpp"

namespace mhfx {

enum class VarianceScheme { FullTruncationEuler, QE };

std::string_view to_string(VarianceScheme s);
VarianceScheme parse_scheme(std::string_view s);

struct SimConfig {
    std::size_t n_paths = 100000;
    double steps_per_year = 52.0;
    double horizon = 1.0;  // years
    std::uint64_t seed = 42;
    VarianceScheme scheme = VarianceScheme::FullTruncationEuler;
    std::string measure;   // a currency; empty = domestic currency of the (first) pair
    bool antithetic = true;
    unsigned jobs = 0;     // worker threads, 0 = hardware concurrency

    void validate() const;
    std::size_t num_steps() const;  // max(1, round(horizon * steps_per_year))
};

// Recorded grid: times[0] = 0, ..., times.back() = horizon.
struct PathSet {
    std::vector<CurrencyPair> pairs;
    std::vector<double> times;
    std::size_t n_paths = 0;
    std::size_t n_factors = 0;
    std::vector<double> log_spots;  // [(path * times + t) * pairs + p]
    std::vector<double> variances;  // [(path * times + t) * factors + k], truncated at 0

    double log_spot(std::size_t path, std::size_t t, std::size_t p) const {
        return log_spots[(path * times.size() + t) * pairs.size() + p];
    }
    double variance(std::size_t path, std::size_t t, std::size_t k) const {
        return variances[(path * times.size() + t) * n_factors + k];
    }
};

// Paths of the requested spots in `config.measure`. Every pair is read off one set of per-currency log
// states, so cross rates equal ratios of mains up to round-off.
PathSet simulate(const CurrencySystem& system, const std::vector<CurrencyPair>& pairs, const SimConfig& config);

struct McEstimate {
    double price = 0.0;
    double std_error = 0.0;
};

// Vanilla priced in units of option.pair.dom by simulation in config.measure (default: the domestic
// measure), horizon = option.tau. Numeraire change: C = E^m[e^{-r^m T} S^{m,dom}(T)/S^{m,dom}(0) payoff].
McEstimate mc_price(const CurrencySystem& system, const OptionSpec& option, SimConfig config);

// Several strikes/types on one pair and expiry from the same paths.
std::vector<McEstimate> mc_prices(const CurrencySystem& system, const CurrencyPair& pair, double tau,
                                  const std::vector<double>& strikes, const std::vector<OptionType>& types,
                                  SimConfig config);

struct SymmetryReport {
    std::array<std::string, 3> triangle;  // (i, l, m)
    double tau = 0.0;
    // (a) call on S^{l,m}, forward-ATM strike, in units of l.
    double cross_strike = 0.0;
    McEstimate cross_direct;  // simulated under Q^l
    McEstimate cross_ratio;   // S^{i,m}/S^{i,l} simulated under Q^i
    double cross_z = 0.0;     // discrepancy / combined stderr
    // (b) call on S^{i,l} under Q^i against S K P_l(S^{l,i}, 1/K) under Q^l.
    double inversion_strike = 0.0;
    McEstimate inversion_call;
    McEstimate inversion_put;  // already scaled by S K
    double inversion_z = 0.0;
};

SymmetryReport symmetry_report(const CurrencySystem& system, const std::array<std::string, 3>& triangle, double tau,
                               SimConfig config);

}  // namespace mhfx
