#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mhfx {

// Label of the artificial currency: exposure identically zero.
inline constexpr std::string_view kNumeraire0 = "NUMERAIRE0";

// One CIR variance factor, expressed in some measure.
struct FactorParams {
    double kappa = 1.0;  // mean reversion (1/year)
    double theta = 0.0;  // long-run variance
    double xi = 0.0;     // vol-of-vol
    double rho = 0.0;    // spot/variance correlation
    double v0 = 0.0;     // initial variance

    // Throws InvalidInput. theta = 0 is accepted so that the fully deterministic model is expressible.
    void validate() const;
};

// FX rate S^{dom,fgn}: units of `dom` per unit of `fgn`. Code "USDEUR" means dom=USD, fgn=EUR.
struct CurrencyPair {
    std::string dom;
    std::string fgn;

    static CurrencyPair parse(std::string_view code);
    std::string code() const { return dom + fgn; }
    CurrencyPair inverse() const { return {fgn, dom}; }
    bool operator==(const CurrencyPair&) const = default;
};

struct PairExposure {
    CurrencyPair pair;
    std::vector<double> b;  // b_k = a^dom_k - a^fgn_k
};

struct CurrencySystem {
    std::vector<std::string> currencies;
    std::map<std::string, double> rates;                    // flat r^i
    std::map<std::string, std::vector<double>> exposures;   // a^i, each of size d
    std::vector<FactorParams> factors;                      // d factors in `measure`
    std::string measure{kNumeraire0};
    std::map<std::string, double> spots;                    // keyed by pair code

    std::size_t num_factors() const { return factors.size(); }
    bool has_currency(std::string_view c) const;
    bool is_measure_label(std::string_view label) const;

    // Exposure vector of a currency, or zeros for NUMERAIRE0.
    std::vector<double> exposure_of(std::string_view label) const;
    double rate(std::string_view currency) const;
    std::vector<double> initial_variances() const;

    // Direct quote, inverse quote, or triangulation through one intermediate currency.
    std::optional<double> spot(const CurrencyPair& pair) const;
    double spot_or_throw(const CurrencyPair& pair) const;

    void validate() const;
};

CurrencySystem to_measure(const CurrencySystem& system, std::string_view target);

PairExposure pair_exposure(const CurrencySystem& system, std::string_view i, std::string_view j);

double instantaneous_variance(const CurrencySystem& system, std::string_view i, std::string_view j,
                              std::span<const double> variances);

struct InstantCovariance {
    double covariance = 0.0;
    double correlation = 0.0;  // NaN when either leg has zero variance
};

InstantCovariance instantaneous_covariance(const CurrencySystem& system, const CurrencyPair& pair1,
                                           const CurrencyPair& pair2, std::span<const double> variances);

double skew_correlation(const CurrencySystem& system, std::string_view i, std::string_view j,
                        std::span<const double> variances);

struct TriangleCorrelation {
    double value = 0.0;
    bool consistent = true;  // false when |value| > 1
};

TriangleCorrelation bs_triangle_correlation(double sigma_il, double sigma_im, double sigma_lm);

// Adds `shift` to every exposure vector. Observables are unchanged when `measure` is a currency.
CurrencySystem shift_exposures(const CurrencySystem& system, std::span<const double> shift);

}  // namespace mhfx
