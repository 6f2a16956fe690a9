#pragma once

#include <array>
#include <vector>

#include "mhfx/fourier.hpp"
#include "mhfx/model.hpp"
#include "mhfx/quotes.hpp"

namespace mhfx {

// Small vol-of-vol coefficients of one factor. B[h], A[h] for h = 0..3; families 2 and 3 multiply
// gamma^2 and omega^2 gamma in the transform exponent.
struct FactorCoefficients {
    std::array<double, 4> B{};
    std::array<double, 4> A{};
};

struct ExpansionCoefficients {
    std::vector<FactorCoefficients> factors;

    // sum_k A_k[h] + B_k[h] V_k
    double weighted(int h, const std::vector<double>& variances) const;
};

// Closed forms, switching to the Taylor series of the defining ODEs when kappa tau < 1.
ExpansionCoefficients coefficient_functions(const std::vector<FactorParams>& factors, const std::vector<double>& b,
                                            double tau);

// Derivatives of the discounted Black price in (x = log spot, v = total variance).
struct BlackVDerivatives {
    double price = 0.0;
    double v = 0.0;
    double xv = 0.0;
    double vv = 0.0;
    double xxv = 0.0;
    double xxvv = 0.0;
};

BlackVDerivatives black_v_derivatives(double forward, double strike, double total_variance, double discount,
                                      OptionType type);

// Price expansion to second order in alpha, where every xi in `system` is multiplied by alpha.
double price_expansion(const CurrencySystem& system, const OptionSpec& option, double alpha = 1.0);

// Short-expiry implied variance (annualised) at `strike`, same alpha scaling.
double implied_var_expansion(const CurrencySystem& system, const CurrencyPair& pair, double strike, double tau,
                             double alpha = 1.0);

struct GuessConfig {
    CurrencySystem market;   // currencies, rates, spots and measure; factors/exposures ignored
    std::size_t factors = 2;
    double rotation = 0.0;  // radians; turns the fitted currency configuration in the plane of factors 1 and 2
};

// Calibration starting point from the shortest quoted smile of each pair. Throws InsufficientQuotes.
CurrencySystem initial_guess(const QuoteSet& quotes, const GuessConfig& config);

}  // namespace mhfx
