#pragma once

#include <string>
#include <vector>

#include "mhfx/model.hpp"

namespace mhfx {

// 2 kappa theta - xi^2 per factor. kappa*theta is measure invariant, so one row per system suffices;
// the measure is recorded for reporting.
struct FellerReport {
    std::string measure;
    std::vector<double> gap;
    std::vector<bool> violated;  // gap < 0
};

FellerReport feller_gap(const CurrencySystem& system);

struct ExplosionReport {
    CurrencyPair pair;
    std::vector<double> orders;
    std::vector<double> times;  // +inf when the moment stays finite
};

// Blow-up time of the real Riccati solution for one factor at real moment u (any real u).
double factor_explosion_time(double u, double b, const FactorParams& f);

// Minimum of factor_explosion_time over factors, in the domestic measure of `pair`.
double pair_explosion_time(double u, const std::vector<double>& b, const std::vector<FactorParams>& factors);

// T*(u) for u >= 1. The system is moved to Q^dom before evaluation.
double moment_explosion_time(const CurrencySystem& system, const CurrencyPair& pair, double order);

ExplosionReport explosion_report(const CurrencySystem& system, const CurrencyPair& pair, int max_order);

}  // namespace mhfx
