#include "mhfx/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mhfx/errors.hpp"

namespace mhfx {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

FellerReport feller_gap(const CurrencySystem& system) {
    FellerReport r;
    r.measure = system.measure;
    for (const auto& f : system.factors) {
        const double g = 2.0 * f.kappa * f.theta - f.xi * f.xi;
        r.gap.push_back(g);
        r.violated.push_back(g < 0.0);
    }
    return r;
}

// Real Riccati B' = xi^2/2 B^2 + beta B + c, B(0) = 0.
double factor_explosion_time(double u, double b, const FactorParams& f) {
    const double c = 0.5 * (u * u - u) * b * b;
    if (b == 0.0 || c <= 0.0) return kInf;
    const double beta = -f.kappa + u * b * f.rho * f.xi;
    const double delta = beta * beta - 2.0 * f.xi * f.xi * c;
    if (delta >= 0.0) {
        if (beta <= 0.0) return kInf;
        const double s = std::sqrt(delta);
        const double x = s / beta;  // in [0, 1)
        // log(lambda+/lambda-)/s = 2 atanh(s/beta)/s
        return x == 0.0 ? 2.0 / beta : 2.0 * std::atanh(x) / s;
    }
    const double s = std::sqrt(-delta);
    return 2.0 * std::atan2(s, beta) / s;
}

double pair_explosion_time(double u, const std::vector<double>& b, const std::vector<FactorParams>& factors) {
    double t = kInf;
    for (std::size_t k = 0; k < factors.size(); ++k) t = std::min(t, factor_explosion_time(u, b[k], factors[k]));
    return t;
}

double moment_explosion_time(const CurrencySystem& system, const CurrencyPair& pair, double order) {
    if (!(order >= 1.0)) throw InvalidInput("moment order must be >= 1");
    const auto q = to_measure(system, pair.dom);
    const auto pe = pair_exposure(q, pair.dom, pair.fgn);
    return pair_explosion_time(order, pe.b, q.factors);
}

ExplosionReport explosion_report(const CurrencySystem& system, const CurrencyPair& pair, int max_order) {
    if (max_order < 1) throw InvalidInput("max order must be >= 1");
    ExplosionReport r{pair, {}, {}};
    for (int u = 1; u <= max_order; ++u) {
        r.orders.push_back(u);
        r.times.push_back(moment_explosion_time(system, pair, u));
    }
    return r;
}

}  // namespace mhfx
