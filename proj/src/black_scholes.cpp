#include "mhfx/black_scholes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

#include "mhfx/errors.hpp"

namespace mhfx {

std::string_view to_string(OptionType t) { return t == OptionType::Call ? "call" : "put"; }

OptionType parse_option_type(std::string_view s) {
    if (s == "call" || s == "C" || s == "c") return OptionType::Call;
    if (s == "put" || s == "P" || s == "p") return OptionType::Put;
    throw InvalidInput("option type must be call or put: " + std::string(s));
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double norm_inv(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("norm_inv needs p in (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double black_forward(double forward, double strike, double v, OptionType type) {
    if (v <= 0.0) return type == OptionType::Call ? std::max(forward - strike, 0.0) : std::max(strike - forward, 0.0);
    const double sd = std::sqrt(v);
    const double d1 = std::log(forward / strike) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    if (type == OptionType::Call) return forward * norm_cdf(d1) - strike * norm_cdf(d2);
    return strike * norm_cdf(-d2) - forward * norm_cdf(-d1);
}

double gk_price(double spot, double strike, double vol, double tau, double r_dom, double r_for, OptionType type) {
    if (!(spot > 0.0) || !(strike > 0.0) || !(vol > 0.0) || !(tau > 0.0))
        throw InvalidInput("gk_price needs positive spot, strike, vol and tau");
    const double fwd = spot * std::exp((r_dom - r_for) * tau);
    return std::exp(-r_dom * tau) * black_forward(fwd, strike, vol * vol * tau, type);
}

double implied_vol_forward(double price, double forward, double strike, double tau, OptionType type) {
    constexpr double lo_vol = 1e-6, hi_vol = 5.0;
    if (!(forward > 0.0) || !(strike > 0.0) || !(tau > 0.0)) throw InvalidInput("implied_vol needs positive inputs");
    if (!std::isfinite(price)) throw PriceOutOfBounds("price is not finite");
    // Work with the out-of-the-money option: its price is pure time value.
    const bool call_otm = strike >= forward;
    const OptionType otm = call_otm ? OptionType::Call : OptionType::Put;
    double target = price;
    if (type != otm) target = type == OptionType::Call ? price - (forward - strike) : price - (strike - forward);
    const double upper = otm == OptionType::Call ? forward : strike;
    const double scale = std::max(forward, strike);
    if (target > upper || price > (type == OptionType::Call ? forward : strike))
        throw PriceOutOfBounds("price above the no-arbitrage upper bound");
    if (target < -1e-14 * scale) throw PriceOutOfBounds("price below intrinsic value");
    if (target <= 1e-15 * scale) return 0.0;

    const double sqt = std::sqrt(tau);
    auto f = [&](double s) { return black_forward(forward, strike, s * s * tau, otm) - target; };
    double lo = lo_vol, hi = hi_vol;
    if (f(hi) < 0.0) throw PriceOutOfBounds("implied vol above 5");
    if (f(lo) > 0.0) return lo;
    // Initial guess from the ATM approximation.
    double s = std::clamp(target / (0.4 * scale * sqt), 0.01, 2.0);
    for (int it = 0; it < 200; ++it) {
        const double fs = f(s);
        if (fs == 0.0) return s;
        if (fs > 0.0)
            hi = s;
        else
            lo = s;
        const double sd = s * sqt;
        const double d1 = std::log(forward / strike) / sd + 0.5 * sd;
        const double vega = forward * norm_pdf(d1) * sqt;
        double next = vega > 0.0 ? s - fs / vega : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 1e-15 * s || hi - lo <= 1e-15 * hi) return next;
        s = next;
    }
    return s;
}

double implied_vol(double price, double spot, double strike, double tau, double r_dom, double r_for, OptionType type) {
    if (!(spot > 0.0) || !(tau > 0.0)) throw InvalidInput("implied_vol needs positive spot and tau");
    const double df = std::exp(-r_dom * tau);
    const double fwd = spot * std::exp((r_dom - r_for) * tau);
    return implied_vol_forward(price / df, fwd, strike, tau, type);
}

std::string_view pillar_tag(DeltaPillar p) {
    switch (p) {
        case DeltaPillar::C10: return "10DC";
        case DeltaPillar::C15: return "15DC";
        case DeltaPillar::C25: return "25DC";
        case DeltaPillar::DN: return "DN";
        case DeltaPillar::P25: return "25DP";
        case DeltaPillar::P15: return "15DP";
        case DeltaPillar::P10: return "10DP";
    }
    return "";
}

DeltaPillar parse_pillar(std::string_view tag) {
    for (auto p : kAllPillars)
        if (pillar_tag(p) == tag) return p;
    throw InvalidInput("unknown pillar tag: " + std::string(tag));
}

double pillar_delta(DeltaPillar p) {
    switch (p) {
        case DeltaPillar::C10: return 0.10;
        case DeltaPillar::C15: return 0.15;
        case DeltaPillar::C25: return 0.25;
        case DeltaPillar::DN: return 0.0;
        case DeltaPillar::P25: return -0.25;
        case DeltaPillar::P15: return -0.15;
        case DeltaPillar::P10: return -0.10;
    }
    return 0.0;
}

OptionType pillar_option_type(DeltaPillar p) { return pillar_delta(p) < 0.0 ? OptionType::Put : OptionType::Call; }

double fx_delta(OptionType type, const DeltaConvention& conv, double spot, double strike, double vol, double tau,
                double r_dom, double r_for) {
    if (!(spot > 0.0) || !(strike > 0.0) || !(vol > 0.0) || !(tau > 0.0))
        throw InvalidInput("fx_delta needs positive inputs");
    const double fwd = spot * std::exp((r_dom - r_for) * tau);
    const double sd = vol * std::sqrt(tau);
    const double d1 = std::log(fwd / strike) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    double delta;
    if (conv.premium_adjusted)
        delta = type == OptionType::Call ? strike / fwd * norm_cdf(d2) : -strike / fwd * norm_cdf(-d2);
    else
        delta = type == OptionType::Call ? norm_cdf(d1) : -norm_cdf(-d1);
    if (conv.basis == DeltaBasis::Spot) delta *= std::exp(-r_for * tau);
    return delta;
}

namespace {

double solve_log_strike(const std::function<double(double)>& g, double lo, double hi) {
    boost::uintmax_t iters = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-15 * (1.0 + std::max(std::abs(a), std::abs(b))); };
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, tol, iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace

double strike_from_delta(DeltaPillar pillar, const DeltaConvention& conv, double vol, double spot, double tau,
                         double r_dom, double r_for) {
    if (!(vol > 0.0) || !(spot > 0.0) || !(tau > 0.0)) throw InvalidInput("strike_from_delta needs positive inputs");
    const double fwd = spot * std::exp((r_dom - r_for) * tau);
    const double sd = vol * std::sqrt(tau);
    if (pillar == DeltaPillar::DN) return fwd * std::exp((conv.premium_adjusted ? -0.5 : 0.5) * sd * sd);

    const OptionType type = pillar_option_type(pillar);
    double target = std::abs(pillar_delta(pillar));
    if (conv.basis == DeltaBasis::Spot) target *= std::exp(r_for * tau);
    if (target >= 1.0) throw InfeasibleDelta("delta pillar " + std::string(pillar_tag(pillar)) + " unreachable on spot basis");

    const double sign = type == OptionType::Call ? -1.0 : 1.0;
    const double k_unadj = fwd * std::exp(sign * sd * norm_inv(target) + 0.5 * sd * sd);
    if (!conv.premium_adjusted) return k_unadj;

    // Forward premium-adjusted delta magnitude as a function of log(K/F).
    auto pa = [&](double m) {
        const double d2 = -m / sd - 0.5 * sd;
        return type == OptionType::Call ? std::exp(m) * norm_cdf(d2) : std::exp(m) * norm_cdf(-d2);
    };
    const double m_lo_cap = std::log(0.01), m_hi_cap = std::log(10.0);
    if (type == OptionType::Put) {
        // Monotone increasing in m; the premium makes the root lie left of the unadjusted strike.
        double lo = m_lo_cap, hi = std::min(std::log(k_unadj / fwd), m_hi_cap);
        auto g = [&](double m) { return pa(m) - target; };
        if (g(hi) < 0.0) hi = m_hi_cap;
        if (g(lo) > 0.0 || g(hi) < 0.0)
            throw InfeasibleDelta("premium-adjusted put delta has no root in [0.01 F, 10 F]");
        return fwd * std::exp(solve_log_strike(g, lo, hi));
    }
    // Call: maximum of K/F Phi(d2) where sd Phi(d2) = phi(d2); take the branch right of it.
    auto h = [&](double d2) { return sd * norm_cdf(d2) - norm_pdf(d2); };
    // h < 0 where the inverse Mills ratio exceeds sd, which holds far enough left.
    double d2_lo = -8.0, d2_hi = 40.0;
    while (h(d2_lo) >= 0.0 && d2_lo > -36.0) d2_lo -= 4.0;
    if (h(d2_lo) >= 0.0) throw InfeasibleDelta("premium-adjusted call delta maximum not bracketed");
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(
        h, d2_lo, d2_hi, [](double a, double b) { return std::abs(b - a) <= 1e-14; }, iters);
    const double d2_star = 0.5 * (r.first + r.second);
    const double m_star = -sd * d2_star - 0.5 * sd * sd;
    const double lo = std::max(m_star, m_lo_cap);
    const double hi = std::min(std::log(k_unadj / fwd), m_hi_cap);
    auto g = [&](double m) { return pa(m) - target; };
    if (!(lo < hi) || g(lo) < 0.0 || g(hi) > 0.0)
        throw InfeasibleDelta("premium-adjusted call delta " + std::string(pillar_tag(pillar)) + " is not attainable");
    return fwd * std::exp(solve_log_strike(g, lo, hi));
}

}  // namespace mhfx
