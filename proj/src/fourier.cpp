#include "mhfx/fourier.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mhfx/diagnostics.hpp"
#include "mhfx/errors.hpp"

namespace mhfx {

void QuadratureConfig::validate() const {
    if (!(contour_im > 1.0)) throw InvalidInput("contour_im must exceed 1");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw InvalidInput("quadrature tolerances must be positive");
    if (!(max_truncation > 0.0)) throw InvalidInput("max_truncation must be positive");
}

void OptionSpec::validate() const {
    if (!(strike > 0.0) || !std::isfinite(strike)) throw InvalidInput("strike must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("expiry must be positive");
    if (spot && !(*spot > 0.0)) throw InvalidInput("spot must be positive");
}

cplx payoff_transform(cplx lambda, double strike) {
    if (!(lambda.imag() > 1.0)) throw StripViolation("payoff transform needs Im(lambda) > 1");
    const cplx i(0.0, 1.0);
    return -std::exp((i * lambda + 1.0) * std::log(strike)) / (lambda * lambda - i * lambda);
}

double effective_contour(const TransformInput& in, double requested) {
    double nu = requested;
    for (int n = 0; n < 60; ++n) {
        if (pair_explosion_time(nu, in.b, in.factors) > in.tau) return nu;
        nu = 1.0 + 0.5 * (nu - 1.0);
    }
    throw StripViolation("no admissible contour above 1 at this maturity");
}

namespace {

// Undiscounted option on a unit strike with log-moneyness x = log(S/K): the Black price at the
// deterministic-limit variance plus the Fourier integral of the difference of the two transforms.
// Model and Black share the forward, so that difference is the same for calls and puts.
double normalised_price(const TransformInput& in, double v_ref, OptionType type, const QuadratureConfig& quad) {
    const double drift = in.x + (in.r_dom - in.r_for) * in.tau;
    const double fwd = std::exp(drift);
    const double base = black_forward(fwd, 1.0, v_ref, type);
    const double nu = effective_contour(in, quad.contour_im);
    const std::size_t d = in.factors.size();
    const cplx i(0.0, 1.0);

    auto integrand = [&](double u) {
        const cplx w(nu, -u);
        cplx e = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            if (in.b[k] == 0.0) continue;
            const auto ab = factor_ab(w, in.b[k], in.factors[k], in.tau);
            e += ab.A + ab.B * in.variances[k];
        }
        const cplx bs = 0.5 * (w * w - w) * v_ref;
        const cplx lead = std::exp(w * drift);
        const cplx diff = lead * (std::exp(e) - std::exp(bs));
        const cplx lambda(u, nu);
        return (diff * (-1.0 / (lambda * lambda - i * lambda))).real();
    };

    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double width = std::clamp(2.0 / std::sqrt(std::max(v_ref, 1e-12)), 2.0, 200.0);
    double lo = 0.0, hi = width, total = 0.0;
    int quiet = 0;
    while (true) {
        double err = 0.0;
        const double piece = GK::integrate(integrand, lo, hi, 8, quad.rel_tol, &err);
        if (!std::isfinite(piece)) throw QuadratureFailure("non-finite quadrature panel");
        total += piece;
        const double edge = std::abs(integrand(hi)) * hi;
        quiet = (std::abs(piece) + err < 0.1 * quad.abs_tol && edge < 0.1 * quad.abs_tol) ? quiet + 1 : 0;
        if (quiet >= 2 || (quiet == 1 && hi >= quad.max_truncation)) break;
        if (hi >= quad.max_truncation)
            throw QuadratureFailure("tail above tolerance at truncation " + std::to_string(quad.max_truncation));
        lo = hi;
        hi = std::min(2.0 * hi, quad.max_truncation);
    }
    return base + total / std::numbers::pi;
}

}  // namespace

double vanilla_price(const CurrencySystem& system, const OptionSpec& option, const QuadratureConfig& quad) {
    option.validate();
    quad.validate();
    auto in = make_transform_input(system, option.pair, 0.0, option.tau);
    const double spot = option.spot ? *option.spot : std::exp(in.x);
    in.x = std::log(spot / option.strike);
    const double df = std::exp(-in.r_dom * option.tau);
    const double v_ref = integrated_variance(in.factors, in.b, in.variances, option.tau);
    const double fwd = spot * std::exp((in.r_dom - in.r_for) * option.tau);
    const double p = option.strike * normalised_price(in, v_ref, option.type, quad);
    // Clamp round-off below intrinsic or above the no-arbitrage cap.
    if (option.type == OptionType::Call) return df * std::clamp(p, std::max(fwd - option.strike, 0.0), fwd);
    return df * std::clamp(p, std::max(option.strike - fwd, 0.0), option.strike);
}

double vanilla_price_in_measure(const CurrencySystem& system, const OptionSpec& option, std::string_view measure,
                                const QuadratureConfig& quad) {
    if (measure.empty() || measure == option.pair.dom) return vanilla_price(system, option, quad);
    if (measure != option.pair.fgn)
        throw InvalidInput("pricing measure " + std::string(measure) + " is not a currency of " + option.pair.code());
    option.validate();
    const double spot = option.spot ? *option.spot : system.spot_or_throw(option.pair);
    OptionSpec inv;
    inv.pair = option.pair.inverse();
    inv.strike = 1.0 / option.strike;
    inv.tau = option.tau;
    inv.type = option.type == OptionType::Call ? OptionType::Put : OptionType::Call;
    inv.spot = 1.0 / spot;
    return spot * option.strike * vanilla_price(system, inv, quad);
}

SmileGrid model_smile(const CurrencySystem& system, const CurrencyPair& pair, const std::vector<double>& tenors,
                      const std::vector<DeltaPillar>& pillars, const DeltaConvention& convention,
                      const QuadratureConfig& quad, std::string_view measure) {
    SmileGrid grid{pair, tenors, pillars, {}, {}, {}};
    const double spot = system.spot_or_throw(pair);
    const double rd = system.rate(pair.dom), rf = system.rate(pair.fgn);
    // DN first, then outward; each wing pillar is seeded with the converged vol of its inner neighbour.
    auto rank = [](DeltaPillar p) {
        const double d = pillar_delta(p);
        return p == DeltaPillar::DN ? 0.0 : 1.0 - std::abs(d);
    };
    std::vector<std::size_t> order(pillars.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rank(pillars[a]) < rank(pillars[b]); });

    for (double tau : tenors) {
        std::vector<double> vols(pillars.size()), strikes(pillars.size());
        std::vector<int> iters(pillars.size());
        const auto in = make_transform_input(system, pair, 0.0, tau);
        const double atm_seed = std::sqrt(integrated_variance(in.factors, in.b, in.variances, tau) / tau);
        double seed_dn = atm_seed, seed_call = atm_seed, seed_put = atm_seed;
        for (std::size_t idx : order) {
            const auto pillar = pillars[idx];
            const bool is_call = pillar != DeltaPillar::DN && pillar_option_type(pillar) == OptionType::Call;
            double& seed = pillar == DeltaPillar::DN ? seed_dn : is_call ? seed_call : seed_put;
            // Root of g(vol) = model_vol(strike(vol)) - vol by secant, seeded with one plain step.
            auto model_vol = [&](double v, double& k) {
                k = strike_from_delta(pillar, convention, v, spot, tau, rd, rf);
                const double fwd = spot * std::exp((rd - rf) * tau);
                const OptionType type = k >= fwd ? OptionType::Call : OptionType::Put;
                const double price = vanilla_price_in_measure(system, {pair, k, tau, type, spot}, measure, quad);
                return implied_vol(price, spot, k, tau, rd, rf, type);
            };
            double vol = seed, strike = 0.0, prev_vol = 0.0, prev_g = 0.0;
            int n = 0;
            for (;;) {
                if (++n > 50)
                    throw FixedPointDivergence("smile fixed point did not converge at " + std::string(pillar_tag(pillar)));
                const double g = model_vol(vol, strike) - vol;
                // Converged once the plain update no longer moves the strike.
                if (std::abs(strike_from_delta(pillar, convention, vol + g, spot, tau, rd, rf) - strike) <= 1e-10 * strike) {
                    vol += g;
                    break;
                }
                double next = vol + g;
                if (n > 1 && g != prev_g) {
                    const double secant = vol - g * (vol - prev_vol) / (g - prev_g);
                    if (std::isfinite(secant) && secant > 0.0) next = secant;
                }
                prev_vol = vol;
                prev_g = g;
                vol = next;
            }
            vols[idx] = vol;
            strikes[idx] = strike_from_delta(pillar, convention, vol, spot, tau, rd, rf);
            iters[idx] = n;
            if (pillar == DeltaPillar::DN) seed_dn = seed_call = seed_put = vol;
            else seed = vol;
        }
        grid.vols.push_back(std::move(vols));
        grid.strikes.push_back(std::move(strikes));
        grid.iterations.push_back(std::move(iters));
    }
    return grid;
}

}  // namespace mhfx
