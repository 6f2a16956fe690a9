#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss.hpp>

#include "fixtures.hpp"
#include "mhfx/errors.hpp"
#include "mhfx/expansions.hpp"

using namespace mhfx;
using mhfx::testing::sample_set;

namespace {

// The integrands are entire and smooth on [0, tau]: fixed 30-point Gauss-Legendre is exact to round-off.
double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 30>::integrate(f, a, b);
}

// Coefficients straight from their defining integrals.
struct Oracle {
    double b;
    FactorParams f;

    double B0(double t) const { return b * b * (1.0 - std::exp(-f.kappa * t)) / f.kappa; }
    double conv(const std::function<double(double)>& g, double t) const {
        return std::exp(-f.kappa * t) * integrate([&](double u) { return std::exp(f.kappa * u) * g(u); }, 0.0, t);
    }
    double B1(double t) const { return b * f.rho * f.xi * conv([&](double u) { return B0(u); }, t); }
    double B2(double t) const { return 0.5 * f.xi * f.xi * conv([&](double u) { return B0(u) * B0(u); }, t); }
    double B3(double t) const { return b * f.rho * f.xi * conv([&](double u) { return B1(u); }, t); }
    double B(int h, double t) const {
        switch (h) {
            case 0: return B0(t);
            case 1: return B1(t);
            case 2: return B2(t);
            default: return B3(t);
        }
    }
    double A(int h, double t) const {
        return f.kappa * f.theta * integrate([&](double u) { return B(h, u); }, 0.0, t);
    }
};

void expect_rel(double got, double want, double rel, const std::string& what) {
    EXPECT_LE(std::abs(got - want), rel * std::abs(want) + 1e-15) << what << ": " << got << " vs " << want;
}

}  // namespace

TEST(Coefficients, MatchDefiningIntegrals) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 12; ++t) {
        const FactorParams f{0.2 + 3.0 * U(rng), 0.01 + 0.08 * U(rng), 0.1 + 0.9 * U(rng), -0.9 + 1.8 * U(rng), 0.03};
        const double b = -1.5 + 3.0 * U(rng), tau = 0.05 + 3.0 * U(rng);
        const Oracle o{b, f};
        const auto c = coefficient_functions({f}, {b}, tau).factors[0];
        for (int h = 0; h < 4; ++h) {
            const std::string tag = "trial " + std::to_string(t) + " h=" + std::to_string(h) + " kappa*tau=" +
                                    std::to_string(f.kappa * tau);
            expect_rel(c.B[h], o.B(h, tau), 1e-10, "B " + tag);
            expect_rel(c.A[h], o.A(h, tau), 1e-10, "A " + tag);
        }
    }
}

TEST(Coefficients, SeriesAndClosedFormMeetAtTheSwitch) {
    const FactorParams f{1.3, 0.04, 0.6, -0.5, 0.02};
    const double tau_lo = std::nextafter(1.0 / 1.3, 0.0), tau_hi = 1.0 / 1.3;
    const auto lo = coefficient_functions({f}, {0.8}, tau_lo).factors[0];
    const auto hi = coefficient_functions({f}, {0.8}, tau_hi).factors[0];
    for (int h = 0; h < 4; ++h) {
        expect_rel(lo.B[h], hi.B[h], 1e-13, "B" + std::to_string(h));
        expect_rel(lo.A[h], hi.A[h], 1e-13, "A" + std::to_string(h));
    }
}

TEST(Coefficients, SmallTauLeadingOrders) {
    const FactorParams f{1.7, 0.05, 0.7, -0.4, 0.02};
    const double b = 0.9, tau = 1e-4, kt = f.kappa * f.theta, rx = f.rho * f.xi, x2 = f.xi * f.xi;
    const auto c = coefficient_functions({f}, {b}, tau).factors[0];
    const double b2 = b * b, b3 = b2 * b, b4 = b2 * b2;
    expect_rel(c.B[0], b2 * tau, 1e-3, "B0");
    expect_rel(c.B[1], b3 * rx * tau * tau / 2, 1e-3, "B1");
    expect_rel(c.B[2], x2 * b4 * std::pow(tau, 3) / 6, 1e-3, "B2");
    expect_rel(c.B[3], rx * rx * b4 * std::pow(tau, 3) / 6, 1e-3, "B3");
    expect_rel(c.A[0], kt * b2 * tau * tau / 2, 1e-3, "A0");
    expect_rel(c.A[1], kt * b3 * rx * std::pow(tau, 3) / 6, 1e-3, "A1");
    expect_rel(c.A[2], kt * x2 * b4 * std::pow(tau, 4) / 24, 1e-3, "A2");
    expect_rel(c.A[3], kt * rx * rx * b4 * std::pow(tau, 4) / 24, 1e-3, "A3");
    // Second order of B0 and B1.
    expect_rel(c.B[0], b2 * (tau - f.kappa * tau * tau / 2), 1e-7, "B0 second order");
    expect_rel(c.B[1], b3 * rx * (tau * tau / 2 - f.kappa * std::pow(tau, 3) / 3), 1e-7, "B1 second order");
}

TEST(Coefficients, ZeroExposureGivesZero) {
    const auto c = coefficient_functions({{1.0, 0.04, 0.5, -0.3, 0.04}, {2.0, 0.02, 0.4, 0.3, 0.01}}, {0.0, 0.0}, 2.0);
    for (const auto& f : c.factors)
        for (int h = 0; h < 4; ++h) {
            EXPECT_EQ(f.B[h], 0.0);
            EXPECT_EQ(f.A[h], 0.0);
        }
    EXPECT_THROW(coefficient_functions({{1.0, 0.04, 0.5, -0.3, 0.04}}, {0.0, 1.0}, 1.0), DimensionMismatch);
}

// Exact Riccati solution with xi -> alpha xi against
// gamma B0 + alpha omega gamma B1 + alpha^2 (omega^2 gamma B3 + gamma^2 B2): the remainder is O(alpha^3).
TEST(Coefficients, ReproduceSmallVolOfVolRiccati) {
    const FactorParams base{1.2, 0.05, 0.8, -0.6, 0.03};
    const double b = 1.1, tau = 1.5, w = 0.7, g = 0.5 * (w * w - w);
    const auto c = coefficient_functions({base}, {b}, tau).factors[0];
    auto remainder = [&](double alpha) {
        auto f = base;
        f.xi *= alpha;
        const auto ab = factor_ab(w, b, f, tau);
        const double a2 = alpha * alpha;
        const double eb = g * c.B[0] + alpha * w * g * c.B[1] + a2 * (w * w * g * c.B[3] + g * g * c.B[2]);
        const double ea = g * c.A[0] + alpha * w * g * c.A[1] + a2 * (w * w * g * c.A[3] + g * g * c.A[2]);
        return std::pair{std::abs(ab.B.real() - eb), std::abs(ab.A.real() - ea)};
    };
    const auto r1 = remainder(0.02), r2 = remainder(0.01);
    EXPECT_NEAR(r1.first / r2.first, 8.0, 0.2);
    EXPECT_NEAR(r1.second / r2.second, 8.0, 0.2);
}

TEST(BlackDerivatives, MatchFiniteDifferences) {
    for (auto [F, K, v] : {std::tuple{1.0, 1.0, 0.04}, std::tuple{1.3, 1.1, 0.01}, std::tuple{0.9, 1.2, 0.2}}) {
        const double df = 0.97;
        auto at = [&](double dx, double dv) {
            return black_v_derivatives(F * std::exp(dx), K, v + dv, df, OptionType::Call);
        };
        const double hx = 1e-5, hv = 1e-6 * v;
        const auto d = at(0, 0);
        expect_rel(d.v, (at(0, hv).price - at(0, -hv).price) / (2 * hv), 1e-7, "v");
        expect_rel(d.xv, (at(hx, 0).v - at(-hx, 0).v) / (2 * hx), 1e-7, "xv");
        expect_rel(d.vv, (at(0, hv).v - at(0, -hv).v) / (2 * hv), 1e-7, "vv");
        expect_rel(d.xxv, (at(hx, 0).xv - at(-hx, 0).xv) / (2 * hx), 1e-7, "xxv");
        expect_rel(d.xxvv, (at(0, hv).xxv - at(0, -hv).xxv) / (2 * hv), 1e-7, "xxvv");
        // Heat equation: dC/dv = (C_xx - C_x) / 2.
        const double c0 = d.price, cp = at(1e-4, 0).price, cm = at(-1e-4, 0).price;
        expect_rel(d.v, 0.5 * ((cp - 2 * c0 + cm) / 1e-8 - (cp - cm) / 2e-4), 1e-5, "heat");
        // Puts share every v-derivative.
        const auto p = black_v_derivatives(F, K, v, df, OptionType::Put);
        EXPECT_DOUBLE_EQ(p.xxvv, d.xxvv);
    }
    EXPECT_THROW(black_v_derivatives(1.0, 1.0, 0.0, 1.0, OptionType::Call), DegenerateVariance);
}

TEST(PriceExpansion, ZerothOrderIsBlack) {
    const auto s = sample_set(6);
    const CurrencyPair p{"USD", "EUR"};
    const double S = 1.2921, K = 1.33, tau = 0.7;
    const auto in = make_transform_input(s, p, 0.0, tau);
    const double v = integrated_variance(in.factors, in.b, in.variances, tau);
    for (auto type : {OptionType::Call, OptionType::Put})
        EXPECT_NEAR(price_expansion(s, {p, K, tau, type}, 0.0), gk_price(S, K, std::sqrt(v / tau), tau, 0, 0, type),
                    1e-15);
}

TEST(PriceExpansion, NoCorrelationNoFirstOrder) {
    auto s = sample_set(6);
    for (auto& f : s.factors) f.rho = 0.0;
    const OptionSpec o{{"USD", "EUR"}, 1.35, 0.5, OptionType::Call};
    const double p0 = price_expansion(s, o, 0.0);
    const double r = (price_expansion(s, o, 0.2) - p0) / (price_expansion(s, o, 0.1) - p0);
    EXPECT_NEAR(r, 4.0, 1e-12);
}

TEST(PriceExpansion, ThirdOrderErrorAtTheMoney) {
    const auto s = sample_set(6);
    const CurrencyPair p{"USD", "EUR"};
    const double tau = 0.25, F = 1.2921;
    QuadratureConfig q;
    q.abs_tol = 1e-14;
    q.rel_tol = 1e-12;
    q.max_truncation = 1e6;
    std::vector<double> err;
    for (double alpha : {0.2, 0.1, 0.05}) {
        auto scaled = s;
        for (auto& f : scaled.factors) f.xi *= alpha;
        const OptionSpec o{p, F, tau, OptionType::Call};
        err.push_back(std::abs(price_expansion(s, o, alpha) - vanilla_price(scaled, o, q)));
    }
    const double slope = std::log(err[0] / err[2]) / std::log(4.0);
    EXPECT_GE(slope, 2.7) << err[0] << " " << err[1] << " " << err[2];
    EXPECT_NEAR(err[1] / err[2], 8.0, 2.0);
}

TEST(ImpliedVarExpansion, ExactAtForwardAndSymmetricWithoutCorrelation) {
    const auto s = sample_set(6);
    for (auto p : {CurrencyPair{"USD", "EUR"}, CurrencyPair{"USD", "JPY"}, CurrencyPair{"JPY", "EUR"}}) {
        const auto q = to_measure(s, p.dom);
        const double s0 = instantaneous_variance(q, p.dom, p.fgn, q.initial_variances());
        const double F = *s.spot(p);
        for (double alpha : {0.0, 0.5, 1.0, 3.0}) EXPECT_EQ(implied_var_expansion(s, p, F, 0.1, alpha), s0);
    }
    auto flat = s;
    for (auto& f : flat.factors) f.rho = 0.0;
    const double F = 1.2921;
    EXPECT_NEAR(implied_var_expansion(flat, {"USD", "EUR"}, F * 1.1, 0.1),
                implied_var_expansion(flat, {"USD", "EUR"}, F / 1.1, 0.1), 1e-15);
}

TEST(ImpliedVarExpansion, OneWeekTwentyFiveDeltaAgainstPricer) {
    const auto s = sample_set(6);
    const double tau = 1.0 / 52;
    for (auto p : {CurrencyPair{"USD", "JPY"}, CurrencyPair{"USD", "EUR"}, CurrencyPair{"JPY", "EUR"}}) {
        const auto g = model_smile(s, p, {tau}, {DeltaPillar::P25, DeltaPillar::C25});
        for (std::size_t b = 0; b < 2; ++b) {
            const double approx = std::sqrt(implied_var_expansion(s, p, g.strikes[0][b], tau));
            EXPECT_LT(std::abs(approx - g.vols[0][b]), 0.003) << p.code() << " " << pillar_tag(g.pillars[b]);
        }
    }
}

namespace {

GuessConfig market_of(const CurrencySystem& s) {
    GuessConfig g;
    g.market = s;
    g.market.factors.clear();
    g.market.exposures.clear();
    g.factors = s.num_factors();
    return g;
}

}  // namespace

TEST(InitialGuess, FlatQuotesRecoverPairVariances) {
    auto s = sample_set(6);
    s.rates = {{"USD", 0.02}, {"EUR", 0.01}, {"JPY", -0.002}};
    const std::vector<CurrencyPair> pairs = {{"USD", "EUR"}, {"USD", "JPY"}, {"EUR", "JPY"}};
    QuoteSet quotes;
    for (const auto& p : pairs) {
        const double var = instantaneous_variance(s, p.dom, p.fgn, s.initial_variances());
        for (auto pillar : kAllPillars) quotes.push_back({p, 0.25, pillar, std::sqrt(var), {}});
        quotes.push_back({p, 1.0, DeltaPillar::DN, 0.5, {}});  // longer tenors are ignored
    }
    const auto g = initial_guess(quotes, market_of(s));
    for (const auto& p : pairs)
        EXPECT_NEAR(instantaneous_variance(g, p.dom, p.fgn, g.initial_variances()),
                    instantaneous_variance(s, p.dom, p.fgn, s.initial_variances()), 1e-6)
            << p.code();
    for (const auto& f : g.factors) EXPECT_NEAR(f.rho, 0.0, 1e-9);
    for (const auto& [c, a] : g.exposures)
        for (double x : a) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 3.0);
        }
    for (const auto& c : g.currencies) EXPECT_NO_THROW(to_measure(g, c));
}

TEST(InitialGuess, SymmetricSmilesGiveNoCorrelation) {
    auto s = sample_set(6);
    for (auto& f : s.factors) f.rho = 0.0;
    const auto quotes = synthesize_quotes(s, {{"USD", "EUR"}, {"USD", "JPY"}, {"JPY", "EUR"}}, {1.0 / 12},
                                          std::vector<DeltaPillar>(kAllPillars.begin(), kAllPillars.end()));
    const auto g = initial_guess(quotes, market_of(s));
    for (const auto& f : g.factors) EXPECT_LT(std::abs(f.rho), 0.05);
}

TEST(InitialGuess, SkewSignFollowsTheQuotes) {
    // Negative correlation lifts low strikes of USD/EUR; the guess must keep a negative rho*xi*b^3 sum.
    const auto s = sample_set(6);
    const std::vector<CurrencyPair> pairs = {{"USD", "EUR"}, {"USD", "JPY"}, {"JPY", "EUR"}};
    const auto quotes = synthesize_quotes(s, pairs, {1.0 / 12}, std::vector<DeltaPillar>(kAllPillars.begin(), kAllPillars.end()));
    const auto g = initial_guess(quotes, market_of(s));
    for (const auto& p : pairs) {
        const double F = *s.spot(p), lo = F * 0.97, hi = F * 1.03;
        const double want = implied_var_expansion(s, p, hi, 1.0 / 12) - implied_var_expansion(s, p, lo, 1.0 / 12);
        const double got = implied_var_expansion(g, p, hi, 1.0 / 12) - implied_var_expansion(g, p, lo, 1.0 / 12);
        EXPECT_GT(want * got, 0.0) << p.code();
    }
}

TEST(InitialGuess, RejectsThinQuotes) {
    const auto s = sample_set(6);
    EXPECT_THROW(initial_guess({}, market_of(s)), InsufficientQuotes);
    const QuoteSet one = {{{"USD", "EUR"}, 0.25, DeltaPillar::DN, 0.1, {}}};
    EXPECT_THROW(initial_guess(one, market_of(s)), InsufficientQuotes);
    const QuoteSet foreign = {{{"USD", "GBP"}, 0.25, DeltaPillar::DN, 0.1, {}}, {{"USD", "EUR"}, 0.25, DeltaPillar::DN, 0.1, {}}};
    EXPECT_THROW(initial_guess(foreign, market_of(s)), UnknownCurrency);
}
