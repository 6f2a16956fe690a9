// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "mhfx/black_scholes.hpp"
#include "mhfx/calibration.hpp"
#include "mhfx/cli.hpp"
#include "mhfx/diagnostics.hpp"
#include "mhfx/errors.hpp"
#include "mhfx/expansions.hpp"
#include "mhfx/fourier.hpp"
#include "mhfx/monte_carlo.hpp"
#include "mhfx/quotes.hpp"
#include "mhfx/transform.hpp"

using namespace mhfx;
using mhfx::testing::random_system;
using mhfx::testing::sample_set;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[fail] " << what << "; ";
        }
    }
};

std::string fmt(double x, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

QuadratureConfig tight() {
    QuadratureConfig q;
    q.abs_tol = 1e-14;
    q.rel_tol = 1e-12;
    q.max_truncation = 1e6;
    return q;
}

const std::vector<CurrencyPair> kMainPairs{{"USD", "EUR"}, {"JPY", "USD"}, {"JPY", "EUR"}};

// 1 ------------------------------------------------------------------------------------------------
void feller_table(Outcome& o) {
    const std::map<int, std::array<double, 2>> published = {{6, {-0.1715, -0.6745}},
                                                            {5, {-0.1841, -0.6640}},
                                                            {4, {-0.2076, -0.5086}},
                                                            {3, {-0.2276, -0.5153}},
                                                            {2, {-0.2445, -0.5768}}};
    double worst = 0.0;
    for (const auto& [n, want] : published) {
        const std::string model = testing::data_path("sample" + std::to_string(n) + ".json");
        const char* argv[] = {"mhfx", "diagnose", "--model", model.c_str(), "--pair", "USDEUR", "--max-order", "1"};
        std::ostringstream out, err;
        const int code = cli::run(8, argv, out, err);
        o.check(code == 0, "diagnose exit " + std::to_string(code) + " " + err.str());
        if (code != 0) continue;
        std::istringstream rows(cli::strip_manifest_csv(out.str()));
        std::string header, line;
        std::getline(rows, header);
        std::getline(rows, line);
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        o.check(cells.size() == 3, "feller row shape, sample " + std::to_string(n));
        if (cells.size() != 3) continue;
        for (int k = 0; k < 2; ++k) {
            const double e = std::abs(std::stod(cells[k + 1]) - want[k]);
            worst = std::max(worst, e);
            o.check(e <= 5e-4, "sample " + std::to_string(n) + " k=" + std::to_string(k + 1) + " got " + cells[k + 1]);
        }
    }
    o.detail << "10 values, max |error| " << fmt(worst, 3);
}

// 2 ------------------------------------------------------------------------------------------------
void explosion_table(Outcome& o) {
    const double inf = std::numeric_limits<double>::infinity();
    const std::array<std::array<double, 5>, 3> published = {{{inf, inf, inf, 3.3968, 2.0070},
                                                             {inf, 12.1962, 2.9537, 1.7990, 2.0819},
                                                             {inf, 5.1612, 2.0580, 1.3763, 1.0614}}};
    const auto s = sample_set(6);
    int table_miss = 0;
    double worst_ode = 0.0;
    std::ostringstream got;
    for (std::size_t p = 0; p < 3; ++p) {
        got << kMainPairs[p].code() << "(";
        for (int n = 1; n <= 5; ++n) {
            const double t = moment_explosion_time(s, kMainPairs[p], n);
            const double want = published[p][n - 1];
            got << (n > 1 ? " " : "") << fmt(t, 5);
            const bool ok = std::isinf(want) ? std::isinf(t) : std::isfinite(t) && rel(t, want) <= 0.01;
            if (!ok) ++table_miss;
            // closed form against ODE blow-up
            auto in = make_transform_input(s, kMainPairs[p], static_cast<double>(n), std::isfinite(t) ? 2.0 * t : 60.0);
            const double ode = riccati_blowup_time(in);
            if (std::isfinite(t)) {
                worst_ode = std::max(worst_ode, rel(ode, t));
                o.check(rel(ode, t) <= 1e-6, "ODE " + kMainPairs[p].code() + " order " + std::to_string(n));
            } else {
                o.check(std::isinf(ode), "ODE finds blow-up where closed form is infinite");
            }
        }
        got << ") ";
    }
    o.check(table_miss == 0, std::to_string(table_miss) + "/15 published entries not reproduced");
    o.detail << got.str() << "; ODE max rel " << fmt(worst_ode, 2);
}

// 3 ------------------------------------------------------------------------------------------------
void transform_oracle(Outcome& o) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> re(-0.8, 1.8), im(-20.0, 20.0), T(0.02, 5.0);
    const std::vector<CurrencyPair> pairs = {{"USD", "EUR"}, {"EUR", "JPY"}, {"JPY", "USD"}, {"EUR", "USD"}};
    int draws = 0, outside = 0, feller_bad = 0;
    double worst = 0.0, worst_mart = 0.0;
    while (draws < 500) {
        const auto s = random_system(rng);
        const auto& p = pairs[static_cast<std::size_t>(draws + outside) % pairs.size()];
        auto in = make_transform_input(s, p, cplx(re(rng), im(rng)), T(rng));
        cplx g;
        try {
            g = laplace_g(in);
        } catch (const StripViolation&) {
            ++outside;
            continue;
        }
        ++draws;
        for (const auto& f : s.factors) feller_bad += 2.0 * f.kappa * f.theta < f.xi * f.xi;
        const cplx oracle = riccati_oracle(in);
        worst = std::max(worst, std::abs(g - oracle) / std::abs(oracle));

        in.omega = 1.0;
        const double fwd = std::exp(in.x + (in.r_dom - in.r_for) * in.tau);
        worst_mart = std::max(worst_mart, std::abs(laplace_g(in) - fwd) / fwd);
    }
    o.check(worst <= 1e-9, "laplace_g vs oracle " + fmt(worst, 3));
    o.check(worst_mart <= 1e-12, "G(1) vs forward " + fmt(worst_mart, 3));
    o.check(feller_bad > 0, "no Feller-violating factor drawn");
    o.detail << "500 draws (" << outside << " redrawn outside the strip, " << feller_bad
             << " Feller-violating factors), max rel " << fmt(worst, 3) << ", martingale " << fmt(worst_mart, 3);
}

// 4 ------------------------------------------------------------------------------------------------
void pricing_consistency(Outcome& o) {
    const auto s = sample_set(6);
    const CurrencyPair pair{"USD", "EUR"};
    const std::vector<double> tenors = {1.0 / 12.0, 0.5, 1.0};
    const std::vector<DeltaPillar> pillars = {DeltaPillar::P25, DeltaPillar::DN, DeltaPillar::C25};
    const auto grid = model_smile(s, pair, tenors, pillars);
    SimConfig sc;
    sc.n_paths = 1000000;
    sc.steps_per_year = 8.0 * 52.0;
    sc.seed = 20240601;
    sc.scheme = VarianceScheme::QE;
    double worst = 0.0;
    for (std::size_t t = 0; t < tenors.size(); ++t) {
        std::vector<OptionType> types;
        for (auto p : pillars) types.push_back(pillar_option_type(p));
        const auto mc = mc_prices(s, pair, tenors[t], grid.strikes[t], types, sc);
        for (std::size_t j = 0; j < pillars.size(); ++j) {
            const double f = vanilla_price(s, {pair, grid.strikes[t][j], tenors[t], types[j]});
            const double z = std::abs(mc[j].price - f) / mc[j].std_error;
            worst = std::max(worst, z);
            o.check(z <= 3.0, "tenor " + fmt(tenors[t]) + " " + std::string(pillar_tag(pillars[j])) + " z=" + fmt(z, 3));
        }
    }

    // one factor, tiny vol of vol, uncorrelated
    CurrencySystem bs;
    bs.currencies = {"USD", "EUR"};
    bs.measure = "USD";
    bs.rates = {{"USD", 0.02}, {"EUR", 0.005}};
    bs.exposures = {{"USD", {0.3}}, {"EUR", {1.2}}};
    bs.factors = {{1.0, 0.02, 1e-4, 0.0, 0.02}};
    bs.spots = {{"USDEUR", 1.25}};
    const double sigma = std::sqrt(0.81 * 0.02);
    double worst_bs = 0.0;
    for (double K : {1.1, 1.2, 1.25, 1.3, 1.4})
        for (double tau : {0.25, 1.0, 3.0})
            for (auto type : {OptionType::Call, OptionType::Put}) {
                const double p = vanilla_price(bs, {pair, K, tau, type}, tight());
                const double g = gk_price(1.25, K, sigma, tau, 0.02, 0.005, type);
                worst_bs = std::max(worst_bs, rel(p, g));
            }
    o.check(worst_bs <= 1e-6, "Black-Scholes limit " + fmt(worst_bs, 3));
    o.detail << "3x3 grid at 1e6 paths, QE 8 steps/week, max |z| " << fmt(worst, 3) << "; BS limit max rel "
             << fmt(worst_bs, 3);
}

// 5 ------------------------------------------------------------------------------------------------
void symmetry_suite(Outcome& o) {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const std::vector<CurrencyPair> pairs = {{"USD", "EUR"}, {"EUR", "JPY"}, {"JPY", "USD"}};
    double worst_inv = 0.0, worst_gauge = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto s = random_system(rng);
        const auto& p = pairs[static_cast<std::size_t>(t) % pairs.size()];
        const double S = *s.spot(p), tau = 0.1 + 2.0 * U(rng), K = S * std::exp(0.4 * (U(rng) - 0.5));
        const auto qi = to_measure(s, p.dom), qj = to_measure(s, p.fgn);
        // C_i(S, K) = S K P_j(1/S, 1/K) and P_i(S, K) = S K C_j(1/S, 1/K)
        for (auto [a, b] : {std::pair{OptionType::Call, OptionType::Put}, std::pair{OptionType::Put, OptionType::Call}}) {
            const double lhs = vanilla_price(qi, {p, K, tau, a}, tight());
            const double rhs = S * K * vanilla_price(qj, {p.inverse(), 1.0 / K, tau, b}, tight());
            worst_inv = std::max(worst_inv, rel(rhs, lhs));
        }
        std::vector<double> shift(s.num_factors());
        for (auto& x : shift) x = 2.0 * U(rng) - 1.0;
        const auto g = shift_exposures(s, shift);
        const OptionSpec opt{p, K, tau, OptionType::Call};
        worst_gauge = std::max(worst_gauge, rel(vanilla_price(g, opt), vanilla_price(s, opt)));
    }
    o.check(worst_inv <= 1e-8, "inversion parity " + fmt(worst_inv, 3));
    o.check(worst_gauge <= 1e-12, "gauge shift " + fmt(worst_gauge, 3));

    SimConfig sc;
    sc.n_paths = 200000;
    sc.steps_per_year = 104.0;
    sc.seed = 5150;
    double worst_z = 0.0;
    std::mt19937_64 rs(71);
    std::vector<std::pair<CurrencySystem, std::array<std::string, 3>>> cases = {
        {sample_set(6), {"USD", "EUR", "JPY"}}, {sample_set(2), {"EUR", "JPY", "USD"}}, {random_system(rs), {"JPY", "USD", "EUR"}}};
    for (const auto& [sys, tri] : cases) {
        const auto rep = symmetry_report(sys, tri, 1.0, sc);
        worst_z = std::max(worst_z, std::abs(rep.cross_z));
        o.check(std::abs(rep.cross_z) <= 3.0, "triangulation " + tri[0] + tri[1] + tri[2] + " z=" + fmt(rep.cross_z, 3));
    }
    o.detail << "50 systems: inversion max rel " << fmt(worst_inv, 3) << ", gauge max rel " << fmt(worst_gauge, 3)
             << "; triangulation 3 triangles at 2e5 paths, max |z| " << fmt(worst_z, 3);
}

// 6 ------------------------------------------------------------------------------------------------
void expansion_orders(Outcome& o) {
    const auto s = sample_set(6);
    const double tau = 0.25;
    double min_slope = 1e300;
    for (const auto& p : kMainPairs) {
        const double F = *s.spot(p) * std::exp((s.rate(p.dom) - s.rate(p.fgn)) * tau);
        const auto q = to_measure(s, p.dom);
        std::vector<double> err;
        for (double alpha : {0.2, 0.1, 0.05}) {
            auto scaled = q;
            for (auto& f : scaled.factors) f.xi *= alpha;
            const OptionSpec opt{p, F, tau, OptionType::Call};
            err.push_back(std::abs(price_expansion(s, opt, alpha) - vanilla_price(scaled, opt, tight())));
        }
        const double slope = std::log(err[0] / err[2]) / std::log(4.0);
        min_slope = std::min(min_slope, slope);
        o.check(slope >= 2.7, p.code() + " slope " + fmt(slope, 3));

        const double s0 = instantaneous_variance(q, p.dom, p.fgn, q.initial_variances());
        o.check(implied_var_expansion(s, p, *s.spot(p), 1.0 / 52.0) == s0, p.code() + " not exact at the forward");
    }
    double worst = 0.0;
    const double week = 1.0 / 52.0;
    for (const auto& p : kMainPairs) {
        const auto g = model_smile(s, p, {week}, {DeltaPillar::P25, DeltaPillar::C25});
        for (std::size_t b = 0; b < 2; ++b) {
            const double d = std::abs(std::sqrt(implied_var_expansion(s, p, g.strikes[0][b], week)) - g.vols[0][b]);
            worst = std::max(worst, d);
            o.check(d <= 0.003, p.code() + " " + std::string(pillar_tag(g.pillars[b])) + " off by " + fmt(d * 100) + " vp");
        }
    }
    o.detail << "min slope " << fmt(min_slope, 3) << "; 25D one week max " << fmt(worst * 100, 3) << " vol points";
}

// 7 ------------------------------------------------------------------------------------------------
void calibration(Outcome& o) {
    std::mt19937_64 rng(2718);
    const auto hidden = random_system(rng);
    const std::vector<CurrencyPair> pairs{{"USD", "EUR"}, {"USD", "JPY"}, {"EUR", "JPY"}};
    const std::vector<double> tenors{1.0 / 12.0, 0.25, 0.5, 1.0, 2.0, 3.0};
    const std::vector<DeltaPillar> pillars{DeltaPillar::P10, DeltaPillar::P25, DeltaPillar::DN, DeltaPillar::C25,
                                           DeltaPillar::C15, DeltaPillar::C10};
    const auto quotes = synthesize_quotes(hidden, pairs, tenors, pillars);
    CalibConfig cfg;
    cfg.market = hidden;
    cfg.seed = 99;

    const auto fit = calibrate(quotes, cfg);
    double worst_fit = 0.0;
    for (const auto& e : fit.errors) worst_fit = std::max(worst_fit, std::abs(e.error));
    o.check(fit.errors.size() == quotes.size() && fit.penalized == 0, "quotes unpriced");
    o.check(worst_fit <= 0.05e-2, "max reprice error " + fmt(worst_fit * 100, 3) + " vp");

    const auto again = calibrate(quotes, cfg);
    o.check(encode(again.system) == encode(fit.system) && again.residual_norm == fit.residual_norm,
            "rerun with the same seed differs");

    const auto hold = holdout_report(quotes, 1.0, cfg);
    const double worst_hold = hold.max_abs_difference();
    o.check(!hold.rows.empty() && worst_hold <= 0.5e-2, "holdout " + fmt(worst_hold * 100, 3) + " vp");
    o.detail << quotes.size() << " quotes, max reprice " << fmt(worst_fit * 100, 3) << " vp ("
             << fit.stop_reason << "); holdout 2y/3y max " << fmt(worst_hold * 100, 3) << " vp; rerun identical";
}

// 8 ------------------------------------------------------------------------------------------------
void delta_conventions(Outcome& o) {
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0, worst_dn = 0.0;
    int combos = 0;
    for (int t = 0; t < 200; ++t) {
        const double S = 0.5 + 100.0 * U(rng), vol = 0.03 + 0.3 * U(rng), tau = 1.0 / 52.0 + 2.0 * U(rng);
        const double rd = -0.01 + 0.06 * U(rng), rf = -0.01 + 0.06 * U(rng);
        for (auto basis : {DeltaBasis::Forward, DeltaBasis::Spot})
            for (bool pa : {false, true}) {
                const DeltaConvention conv{basis, pa};
                for (auto pillar : kAllPillars) {
                    double K;
                    try {
                        K = strike_from_delta(pillar, conv, vol, S, tau, rd, rf);
                    } catch (const InfeasibleDelta&) {
                        continue;
                    }
                    ++combos;
                    double d;
                    if (pillar == DeltaPillar::DN)
                        d = std::abs(fx_delta(OptionType::Call, conv, S, K, vol, tau, rd, rf) +
                                     fx_delta(OptionType::Put, conv, S, K, vol, tau, rd, rf));
                    else
                        d = std::abs(fx_delta(pillar_option_type(pillar), conv, S, K, vol, tau, rd, rf) -
                                     pillar_delta(pillar));
                    worst = std::max(worst, d);
                }
            }
        const double F = S * std::exp((rd - rf) * tau);
        const double dn = strike_from_delta(DeltaPillar::DN, {}, vol, S, tau, rd, rf);
        worst_dn = std::max(worst_dn, rel(dn, F * std::exp(0.5 * vol * vol * tau)));
    }
    o.check(worst <= 1e-10, "delta mismatch " + fmt(worst, 3));
    o.check(worst_dn <= 1e-15, "DN closed form " + fmt(worst_dn, 3));
    o.detail << combos << " pillar/convention cases, max delta error " << fmt(worst, 3) << "; DN max rel "
             << fmt(worst_dn, 3);
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "Feller table", 1.0, feller_table},
        {2, "moment explosion table", 10.0, explosion_table},
        {3, "transform vs Riccati oracle", 60.0, transform_oracle},
        {4, "Fourier vs Monte Carlo, Black-Scholes limit", 600.0, pricing_consistency},
        {5, "symmetry suite", 600.0, symmetry_suite},
        {6, "expansion orders", 60.0, expansion_orders},
        {7, "synthetic calibration", 1800.0, calibration},
        {8, "delta conventions", 60.0, delta_conventions},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.check(secs <= c.limit_s, "runtime over " + fmt(c.limit_s) + " s");
        failed += !o.pass;
        std::cout << "CRITERION " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " " << c.name << " | "
                  << o.detail.str() << " | " << fmt(secs, 3) << " s\n"
                  << std::flush;
    }
    return failed == 0 ? 0 : 1;
}
