#include "mhfx/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "mhfx/errors.hpp"
#include "mhfx/expansions.hpp"
#include "mhfx/model_json.hpp"
#include "mhfx/parallel.hpp"

namespace mhfx {

namespace {

constexpr const char* kFactorFields[5] = {"kappa", "theta", "xi", "rho", "v0"};

void check_bounds(const Bounds& b, const char* name) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi)
        throw InvalidInput(std::string("bad bounds for ") + name);
}

}  // namespace

void ParamBounds::validate() const {
    check_bounds(kappa, "kappa");
    check_bounds(theta, "theta");
    check_bounds(xi, "xi");
    check_bounds(rho, "rho");
    check_bounds(v0, "v0");
    check_bounds(exposure, "exposure");
    if (kappa.lo <= 0.0) throw InvalidInput("kappa lower bound must be positive");
    if (theta.lo < 0.0 || v0.lo < 0.0 || xi.lo < 0.0) throw InvalidInput("variance bounds must be non-negative");
    if (rho.lo < -1.0 || rho.hi > 1.0) throw InvalidInput("rho bounds must lie in [-1, 1]");
}

std::vector<std::string> parameter_names(const CurrencySystem& layout) {
    std::vector<std::string> names;
    const std::size_t d = layout.num_factors();
    for (std::size_t k = 0; k < d; ++k)
        for (const char* f : kFactorFields) names.push_back(f + std::to_string(k + 1));
    for (const auto& c : layout.currencies)
        for (std::size_t k = 0; k < d; ++k) names.push_back("a_" + c + "_" + std::to_string(k + 1));
    return names;
}

std::vector<double> encode(const CurrencySystem& system) {
    std::vector<double> p;
    for (const auto& f : system.factors) p.insert(p.end(), {f.kappa, f.theta, f.xi, f.rho, f.v0});
    for (const auto& c : system.currencies) {
        const auto& a = system.exposures.at(c);
        if (a.size() != system.num_factors()) throw DimensionMismatch("exposure of " + c + " has the wrong size");
        p.insert(p.end(), a.begin(), a.end());
    }
    return p;
}

CurrencySystem decode(const std::vector<double>& params, const CurrencySystem& layout) {
    const std::size_t d = layout.num_factors();
    if (params.size() != d * (5 + layout.currencies.size()))
        throw DimensionMismatch("parameter vector does not match the layout");
    CurrencySystem s = layout;
    for (std::size_t k = 0; k < d; ++k) {
        const double* q = &params[5 * k];
        s.factors[k] = {q[0], q[1], q[2], q[3], q[4]};
    }
    std::size_t i = 5 * d;
    for (const auto& c : s.currencies) {
        s.exposures[c].assign(params.begin() + static_cast<std::ptrdiff_t>(i),
                              params.begin() + static_cast<std::ptrdiff_t>(i + d));
        i += d;
    }
    return s;
}

void CalibConfig::validate() const {
    bounds.validate();
    quad.validate();
    if (factors < 1) throw InvalidInput("at least one factor is required");
    if (multistart < 1) throw InvalidInput("multistart must be at least 1");
    if (max_iterations < 1) throw InvalidInput("max_iterations must be at least 1");
    if (!(jitter >= 0.0) || !(ridge >= 0.0) || !(penalty > 0.0)) throw InvalidInput("bad optimizer settings");
    if (market.currencies.empty()) throw InvalidInput("calibration needs the market currencies");
    if (!market.has_currency(market.measure)) throw InvalidInput("parameter measure must be a currency");
    for (const auto& [code, m] : measures) {
        const auto p = CurrencyPair::parse(code);
        if (m != p.dom && m != p.fgn) throw InvalidInput("measure for " + code + " must be one of its currencies");
    }
}

std::string CalibConfig::measure_for(const CurrencyPair& pair) const {
    if (auto it = measures.find(pair.code()); it != measures.end()) return it->second;
    return pair.dom;
}

std::vector<Target> resolve_targets(const QuoteSet& quotes, const CurrencySystem& market) {
    std::vector<Target> out;
    out.reserve(quotes.size());
    for (const auto& q : quotes) {
        q.validate();
        const double s = market.spot_or_throw(q.pair);
        const double k = strike_from_delta(q.pillar, q.convention, q.vol, s, q.tenor, market.rate(q.pair.dom),
                                           market.rate(q.pair.fgn));
        out.push_back({q, k});
    }
    return out;
}

std::vector<double> model_vols(const CurrencySystem& system, const std::vector<Target>& targets,
                               const CalibConfig& config) {
    std::vector<double> vols(targets.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& t = targets[i];
        const auto& p = t.quote.pair;
        const auto type = pillar_option_type(t.quote.pillar);
        try {
            const double s = system.spot_or_throw(p);
            const double price = vanilla_price_in_measure(system, {p, t.strike, t.quote.tenor, type, {}},
                                                          config.measure_for(p), config.quad);
            vols[i] = implied_vol(price, s, t.strike, t.quote.tenor, system.rate(p.dom), system.rate(p.fgn), type);
        } catch (const Error&) {
        }
    }
    return vols;
}

namespace {

struct Problem {
    const std::vector<Target>& targets;
    const CalibConfig& config;
    CurrencySystem layout;
    std::vector<double> lo, hi;
    std::vector<bool> free;
    std::size_t ridge_offset = 0;  // index of a^base_1 in the parameter vector

    Problem(const std::vector<Target>& t, const CalibConfig& c) : targets(t), config(c) {
        layout = c.market;
        layout.factors.assign(c.factors, FactorParams{});
        for (const auto& cur : layout.currencies) layout.exposures[cur].assign(c.factors, 0.0);
        const auto& b = c.bounds;
        for (std::size_t k = 0; k < c.factors; ++k)
            for (const auto& bb : {b.kappa, b.theta, b.xi, b.rho, b.v0}) {
                lo.push_back(bb.lo);
                hi.push_back(bb.hi);
            }
        ridge_offset = lo.size();
        for (std::size_t i = 0; i < layout.currencies.size() * c.factors; ++i) {
            lo.push_back(b.exposure.lo);
            hi.push_back(b.exposure.hi);
        }
        const auto names = parameter_names(layout);
        free.assign(names.size(), true);
        for (const auto& f : c.fixed) {
            const auto it = std::find(names.begin(), names.end(), f);
            if (it == names.end()) throw InvalidInput("unknown parameter '" + f + "'");
            free[static_cast<std::size_t>(it - names.begin())] = false;
        }
    }

    std::size_t size() const { return lo.size(); }

    // Vol residuals (model - market) followed by the ridge terms. Returns true if any quote was penalized.
    bool residuals(const std::vector<double>& x, Eigen::VectorXd& r) const {
        const std::size_t n = targets.size(), d = config.factors;
        r.resize(static_cast<Eigen::Index>(n + d));
        bool penalized = false;
        std::vector<double> vols;
        try {
            const auto sys = decode(x, layout);
            sys.validate();
            vols = model_vols(sys, targets, config);
        } catch (const Error&) {
            vols.assign(n, std::numeric_limits<double>::quiet_NaN());
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isfinite(vols[i])) {
                r[static_cast<Eigen::Index>(i)] = vols[i] - targets[i].quote.vol;
            } else {
                r[static_cast<Eigen::Index>(i)] = config.penalty;
                penalized = true;
            }
        }
        const double w = std::sqrt(config.ridge);
        for (std::size_t k = 0; k < d; ++k) r[static_cast<Eigen::Index>(n + k)] = w * x[ridge_offset + k];
        return penalized;
    }

    std::vector<double> project(std::vector<double> x) const {
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], lo[j], hi[j]);
        return x;
    }
};

struct RunResult {
    std::vector<double> x;
    double f = 0.0;  // with ridge
    std::size_t iterations = 0, evaluations = 0, penalized = 0;
    bool converged = false;
    std::string reason;
};

RunResult levenberg_marquardt(const Problem& pb, std::vector<double> x) {
    const auto& cfg = pb.config;
    const std::size_t np = pb.size();
    RunResult out;
    Eigen::VectorXd r, rt;
    auto eval = [&](const std::vector<double>& p, Eigen::VectorXd& res) {
        ++out.evaluations;
        if (pb.residuals(p, res)) ++out.penalized;
        return res.squaredNorm();
    };
    double f = eval(x, r);
    double lambda = 1e-3;
    Eigen::MatrixXd J(r.size(), static_cast<Eigen::Index>(np));

    for (out.iterations = 0; out.iterations < cfg.max_iterations; ++out.iterations) {
        // the ridge only pins the gauge and takes no part in this test
        if (r.head(static_cast<Eigen::Index>(pb.targets.size())).squaredNorm() <= cfg.fatol) {
            out.converged = true;
            out.reason = "objective below fatol";
            break;
        }
        J.setZero();
        for (std::size_t j = 0; j < np; ++j) {
            if (!pb.free[j]) continue;
            double h = 1e-6 * (1.0 + std::abs(x[j]));
            if (x[j] + h > pb.hi[j]) h = -h;
            auto xp = x;
            xp[j] += h;
            eval(xp, rt);
            J.col(static_cast<Eigen::Index>(j)) = (rt - r) / h;
        }
        const Eigen::VectorXd g = J.transpose() * r;
        // active set: free parameters not pinned at a bound by the gradient
        std::vector<Eigen::Index> act;
        for (std::size_t j = 0; j < np; ++j) {
            if (!pb.free[j]) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            const double eps = 1e-9 * (pb.hi[j] - pb.lo[j]);
            if (x[j] <= pb.lo[j] + eps && g[jj] > 0.0) continue;
            if (x[j] >= pb.hi[j] - eps && g[jj] < 0.0) continue;
            act.push_back(jj);
        }
        double gnorm = 0.0;
        for (auto j : act) gnorm = std::max(gnorm, std::abs(g[j]));
        if (act.empty() || gnorm <= cfg.gtol) {
            out.converged = true;
            out.reason = "projected gradient";
            break;
        }
        const auto na = static_cast<Eigen::Index>(act.size());
        Eigen::MatrixXd Ja(J.rows(), na);
        Eigen::VectorXd ga(na);
        for (Eigen::Index a = 0; a < na; ++a) {
            Ja.col(a) = J.col(act[static_cast<std::size_t>(a)]);
            ga[a] = g[act[static_cast<std::size_t>(a)]];
        }
        const Eigen::MatrixXd A = Ja.transpose() * Ja;
        // Marquardt scaling, floored in box-normalised units so that insensitive parameters are not flung
        // to their bounds when the fit is underdetermined
        Eigen::VectorXd range(na);
        for (Eigen::Index a = 0; a < na; ++a) {
            const auto j = static_cast<std::size_t>(act[static_cast<std::size_t>(a)]);
            range[a] = std::max(pb.hi[j] - pb.lo[j], 1e-12);
        }
        const double top = (A.diagonal().array() * range.array().square()).maxCoeff();
        Eigen::VectorXd D = A.diagonal().cwiseMax((1e-2 * std::max(top, 1e-300)) * range.array().square().inverse().matrix());

        bool accepted = false;
        double f_new = f;
        std::vector<double> x_new;
        while (lambda <= 1e12) {
            Eigen::MatrixXd M = A;
            M.diagonal() += lambda * D;
            const Eigen::VectorXd step = M.ldlt().solve(-ga);
            x_new = x;
            for (Eigen::Index a = 0; a < na; ++a) {
                const auto j = static_cast<std::size_t>(act[static_cast<std::size_t>(a)]);
                x_new[j] = std::clamp(x[j] + step[a], pb.lo[j], pb.hi[j]);
            }
            if (x_new == x) {
                lambda *= 4.0;
                continue;
            }
            f_new = eval(x_new, rt);
            if (f_new < f) {
                accepted = true;
                lambda = std::max(lambda / 3.0, 1e-12);
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            out.converged = true;
            out.reason = "no descent step";
            break;
        }
        double dx = 0.0, xs = 0.0;
        for (std::size_t j = 0; j < np; ++j) {
            dx = std::max(dx, std::abs(x_new[j] - x[j]));
            xs = std::max(xs, std::abs(x[j]));
        }
        const double decrease = f - f_new;
        x = std::move(x_new);
        f = f_new;
        r = rt;
        if (decrease <= cfg.ftol * f) {
            out.converged = true;
            out.reason = "relative decrease";
            ++out.iterations;
            break;
        }
        if (dx <= cfg.xtol * (xs + cfg.xtol)) {
            out.converged = true;
            out.reason = "step size";
            ++out.iterations;
            break;
        }
    }
    if (!out.converged) out.reason = "iteration budget";
    out.x = std::move(x);
    out.f = f;
    return out;
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::vector<double> jittered(const Problem& pb, const std::vector<double>& x0, std::size_t start) {
    if (start == 0) return x0;
    std::mt19937_64 gen(mix(pb.config.seed ^ mix(start)));
    std::normal_distribution<double> N;
    auto x = x0;
    const auto names = parameter_names(pb.layout);
    const double s = pb.config.jitter;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double z = N(gen);
        if (!pb.free[j]) continue;
        if (names[j].rfind("rho", 0) == 0)
            x[j] += 0.5 * s * z;
        else if (names[j].rfind("a_", 0) == 0)
            x[j] = x[j] * (1.0 + s * z) + 0.1 * s * N(gen);
        else
            x[j] *= std::exp(s * z);
    }
    return pb.project(x);
}

CalibResult finish(const Problem& pb, const std::vector<double>& x) {
    CalibResult res;
    res.system = decode(x, pb.layout);
    std::vector<double> vols;
    try {
        vols = model_vols(res.system, pb.targets, pb.config);
    } catch (const Error&) {
        vols.assign(pb.targets.size(), std::numeric_limits<double>::quiet_NaN());
    }
    // summed exactly as in objective()
    Eigen::VectorXd r(static_cast<Eigen::Index>(pb.targets.size()));
    for (std::size_t i = 0; i < pb.targets.size(); ++i) {
        const auto& t = pb.targets[i];
        res.errors.push_back({t.quote, t.strike, vols[i], t.quote.vol - vols[i]});
        r[static_cast<Eigen::Index>(i)] = std::isfinite(vols[i]) ? vols[i] - t.quote.vol : pb.config.penalty;
    }
    res.residual_norm = r.squaredNorm();
    return res;
}

}  // namespace

double objective(const std::vector<double>& params, const std::vector<Target>& targets, const CalibConfig& config) {
    const Problem pb(targets, config);
    Eigen::VectorXd r;
    pb.residuals(params, r);
    return r.head(static_cast<Eigen::Index>(targets.size())).squaredNorm();
}

CalibResult calibrate(const QuoteSet& quotes, const CalibConfig& config) {
    config.validate();
    if (quotes.empty()) throw InsufficientQuotes("no quotes to calibrate");
    const auto targets = resolve_targets(quotes, config.market);
    for (const auto& t : targets)
        if (!config.market.has_currency(t.quote.pair.dom) || !config.market.has_currency(t.quote.pair.fgn))
            throw UnknownCurrency("quote pair " + t.quote.pair.code() + " is not in the market");
    const Problem pb(targets, config);

    // Starts: the guess turned through [0, pi/2) in the plane of the first two factors (the pair variances
    // fix the currency configuration only up to a rotation), restarts also jittered.
    std::vector<std::vector<double>> x0(config.multistart);
    for (std::size_t s = 0; s < config.multistart; ++s) {
        const double phi = 0.5 * M_PI * static_cast<double>(s) / static_cast<double>(config.multistart);
        CurrencySystem start = config.start ? *config.start : initial_guess(quotes, {config.market, config.factors, phi});
        start.measure = config.market.measure;
        if (start.num_factors() != config.factors) throw DimensionMismatch("starting system has the wrong factor count");
        x0[s] = jittered(pb, pb.project(encode(decode(encode(start), pb.layout))), s);
    }

    std::vector<RunResult> runs(config.multistart);
    parallel_for(config.multistart, config.jobs, [&](std::size_t s) { runs[s] = levenberg_marquardt(pb, x0[s]); });

    std::size_t best = 0;
    for (std::size_t s = 1; s < runs.size(); ++s)
        if (runs[s].f < runs[best].f) best = s;
    CalibResult res = finish(pb, runs[best].x);
    res.best_start = best;
    res.converged = runs[best].converged;
    res.stop_reason = runs[best].reason;
    for (const auto& r : runs) {
        res.iterations += r.iterations;
        res.evaluations += r.evaluations;
        res.penalized += r.penalized;
        res.start_objectives.push_back(r.f);
    }
    return res;
}

double HoldoutReport::max_abs_difference() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::isfinite(r.difference) ? std::abs(r.difference) : INFINITY);
    return m;
}

HoldoutReport holdout_report(const QuoteSet& quotes, double cutoff, const CalibConfig& config) {
    QuoteSet in, out;
    for (const auto& q : quotes) (q.tenor <= cutoff ? in : out).push_back(q);
    if (in.empty() || out.empty()) throw InvalidInput("tenor cutoff must leave quotes on both sides");
    HoldoutReport rep;
    rep.cutoff = cutoff;
    rep.fit = calibrate(in, config);
    const auto targets = resolve_targets(out, config.market);
    const auto vols = model_vols(rep.fit.system, targets, config);
    for (std::size_t i = 0; i < targets.size(); ++i)
        rep.rows.push_back({targets[i].quote, vols[i], targets[i].quote.vol - vols[i]});
    return rep;
}

namespace {

nlohmann::json quote_json(const VolQuote& q) {
    return {{"pair", q.pair.code()},
            {"tenor_years", q.tenor},
            {"pillar", std::string(pillar_tag(q.pillar))},
            {"market_vol", q.vol}};
}

}  // namespace

nlohmann::json to_json(const CalibResult& result) {
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : result.errors) {
        auto j = quote_json(e.quote);
        j["strike"] = e.strike;
        j["model_vol"] = e.model_vol;
        j["error"] = e.error;
        errors.push_back(j);
    }
    return {{"system", system_to_json(result.system)},
            {"residual_norm", result.residual_norm},
            {"errors", errors},
            {"iterations", result.iterations},
            {"evaluations", result.evaluations},
            {"penalized", result.penalized},
            {"best_start", result.best_start},
            {"start_objectives", result.start_objectives},
            {"converged", result.converged},
            {"stop_reason", result.stop_reason}};
}

nlohmann::json to_json(const HoldoutReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        auto j = quote_json(r.quote);
        j["model_vol"] = r.model_vol;
        j["difference"] = r.difference;
        rows.push_back(j);
    }
    return {{"cutoff", report.cutoff}, {"fit", to_json(report.fit)}, {"holdout", rows}};
}

void apply_json(CalibConfig& config, const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("calibration config must be a JSON object");
    static const std::set<std::string> known = {"factors", "fixed",    "bounds", "measures", "multistart",
                                                "jitter",  "max_iterations", "ftol", "fatol", "xtol", "gtol",
                                                "ridge",   "penalty",  "seed",   "quad"};
    try {
        for (const auto& [key, _] : doc.items())
            if (!known.count(key)) throw ParseError("unknown calibration setting '" + key + "'");
        auto get = [&](const char* key, auto& dst) {
            if (doc.contains(key)) doc.at(key).get_to(dst);
        };
        get("factors", config.factors);
        get("fixed", config.fixed);
        get("measures", config.measures);
        get("multistart", config.multistart);
        get("jitter", config.jitter);
        get("max_iterations", config.max_iterations);
        get("ftol", config.ftol);
        get("fatol", config.fatol);
        get("xtol", config.xtol);
        get("gtol", config.gtol);
        get("ridge", config.ridge);
        get("penalty", config.penalty);
        get("seed", config.seed);
        if (doc.contains("bounds")) {
            auto& b = config.bounds;
            const std::map<std::string, Bounds*> slots = {{"kappa", &b.kappa}, {"theta", &b.theta}, {"xi", &b.xi},
                                                          {"rho", &b.rho},     {"v0", &b.v0},       {"exposure", &b.exposure}};
            for (const auto& [key, val] : doc.at("bounds").items()) {
                const auto it = slots.find(key);
                if (it == slots.end()) throw ParseError("unknown bound '" + key + "'");
                const auto pair = val.get<std::vector<double>>();
                if (pair.size() != 2) throw ParseError("bound '" + key + "' needs [lo, hi]");
                *it->second = {pair[0], pair[1]};
            }
        }
        if (doc.contains("quad")) {
            const auto& q = doc.at("quad");
            if (q.contains("contour_im")) q.at("contour_im").get_to(config.quad.contour_im);
            if (q.contains("abs_tol")) q.at("abs_tol").get_to(config.quad.abs_tol);
            if (q.contains("rel_tol")) q.at("rel_tol").get_to(config.quad.rel_tol);
            if (q.contains("max_truncation")) q.at("max_truncation").get_to(config.quad.max_truncation);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("calibration config: ") + e.what());
    }
}

}  // namespace mhfx
