#include "mhfx/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mhfx/black_scholes.hpp"
#include "mhfx/calibration.hpp"
#include "mhfx/diagnostics.hpp"
#include "mhfx/errors.hpp"
#include "mhfx/expansions.hpp"
#include "mhfx/fourier.hpp"
#include "mhfx/model_json.hpp"
#include "mhfx/monte_carlo.hpp"
#include "mhfx/quotes.hpp"

#ifndef MHFX_VERSION
#define MHFX_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace mhfx::cli {

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

nlohmann::json rounded(const nlohmann::json& doc) {
    if (doc.is_number_float()) {
        const double x = doc.get<double>();
        if (!std::isfinite(x)) return doc;
        return std::strtod(format_number(x).c_str(), nullptr);
    }
    if (doc.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : doc.items()) out[k] = rounded(v);
        return out;
    }
    if (doc.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : doc) out.push_back(rounded(v));
        return out;
    }
    return doc;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json in = nlohmann::json::object();
    for (const auto& [path, h] : inputs) in[path] = hex64(h);
    return {{"command", command}, {"config_hash", hex64(config_hash)}, {"inputs", in},
            {"seed", seed},       {"version", version},                {"timestamp", timestamp}};
}

std::string strip_manifest_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out += line + "\n";
    return out;
}

nlohmann::json strip_manifest_json(nlohmann::json doc) {
    if (doc.is_object()) doc.erase("manifest");
    return doc;
}

double parse_tenor(std::string_view text) {
    if (text.empty()) throw InvalidInput("empty tenor");
    double unit = 1.0;
    switch (text.back()) {
        case 'd': case 'D': unit = 1.0 / 365.0; break;
        case 'w': case 'W': unit = 1.0 / 52.0; break;
        case 'm': case 'M': unit = 1.0 / 12.0; break;
        case 'y': case 'Y': unit = 1.0; break;
        default: unit = 0.0;
    }
    if (unit != 0.0) text.remove_suffix(1);
    else unit = 1.0;
    double v = 0.0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || !(v > 0.0))
        throw InvalidInput("bad tenor '" + std::string(text) + "'");
    return v * unit;
}

namespace {

// Flags shared by several subcommands; each subcommand binds the ones it uses.
struct Options {
    std::string model, quotes, config, measure, pair, out, raw_paths, type = "call", method = "fourier";
    std::string scheme = "euler", delta_basis = "forward", tau = "1y", horizon = "1y";
    std::vector<std::string> tenors, pillars, pairs, fixed;
    std::vector<double> strikes;
    double strike = 0.0, alpha = 1.0, steps_per_year = 52.0, holdout_cutoff = 0.0;
    std::optional<double> spot;
    std::uint64_t seed = 42;
    unsigned jobs = 0;
    std::size_t paths = 100000, factors = 2, multistart = 4, max_order = 5;
    bool premium_adjusted = false, no_antithetic = false;
    QuadratureConfig quad;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Hash over every option that was given, except those that cannot change the output.
RunManifest make_manifest(const CLI::App& sub, const Options& o) {
    RunManifest m;
    m.command = sub.get_name();
    m.seed = o.seed;
    m.version = MHFX_VERSION;
    m.timestamp = timestamp();
    std::vector<std::string> parts;
    for (const CLI::Option* opt : sub.get_options()) {
        const auto name = opt->get_name();
        if (opt->count() == 0 || name == "--out" || name == "--jobs" || name == "--help") continue;
        std::string s = name + "=";
        for (const auto& r : opt->results()) s += r + ",";
        parts.push_back(s);
    }
    std::sort(parts.begin(), parts.end());
    std::string canon = m.command;
    for (const auto& p : parts) canon += ";" + p;
    m.config_hash = fnv1a(canon);
    for (const auto* path : {&o.model, &o.quotes, &o.config})
        if (!path->empty()) m.inputs[*path] = fnv1a(slurp(*path));
    return m;
}

class Sink {
public:
    Sink(const Options& o, RunManifest m, std::ostream& out) : dir_(o.out), manifest_(std::move(m)), out_(out) {
        if (!dir_.empty()) fs::create_directories(dir_);
    }

    void csv(const std::string& name, const std::string& body) {
        write(name, "# manifest " + manifest_.to_json().dump() + "\n" + body);
    }

    void json(const std::string& name, nlohmann::json doc) {
        doc = rounded(doc);
        doc["manifest"] = manifest_.to_json();
        write(name, doc.dump(2) + "\n");
    }

private:
    void write(const std::string& name, const std::string& text) {
        if (dir_.empty()) {
            out_ << text;
            return;
        }
        const fs::path path = fs::path(dir_) / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw InvalidInput("cannot write " + path.string());
        f << text;
        out_ << path.string() << "\n";
    }

    std::string dir_;
    RunManifest manifest_;
    std::ostream& out_;
};

std::string row(std::initializer_list<std::string> cells) {
    std::string s;
    for (const auto& c : cells) s += (s.empty() ? "" : ",") + c;
    return s + "\n";
}

std::string num(double x) { return format_number(x); }

DeltaConvention convention(const Options& o) {
    return {parse_delta_basis(o.delta_basis), o.premium_adjusted};
}

std::vector<double> tenor_list(const std::vector<std::string>& v) {
    std::vector<double> out;
    for (const auto& s : v) out.push_back(parse_tenor(s));
    return out;
}

std::vector<DeltaPillar> pillar_list(const std::vector<std::string>& v) {
    if (v.empty()) return {kAllPillars.begin(), kAllPillars.end()};
    std::vector<DeltaPillar> out;
    for (const auto& s : v) out.push_back(parse_pillar(s));
    return out;
}

double implied_or_nan(double price, const CurrencySystem& s, const CurrencyPair& p, double spot, double k, double tau,
                      OptionType type) {
    try {
        return implied_vol(price, spot, k, tau, s.rate(p.dom), s.rate(p.fgn), type);
    } catch (const Error&) {
        return std::nan("");
    }
}

void cmd_price(const CLI::App& sub, const Options& o, std::ostream& out) {
    const auto sys = load_system(o.model);
    const auto pair = CurrencyPair::parse(o.pair);
    const double tau = parse_tenor(o.tau);
    const OptionSpec opt{pair, o.strike, tau, parse_option_type(o.type), o.spot};
    const std::string measure = o.measure.empty() ? pair.dom : o.measure;
    McEstimate est;
    if (o.method == "fourier") {
        est.price = vanilla_price_in_measure(sys, opt, measure, o.quad);
        est.std_error = std::nan("");
    } else {
        SimConfig sc;
        sc.n_paths = o.paths;
        sc.steps_per_year = o.steps_per_year;
        sc.seed = o.seed;
        sc.scheme = parse_scheme(o.scheme);
        sc.measure = measure;
        sc.antithetic = !o.no_antithetic;
        sc.jobs = o.jobs;
        est = mc_price(sys, opt, sc);
    }
    const double spot = o.spot ? *o.spot : sys.spot_or_throw(pair);
    const double iv = implied_or_nan(est.price, sys, pair, spot, o.strike, tau, opt.type);
    Sink sink(o, make_manifest(sub, o), out);
    sink.csv("price.csv", row({"pair", "strike", "tau", "type", "measure", "method", "price", "std_error", "implied_vol"}) +
                              row({pair.code(), num(o.strike), num(tau), o.type, measure, o.method, num(est.price),
                                   num(est.std_error), num(iv)}));
}

void cmd_smile(const CLI::App& sub, const Options& o, std::ostream& out) {
    const auto sys = load_system(o.model);
    const auto pair = CurrencyPair::parse(o.pair);
    const auto grid = model_smile(sys, pair, tenor_list(o.tenors), pillar_list(o.pillars), convention(o), o.quad,
                                  o.measure);
    std::string body = row({"pair", "tenor_years", "pillar", "strike", "vol", "iterations"});
    for (std::size_t t = 0; t < grid.tenors.size(); ++t)
        for (std::size_t p = 0; p < grid.pillars.size(); ++p)
            body += row({pair.code(), num(grid.tenors[t]), std::string(pillar_tag(grid.pillars[p])),
                         num(grid.strikes[t][p]), num(grid.vols[t][p]), std::to_string(grid.iterations[t][p])});
    Sink(o, make_manifest(sub, o), out).csv("smile_" + pair.code() + ".csv", body);
}

void cmd_calibrate(const CLI::App& sub, const Options& o, std::ostream& out, std::ostream& err) {
    const auto quotes = load_quotes(o.quotes);
    CalibConfig cfg;
    cfg.market = load_system(o.model);
    if (!o.config.empty()) {
        try {
            apply_json(cfg, nlohmann::json::parse(slurp(o.config)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(o.config + ": " + e.what());
        }
    }
    if (sub.count("--factors")) cfg.factors = o.factors;
    if (sub.count("--multistart")) cfg.multistart = o.multistart;
    if (sub.count("--fix")) cfg.fixed = o.fixed;
    if (sub.count("--seed") || o.config.empty()) cfg.seed = o.seed;
    if (sub.count("--contour-im")) cfg.quad.contour_im = o.quad.contour_im;
    if (sub.count("--quad-tol")) cfg.quad.abs_tol = o.quad.abs_tol;
    if (sub.count("--quad-max-u")) cfg.quad.max_truncation = o.quad.max_truncation;
    cfg.jobs = o.jobs;

    std::optional<HoldoutReport> hold;
    CalibResult res;
    if (sub.count("--holdout-cutoff")) {
        hold = holdout_report(quotes, o.holdout_cutoff, cfg);
        res = hold->fit;
    } else {
        res = calibrate(quotes, cfg);
    }
    if (!res.converged) err << "warning: calibration stopped on " << res.stop_reason << "; best point returned\n";

    auto manifest = make_manifest(sub, o);
    manifest.seed = cfg.seed;
    Sink sink(o, manifest, out);
    sink.json("calib_result.json", to_json(res));
    std::string cmp = row({"pair", "tenor_years", "pillar", "strike", "market_vol", "model_vol", "error"});
    for (const auto& e : res.errors)
        cmp += row({e.quote.pair.code(), num(e.quote.tenor), std::string(pillar_tag(e.quote.pillar)), num(e.strike),
                    num(e.quote.vol), num(e.model_vol), num(e.error)});
    sink.csv("smile_comparison.csv", cmp);
    if (hold) {
        std::string h = row({"pair", "tenor_years", "pillar", "market_vol", "model_vol", "difference"});
        for (const auto& r : hold->rows)
            h += row({r.quote.pair.code(), num(r.quote.tenor), std::string(pillar_tag(r.quote.pillar)),
                      num(r.quote.vol), num(r.model_vol), num(r.difference)});
        sink.csv("holdout.csv", h);
    }
}

void cmd_transform(const CLI::App& sub, const Options& o, std::ostream& out) {
    const auto moved = to_measure(load_system(o.model), o.measure);
    Sink(o, make_manifest(sub, o), out).json("model_" + o.measure + ".json", system_to_json(moved));
}

void cmd_diagnose(const CLI::App& sub, const Options& o, std::ostream& out) {
    auto sys = load_system(o.model);
    if (!o.measure.empty()) sys = to_measure(sys, o.measure);
    const auto fr = feller_gap(sys);
    std::string head = "measure", line = fr.measure;
    for (std::size_t k = 0; k < fr.gap.size(); ++k) {
        head += ",gap_" + std::to_string(k + 1);
        line += "," + num(fr.gap[k]);
    }
    std::vector<CurrencyPair> pairs;
    for (const auto& p : o.pairs) pairs.push_back(CurrencyPair::parse(p));
    if (pairs.empty())
        for (std::size_t i = 0; i < sys.currencies.size(); ++i)
            for (std::size_t j = i + 1; j < sys.currencies.size(); ++j)
                pairs.push_back({sys.currencies[i], sys.currencies[j]});
    std::string expl = row({"pair", "order", "time"});
    for (const auto& p : pairs) {
        const auto rep = explosion_report(sys, p, static_cast<int>(o.max_order));
        for (std::size_t i = 0; i < rep.orders.size(); ++i)
            expl += row({p.code(), num(rep.orders[i]), num(rep.times[i])});
    }
    Sink sink(o, make_manifest(sub, o), out);
    sink.csv("feller.csv", head + "\n" + line + "\n");
    sink.csv("explosion.csv", expl);
}

double quantile(std::vector<double>& v, double q) {
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

void cmd_simulate(const CLI::App& sub, const Options& o, std::ostream& out) {
    const auto sys = load_system(o.model);
    std::vector<CurrencyPair> pairs;
    for (const auto& p : o.pairs) pairs.push_back(CurrencyPair::parse(p));
    SimConfig sc;
    sc.n_paths = o.paths;
    sc.steps_per_year = o.steps_per_year;
    sc.horizon = parse_tenor(o.horizon);
    sc.seed = o.seed;
    sc.scheme = parse_scheme(o.scheme);
    sc.measure = o.measure;
    sc.antithetic = !o.no_antithetic;
    sc.jobs = o.jobs;
    const auto ps = simulate(sys, pairs, sc);
    const auto manifest = make_manifest(sub, o);

    std::string body = row({"t", "series", "mean", "std", "q05", "q50", "q95"});
    std::vector<double> x(ps.n_paths);
    auto summarise = [&](double t, const std::string& name) {
        const double n = static_cast<double>(x.size());
        double mean = 0.0, ss = 0.0;
        for (double v : x) mean += v;
        mean /= n;
        for (double v : x) ss += (v - mean) * (v - mean);
        const double sd = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        const double q05 = quantile(x, 0.05), q50 = quantile(x, 0.5), q95 = quantile(x, 0.95);
        body += row({num(t), name, num(mean), num(sd), num(q05), num(q50), num(q95)});
    };
    for (std::size_t t = 0; t < ps.times.size(); ++t) {
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            for (std::size_t i = 0; i < ps.n_paths; ++i) x[i] = std::exp(ps.log_spot(i, t, p));
            summarise(ps.times[t], pairs[p].code());
        }
        for (std::size_t k = 0; k < ps.n_factors; ++k) {
            for (std::size_t i = 0; i < ps.n_paths; ++i) x[i] = ps.variance(i, t, k);
            summarise(ps.times[t], "V" + std::to_string(k + 1));
        }
    }
    Sink sink(o, manifest, out);
    sink.csv("simulation_summary.csv", body);

    if (!o.raw_paths.empty()) {
        std::ofstream f(o.raw_paths, std::ios::binary);
        if (!f) throw InvalidInput("cannot write " + o.raw_paths);
        f << "# manifest " << manifest.to_json().dump() << "\n" << "path,t";
        for (const auto& p : pairs) f << "," << p.code();
        for (std::size_t k = 0; k < ps.n_factors; ++k) f << ",V" << k + 1;
        f << "\n";
        for (std::size_t i = 0; i < ps.n_paths; ++i)
            for (std::size_t t = 0; t < ps.times.size(); ++t) {
                f << i << "," << num(ps.times[t]);
                for (std::size_t p = 0; p < pairs.size(); ++p) f << "," << num(std::exp(ps.log_spot(i, t, p)));
                for (std::size_t k = 0; k < ps.n_factors; ++k) f << "," << num(ps.variance(i, t, k));
                f << "\n";
            }
    }
}

void cmd_expand(const CLI::App& sub, const Options& o, std::ostream& out) {
    const auto sys = load_system(o.model);
    const auto pair = CurrencyPair::parse(o.pair);
    const double tau = parse_tenor(o.tau);
    const auto type = parse_option_type(o.type);
    // Fourier comparand with the same scaling of xi in the domestic measure
    auto scaled = to_measure(sys, pair.dom);
    for (auto& f : scaled.factors) f.xi *= o.alpha;
    const double spot = sys.spot_or_throw(pair);
    std::string body = row({"pair", "strike", "tau", "type", "alpha", "expansion_price", "fourier_price", "difference",
                            "expansion_vol", "fourier_vol", "short_expiry_vol"});
    for (double k : o.strikes) {
        const OptionSpec opt{pair, k, tau, type, {}};
        const double e = price_expansion(sys, opt, o.alpha);
        const double f = vanilla_price(scaled, opt, o.quad);
        const double ev = implied_or_nan(e, sys, pair, spot, k, tau, type);
        const double fv = implied_or_nan(f, sys, pair, spot, k, tau, type);
        const double sv = std::sqrt(implied_var_expansion(sys, pair, k, tau, o.alpha));
        body += row({pair.code(), num(k), num(tau), o.type, num(o.alpha), num(e), num(f), num(e - f), num(ev), num(fv),
                     num(sv)});
    }
    Sink(o, make_manifest(sub, o), out).csv("expansion_" + pair.code() + ".csv", body);
}

void add_quad(CLI::App* s, Options& o) {
    s->add_option("--contour-im", o.quad.contour_im, "Im(lambda) of the Fourier contour")->capture_default_str();
    s->add_option("--quad-tol", o.quad.abs_tol, "absolute quadrature tolerance")->capture_default_str();
    s->add_option("--quad-max-u", o.quad.max_truncation, "largest |Re lambda| before giving up")->capture_default_str();
}

void add_sim(CLI::App* s, Options& o) {
    s->add_option("--paths", o.paths, "number of paths")->capture_default_str();
    s->add_option("--steps-per-year", o.steps_per_year, "time steps per year")->capture_default_str();
    s->add_option("--scheme", o.scheme, "variance scheme: euler | qe")->capture_default_str();
    s->add_flag("--no-antithetic", o.no_antithetic, "disable antithetic variates");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Multi-factor Heston multi-currency FX model toolkit", "mhfx"};
    app.set_version_flag("--version", MHFX_VERSION);
    app.require_subcommand(1);

    auto common = [&](CLI::App* s) {
        s->add_option("--out", o.out, "output directory (default: stdout)");
        s->add_option("--seed", o.seed, "random seed")->capture_default_str();
        s->add_option("--jobs", o.jobs, "worker threads (0 = all cores)")->capture_default_str();
    };

    auto* price = app.add_subcommand("price", "price a vanilla and its implied vol");
    price->add_option("--model", o.model, "model JSON")->required()->check(CLI::ExistingFile);
    price->add_option("--pair", o.pair, "pair code, e.g. USDEUR")->required();
    price->add_option("--strike", o.strike, "strike")->required();
    price->add_option("--tau", o.tau, "expiry (years or 1w/6m/2y)")->required();
    price->add_option("--type", o.type, "call | put")->capture_default_str();
    price->add_option("--measure", o.measure, "pricing measure (default: domestic)");
    price->add_option("--spot", o.spot, "spot override");
    price->add_option("--method", o.method, "fourier | mc")->check(CLI::IsMember({"fourier", "mc"}))->capture_default_str();
    add_sim(price, o);
    add_quad(price, o);
    common(price);

    auto* smile = app.add_subcommand("smile", "model implied vols on a tenor x pillar grid");
    smile->add_option("--model", o.model, "model JSON")->required()->check(CLI::ExistingFile);
    smile->add_option("--pair", o.pair, "pair code")->required();
    smile->add_option("--tenors", o.tenors, "comma separated tenors")->required()->delimiter(',');
    smile->add_option("--pillars", o.pillars, "comma separated pillars (default all)")->delimiter(',');
    smile->add_option("--measure", o.measure, "pricing measure (default: domestic)");
    smile->add_option("--delta-basis", o.delta_basis, "spot | forward")->capture_default_str();
    smile->add_flag("--premium-adjusted", o.premium_adjusted, "premium-adjusted deltas");
    add_quad(smile, o);
    common(smile);

    auto* calib = app.add_subcommand("calibrate", "joint least-squares fit to vol quotes");
    calib->add_option("--quotes", o.quotes, "quote CSV")->required()->check(CLI::ExistingFile);
    calib->add_option("--model", o.model, "market template JSON (currencies, rates, spots, measure)")
        ->required()
        ->check(CLI::ExistingFile);
    calib->add_option("--config", o.config, "calibration settings JSON")->check(CLI::ExistingFile);
    calib->add_option("--factors", o.factors, "number of factors")->capture_default_str();
    calib->add_option("--multistart", o.multistart, "number of starts")->capture_default_str();
    calib->add_option("--fix", o.fixed, "parameter held fixed, e.g. kappa1 (repeatable)")->delimiter(',');
    calib->add_option("--holdout-cutoff", o.holdout_cutoff, "fit tenors <= cutoff, report the rest");
    add_quad(calib, o);
    common(calib);

    auto* trans = app.add_subcommand("transform", "re-express a model in another measure");
    trans->add_option("--model", o.model, "model JSON")->required()->check(CLI::ExistingFile);
    trans->add_option("--measure", o.measure, "target currency or NUMERAIRE0")->required();
    common(trans);

    auto* diag = app.add_subcommand("diagnose", "Feller gaps and moment explosion times");
    diag->add_option("--model", o.model, "model JSON")->required()->check(CLI::ExistingFile);
    diag->add_option("--pair", o.pairs, "pairs to report (default all)")->delimiter(',');
    diag->add_option("--measure", o.measure, "measure for the Feller table (default: the model's)");
    diag->add_option("--max-order", o.max_order, "highest moment order")->capture_default_str();
    common(diag);

    auto* sim = app.add_subcommand("simulate", "simulate spots and variances, write summaries");
    sim->add_option("--model", o.model, "model JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--pair", o.pairs, "pairs to record")->required()->delimiter(',');
    sim->add_option("--horizon", o.horizon, "horizon (years or 6m/2y)")->capture_default_str();
    sim->add_option("--measure", o.measure, "simulation measure (default: domestic of the first pair)");
    sim->add_option("--raw-paths", o.raw_paths, "also dump every path to this CSV");
    add_sim(sim, o);
    common(sim);

    auto* exp = app.add_subcommand("expand", "small vol-of-vol expansion against the full pricer");
    exp->add_option("--model", o.model, "model JSON")->required()->check(CLI::ExistingFile);
    exp->add_option("--pair", o.pair, "pair code")->required();
    exp->add_option("--strikes", o.strikes, "comma separated strikes")->required()->delimiter(',');
    exp->add_option("--tau", o.tau, "expiry")->capture_default_str();
    exp->add_option("--type", o.type, "call | put")->capture_default_str();
    exp->add_option("--alpha", o.alpha, "vol-of-vol scaling")->capture_default_str();
    add_quad(exp, o);
    common(exp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << MHFX_VERSION << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    try {
        if (*price) cmd_price(*price, o, out);
        if (*smile) cmd_smile(*smile, o, out);
        if (*calib) cmd_calibrate(*calib, o, out, err);
        if (*trans) cmd_transform(*trans, o, out);
        if (*diag) cmd_diagnose(*diag, o, out);
        if (*sim) cmd_simulate(*sim, o, out);
        if (*exp) cmd_expand(*exp, o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace mhfx::cli
