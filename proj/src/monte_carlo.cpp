#include "mhfx/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mhfx/black_scholes.hpp"
#include "mhfx/errors.hpp"
#include "mhfx/parallel.hpp"

namespace mhfx {

std::string_view to_string(VarianceScheme s) { return s == VarianceScheme::QE ? "qe" : "euler"; }

VarianceScheme parse_scheme(std::string_view s) {
    if (s == "qe" || s == "QE") return VarianceScheme::QE;
    if (s == "euler" || s == "fte" || s == "full-truncation-euler") return VarianceScheme::FullTruncationEuler;
    throw InvalidInput("unknown variance scheme '" + std::string(s) + "'");
}

void SimConfig::validate() const {
    if (n_paths < 1) throw InvalidInput("n_paths must be at least 1");
    if (!(steps_per_year > 0.0) || !std::isfinite(steps_per_year)) throw InvalidInput("steps_per_year must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("horizon must be positive");
}

std::size_t SimConfig::num_steps() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(horizon * steps_per_year)));
}

namespace {

constexpr std::size_t kBlock = 1024;  // sampling units per work item

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Per-currency log states L_c (all starting at 0) with d log S^{i,j} = dL_j - dL_i, in measure m:
//   dL_c = [-r^c + sum_k V_k a^c_k (a^m_k - a^c_k / 2)] dt - sum_k a^c_k sqrt(V_k) dZ_k,
//   dV_k = kappa_k (theta_k - V_k) dt + xi_k sqrt(V_k) dW_k,  d<Z_k, W_k> = rho_k dt.
class Engine {
public:
    Engine(const CurrencySystem& system, const SimConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        if (!system.has_currency(cfg.measure)) throw InvalidInput("simulation measure must be a currency, got '" + cfg.measure + "'");
        sys_ = to_measure(system, cfg.measure);
        d_ = sys_.num_factors();
        nc_ = sys_.currencies.size();
        am_ = sys_.exposure_of(cfg.measure);
        for (const auto& c : sys_.currencies) {
            a_.push_back(sys_.exposure_of(c));
            r_.push_back(sys_.rate(c));
        }
        v0_ = sys_.initial_variances();
        steps_ = cfg.num_steps();
        dt_ = cfg.horizon / static_cast<double>(steps_);
        twins_ = cfg.antithetic ? 2 : 1;
        units_ = (cfg.n_paths + twins_ - 1) / twins_;
    }

    std::size_t index(const std::string& c) const {
        const auto it = std::find(sys_.currencies.begin(), sys_.currencies.end(), c);
        if (it == sys_.currencies.end()) throw UnknownCurrency("unknown currency '" + c + "'");
        return static_cast<std::size_t>(it - sys_.currencies.begin());
    }
    const CurrencySystem& system() const { return sys_; }
    std::size_t steps() const { return steps_; }
    std::size_t units() const { return units_; }
    std::size_t twins() const { return twins_; }
    std::size_t factors() const { return d_; }
    std::size_t currencies() const { return nc_; }
    double dt() const { return dt_; }

    // Runs sampling unit u (a path, or an antithetic pair) and calls obs(twin, step, L, V) at every grid point.
    template <class Obs>
    void run(std::size_t u, Obs&& obs) const {
        std::mt19937_64 gen(splitmix64(cfg_.seed ^ splitmix64(u)));
        std::normal_distribution<double> normal;
        std::vector<double> L[2], V[2], z(2 * d_), dL(nc_);
        for (std::size_t t = 0; t < twins_; ++t) {
            L[t].assign(nc_, 0.0);
            V[t] = v0_;
            obs(t, std::size_t{0}, L[t], V[t]);
        }
        for (std::size_t s = 1; s <= steps_; ++s) {
            for (auto& x : z) x = normal(gen);
            for (std::size_t t = 0; t < twins_; ++t) {
                step(L[t], V[t], z.data(), t == 0 ? 1.0 : -1.0, dL);
                obs(t, s, L[t], V[t]);
            }
        }
    }

private:
    void step(std::vector<double>& L, std::vector<double>& V, const double* z, double sign,
              std::vector<double>& dL) const {
        for (std::size_t c = 0; c < nc_; ++c) dL[c] = -r_[c] * dt_;
        for (std::size_t k = 0; k < d_; ++k) {
            const auto& f = sys_.factors[k];
            const double w = sign * z[2 * k], zp = sign * z[2 * k + 1];
            const double vp = std::max(V[k], 0.0);
            double vn, I, dw;  // next variance, int V dt, int sqrt(V) dW
            if (cfg_.scheme == VarianceScheme::QE && f.xi > 0.0) {
                vn = qe_step(f, vp, w);
                I = 0.5 * (vp + vn) * dt_;
                dw = (vn - vp - f.kappa * f.theta * dt_ + f.kappa * I) / f.xi;
            } else {
                vn = V[k] + f.kappa * (f.theta - vp) * dt_ + f.xi * std::sqrt(vp * dt_) * w;
                I = 0.5 * (vp + std::max(vn, 0.0)) * dt_;
                dw = std::sqrt(vp * dt_) * w;
            }
            // log-Euler with the integrated variance by trapezoid of the truncated V
            const double shock = f.rho * dw + std::sqrt((1.0 - f.rho * f.rho) * I) * zp;
            for (std::size_t c = 0; c < nc_; ++c) {
                const double ac = a_[c][k];
                if (ac != 0.0) dL[c] += I * ac * (am_[k] - 0.5 * ac) - ac * shock;
            }
            V[k] = vn;
        }
        for (std::size_t c = 0; c < nc_; ++c) L[c] += dL[c];
    }

    // Andersen's quadratic-exponential step with psi_c = 1.5; the uniform is Phi(z) so -z is the antithetic draw.
    double qe_step(const FactorParams& f, double v, double z) const {
        const double e = std::exp(-f.kappa * dt_), om = -std::expm1(-f.kappa * dt_);
        const double m = f.theta + (v - f.theta) * e;
        if (!(m > 0.0)) return 0.0;
        const double x2 = f.xi * f.xi;
        const double s2 = v * x2 * e * om / f.kappa + f.theta * x2 * om * om / (2.0 * f.kappa);
        const double psi = s2 / (m * m);
        if (psi <= 1.5) {
            const double ip = 2.0 / psi;
            const double b2 = ip - 1.0 + std::sqrt(ip) * std::sqrt(ip - 1.0);
            const double b = std::sqrt(b2);
            return m / (1.0 + b2) * (b + z) * (b + z);
        }
        const double p = (psi - 1.0) / (psi + 1.0), beta = (1.0 - p) / m;
        const double u = norm_cdf(z);
        return u <= p ? 0.0 : std::log((1.0 - p) / (1.0 - u)) / beta;
    }

    SimConfig cfg_;
    CurrencySystem sys_;
    std::size_t d_ = 0, nc_ = 0, steps_ = 0, twins_ = 1, units_ = 0;
    double dt_ = 0.0;
    std::vector<double> am_, r_, v0_;
    std::vector<std::vector<double>> a_;
};

struct PairIndex {
    std::size_t dom, fgn;
    double log_s0;
};

PairIndex pair_index(const Engine& eng, const CurrencySystem& original, const CurrencyPair& p) {
    return {eng.index(p.dom), eng.index(p.fgn), std::log(original.spot_or_throw(p))};
}

std::size_t blocks_for(std::size_t units) { return (units + kBlock - 1) / kBlock; }

}  // namespace

PathSet simulate(const CurrencySystem& system, const std::vector<CurrencyPair>& pairs, const SimConfig& config) {
    if (pairs.empty()) throw InvalidInput("no pairs to simulate");
    SimConfig cfg = config;
    if (cfg.measure.empty()) cfg.measure = pairs.front().dom;
    const Engine eng(system, cfg);
    std::vector<PairIndex> idx;
    for (const auto& p : pairs) idx.push_back(pair_index(eng, system, p));

    PathSet out;
    out.pairs = pairs;
    out.n_paths = cfg.n_paths;
    out.n_factors = eng.factors();
    const std::size_t nt = eng.steps() + 1;
    for (std::size_t s = 0; s < nt; ++s) out.times.push_back(static_cast<double>(s) * eng.dt());
    out.times.back() = cfg.horizon;
    out.log_spots.assign(out.n_paths * nt * pairs.size(), 0.0);
    out.variances.assign(out.n_paths * nt * out.n_factors, 0.0);

    const std::size_t units = eng.units(), tw = eng.twins();
    parallel_for(blocks_for(units), cfg.jobs, [&](std::size_t blk) {
        const std::size_t end = std::min(units, (blk + 1) * kBlock);
        for (std::size_t u = blk * kBlock; u < end; ++u) {
            eng.run(u, [&](std::size_t t, std::size_t s, const std::vector<double>& L, const std::vector<double>& V) {
                const std::size_t path = u * tw + t;
                if (path >= out.n_paths) return;
                double* ls = &out.log_spots[(path * nt + s) * pairs.size()];
                for (std::size_t p = 0; p < idx.size(); ++p) ls[p] = idx[p].log_s0 + L[idx[p].fgn] - L[idx[p].dom];
                double* vs = &out.variances[(path * nt + s) * out.n_factors];
                for (std::size_t k = 0; k < out.n_factors; ++k) vs[k] = std::max(V[k], 0.0);
            });
        }
    });
    return out;
}

std::vector<McEstimate> mc_prices(const CurrencySystem& system, const CurrencyPair& pair, double tau,
                                  const std::vector<double>& strikes, const std::vector<OptionType>& types,
                                  SimConfig config) {
    if (strikes.size() != types.size()) throw DimensionMismatch("strikes and option types differ in length");
    for (double k : strikes)
        if (!(k > 0.0) || !std::isfinite(k)) throw InvalidInput("strikes must be positive");
    if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
    if (config.measure.empty()) config.measure = pair.dom;
    config.horizon = tau;
    const Engine eng(system, config);
    const auto pi = pair_index(eng, system, pair);
    const std::size_t m = eng.index(config.measure), dom = pi.dom;
    const double disc = std::exp(-eng.system().rate(config.measure) * tau);
    const std::size_t steps = eng.steps(), tw = eng.twins(), units = eng.units();
    const std::size_t n = strikes.size();

    // Discounted numeraire-weighted payoffs of one sampling unit, averaged over its twins.
    auto unit_values = [&](std::size_t u, double* val) {
        std::fill(val, val + n, 0.0);
        eng.run(u, [&](std::size_t, std::size_t s, const std::vector<double>& L, const std::vector<double>&) {
            if (s != steps) return;
            const double S = std::exp(pi.log_s0 + L[pi.fgn] - L[dom]);
            const double w = disc * std::exp(L[dom] - L[m]) / static_cast<double>(tw);
            for (std::size_t j = 0; j < n; ++j) {
                const double pay = types[j] == OptionType::Call ? std::max(S - strikes[j], 0.0)
                                                                : std::max(strikes[j] - S, 0.0);
                val[j] += w * pay;
            }
        });
    };

    // Moments are accumulated around unit 0 so that a degenerate sample gives exactly zero spread.
    std::vector<double> shift(n);
    unit_values(0, shift.data());
    const std::size_t nb = blocks_for(units);
    std::vector<double> sums(nb * n, 0.0), sq(nb * n, 0.0);
    parallel_for(nb, config.jobs, [&](std::size_t blk) {
        std::vector<double> v(n), s1(n, 0.0), s2(n, 0.0);
        const std::size_t end = std::min(units, (blk + 1) * kBlock);
        for (std::size_t u = blk * kBlock; u < end; ++u) {
            unit_values(u, v.data());
            for (std::size_t j = 0; j < n; ++j) {
                const double x = v[j] - shift[j];
                s1[j] += x;
                s2[j] += x * x;
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            sums[j * nb + blk] = s1[j];
            sq[j * nb + blk] = s2[j];
        }
    });

    std::vector<McEstimate> out(n);
    const double nu = static_cast<double>(units);
    for (std::size_t j = 0; j < n; ++j) {
        const double mean = pairwise_sum(&sums[j * nb], nb) / nu;
        const double var = units > 1 ? std::max(pairwise_sum(&sq[j * nb], nb) / nu - mean * mean, 0.0) * nu / (nu - 1.0)
                                     : 0.0;
        out[j].price = shift[j] + mean;
        out[j].std_error = std::sqrt(var / nu);
    }
    return out;
}

McEstimate mc_price(const CurrencySystem& system, const OptionSpec& option, SimConfig config) {
    option.validate();
    if (!option.spot) return mc_prices(system, option.pair, option.tau, {option.strike}, {option.type}, config).front();
    // the dynamics are scale free in the spot: price at strike K S0/S and rescale
    const double s0 = system.spot_or_throw(option.pair), scale = *option.spot / s0;
    auto est = mc_prices(system, option.pair, option.tau, {option.strike / scale}, {option.type}, config).front();
    est.price *= scale;
    est.std_error *= scale;
    return est;
}

SymmetryReport symmetry_report(const CurrencySystem& system, const std::array<std::string, 3>& triangle, double tau,
                               SimConfig config) {
    const auto& [i, l, m] = triangle;
    if (i == l || i == m || l == m) throw InvalidInput("triangle currencies must be distinct");
    const auto fwd = [&](const CurrencyPair& p) {
        return system.spot_or_throw(p) * std::exp((system.rate(p.dom) - system.rate(p.fgn)) * tau);
    };
    const auto z = [](const McEstimate& a, const McEstimate& b) {
        const double se = std::hypot(a.std_error, b.std_error);
        const double diff = a.price - b.price;
        return se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    };

    SymmetryReport rep;
    rep.triangle = triangle;
    rep.tau = tau;

    const CurrencyPair lm{l, m};
    rep.cross_strike = fwd(lm);
    config.measure = l;
    rep.cross_direct = mc_price(system, {lm, rep.cross_strike, tau, OptionType::Call, {}}, config);
    config.measure = i;  // cross read off the two main pairs under Q^i
    rep.cross_ratio = mc_price(system, {lm, rep.cross_strike, tau, OptionType::Call, {}}, config);
    rep.cross_z = z(rep.cross_direct, rep.cross_ratio);

    const CurrencyPair il{i, l};
    const double s = system.spot_or_throw(il), K = fwd(il);
    rep.inversion_strike = K;
    config.measure = i;
    rep.inversion_call = mc_price(system, {il, K, tau, OptionType::Call, {}}, config);
    config.measure = l;
    auto put = mc_price(system, {il.inverse(), 1.0 / K, tau, OptionType::Put, {}}, config);
    rep.inversion_put = {s * K * put.price, s * K * put.std_error};
    rep.inversion_z = z(rep.inversion_call, rep.inversion_put);
    return rep;
}

}  // namespace mhfx
