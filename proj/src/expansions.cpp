#include "mhfx/expansions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Dense>

#include "mhfx/errors.hpp"

namespace mhfx {

double ExpansionCoefficients::weighted(int h, const std::vector<double>& variances) const {
    if (variances.size() != factors.size()) throw DimensionMismatch("variance vector does not match the factors");
    double s = 0.0;
    for (std::size_t k = 0; k < factors.size(); ++k) s += factors[k].A[h] + factors[k].B[h] * variances[k];
    return s;
}

namespace {

// Taylor series in tau from the linear ODEs
//   B0' = -k B0 + b^2,  B1' = -k B1 + b rho xi B0,  B2' = -k B2 + xi^2 B0^2 / 2,  B3' = -k B3 + b rho xi B1,
//   A_h' = k theta B_h,  all zero at tau = 0.
// s[h][n] holds the n-th coefficient already multiplied by tau^n.
FactorCoefficients series(double b, const FactorParams& f, double tau) {
    constexpr int N = 48;
    std::array<std::array<double, N + 1>, 4> s{};
    std::array<std::array<double, N + 1>, 4> a{};
    const double k = f.kappa, c1 = b * f.rho * f.xi, half_xi2 = 0.5 * f.xi * f.xi, kt = f.kappa * f.theta;
    for (int n = 0; n < N; ++n) {
        const double h = tau / (n + 1);
        double sq = 0.0;
        for (int j = 0; j <= n; ++j) sq += s[0][j] * s[0][n - j];
        s[0][n + 1] = h * (-k * s[0][n] + (n == 0 ? b * b : 0.0));
        s[1][n + 1] = h * (-k * s[1][n] + c1 * s[0][n]);
        s[2][n + 1] = h * (-k * s[2][n] + half_xi2 * sq);
        s[3][n + 1] = h * (-k * s[3][n] + c1 * s[1][n]);
        for (int m = 0; m < 4; ++m) a[m][n + 1] = h * kt * s[m][n];
    }
    FactorCoefficients out;
    for (int m = 0; m < 4; ++m) {
        // Sum smallest terms first.
        for (int n = N; n >= 1; --n) {
            out.B[m] += s[m][n];
            out.A[m] += a[m][n];
        }
    }
    return out;
}

FactorCoefficients closed_form(double b, const FactorParams& f, double tau) {
    const double k = f.kappa, th = f.theta, rx = f.rho * f.xi, x2 = f.xi * f.xi;
    const double e = std::exp(-k * tau), om = -std::expm1(-k * tau), om2 = -std::expm1(-2.0 * k * tau);
    const double b2 = b * b, b3 = b2 * b, b4 = b2 * b2;
    const double k2 = k * k, k3 = k2 * k;
    FactorCoefficients c;
    c.B[0] = b2 * om / k;
    c.B[1] = b3 * rx * (om / k2 - tau * e / k);
    c.B[2] = b4 * x2 / (2.0 * k2) * (om2 / k - 2.0 * tau * e);
    c.B[3] = b4 * rx * rx * (om / k3 - tau * e / k2 - tau * tau * e / (2.0 * k));
    c.A[0] = b2 * th * (tau - om / k);
    c.A[1] = b3 * th * rx * (tau / k - 2.0 * om / k2 + tau * e / k);
    c.A[2] = th * b4 * x2 / (2.0 * k2) * (tau - om2 / (2.0 * k) - 2.0 * om / k + 2.0 * tau * e);
    c.A[3] = th * b4 * rx * rx * (tau / k2 - 3.0 * om / k3 + 2.0 * tau * e / k2 + tau * tau * e / (2.0 * k));
    return c;
}

}  // namespace

ExpansionCoefficients coefficient_functions(const std::vector<FactorParams>& factors, const std::vector<double>& b,
                                            double tau) {
    if (b.size() != factors.size()) throw DimensionMismatch("exposure vector does not match the factors");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be positive");
    ExpansionCoefficients out;
    for (std::size_t k = 0; k < factors.size(); ++k) {
        const auto& f = factors[k];
        f.validate();
        if (b[k] == 0.0)
            out.factors.emplace_back();
        else
            out.factors.push_back(f.kappa * tau < 1.0 ? series(b[k], f, tau) : closed_form(b[k], f, tau));
    }
    return out;
}

// With m = log(F/K) and L = log dC/dv = const - d2^2/2 - log(v)/2:
//   L_x = 1/2 - m/v,  L_xx = -1/v,  L_v = m^2/(2v^2) - 1/(2v) - 1/8,  L_xv = m/v^2,  L_xxv = 1/v^2.
BlackVDerivatives black_v_derivatives(double forward, double strike, double total_variance, double discount,
                                      OptionType type) {
    if (!(total_variance > 0.0)) throw DegenerateVariance("total variance must be positive");
    const double v = total_variance, sv = std::sqrt(v), m = std::log(forward / strike);
    const double d2 = m / sv - 0.5 * sv;
    BlackVDerivatives d;
    d.price = discount * black_forward(forward, strike, v, type);
    d.v = discount * strike * norm_pdf(d2) / (2.0 * sv);
    const double lx = 0.5 - m / v, lv = m * m / (2.0 * v * v) - 0.5 / v - 0.125;
    const double r_xxv = lx * lx - 1.0 / v;
    d.xv = d.v * lx;
    d.vv = d.v * lv;
    d.xxv = d.v * r_xxv;
    d.xxvv = d.v * (r_xxv * lv + 1.0 / (v * v) + 2.0 * lx * m / (v * v));
    return d;
}

double price_expansion(const CurrencySystem& system, const OptionSpec& option, double alpha) {
    option.validate();
    if (!(alpha >= 0.0)) throw InvalidInput("alpha must be non-negative");
    const auto q = to_measure(system, option.pair.dom);
    const auto b = pair_exposure(q, option.pair.dom, option.pair.fgn).b;
    const auto V = q.initial_variances();
    const auto c = coefficient_functions(q.factors, b, option.tau);
    const double v = c.weighted(0, V);
    if (!(v > 0.0)) throw DegenerateVariance("integrated variance is zero");
    const double rd = q.rate(option.pair.dom), rf = q.rate(option.pair.fgn);
    const double spot = option.spot ? *option.spot : q.spot_or_throw(option.pair);
    const double fwd = spot * std::exp((rd - rf) * option.tau);
    const auto d = black_v_derivatives(fwd, option.strike, v, std::exp(-rd * option.tau), option.type);
    const double s1 = c.weighted(1, V), s2 = c.weighted(2, V), s3 = c.weighted(3, V);
    return d.price + alpha * s1 * d.xv + alpha * alpha * (s2 * d.vv + s3 * d.xxv + 0.5 * s1 * s1 * d.xxvv);
}

double implied_var_expansion(const CurrencySystem& system, const CurrencyPair& pair, double strike, double tau,
                             double alpha) {
    if (!(strike > 0.0)) throw InvalidInput("strike must be positive");
    if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
    const auto q = to_measure(system, pair.dom);
    const auto b = pair_exposure(q, pair.dom, pair.fgn).b;
    const auto V = q.initial_variances();
    double s0 = 0.0, p = 0.0, qq = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        const auto& f = q.factors[k];
        const double b2 = b[k] * b[k];
        s0 += b2 * V[k];
        p += f.rho * f.xi * b2 * b[k] * V[k];
        qq += (1.0 + 2.0 * f.rho * f.rho) * f.xi * f.xi * b2 * b2 * V[k];
    }
    if (!(s0 > 0.0)) throw DegenerateVariance("instantaneous pair variance is zero");
    const double fwd = q.spot_or_throw(pair) * std::exp((q.rate(pair.dom) - q.rate(pair.fgn)) * tau);
    const double mf = std::log(strike / fwd);
    return s0 + alpha * 0.5 * p * mf / s0 + alpha * alpha * mf * mf / (12.0 * s0 * s0) * (qq - 3.75 * p * p / s0);
}

namespace {

struct PairSmile {
    CurrencyPair pair;
    double level = 0.0;  // sigma_0^2
    double skew = 0.0;   // d sigma^2 / d m_f
    double curv = 0.0;   // d^2 sigma^2 / d m_f^2 / 2
};

PairSmile fit_smile(const CurrencySystem& market, const CurrencyPair& pair, const std::vector<const VolQuote*>& qs) {
    const double spot = market.spot_or_throw(pair);
    const double rd = market.rate(pair.dom), rf = market.rate(pair.fgn);
    const std::size_t n = qs.size();
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& q = *qs[r];
        const double K = strike_from_delta(q.pillar, q.convention, q.vol, spot, q.tenor, rd, rf);
        const double mf = std::log(K / (spot * std::exp((rd - rf) * q.tenor)));
        X.row(r) << 1.0, mf, mf * mf;
        y(r) = q.vol * q.vol;
    }
    const int cols = static_cast<int>(std::min<std::size_t>(n, 3));
    const Eigen::VectorXd beta = X.leftCols(cols).colPivHouseholderQr().solve(y);
    PairSmile s{pair, beta(0), cols > 1 ? beta(1) : 0.0, cols > 2 ? beta(2) : 0.0};
    if (!(s.level > 0.0)) throw InsufficientQuotes("non-positive ATM variance fitted for " + pair.code());
    return s;
}

}  // namespace

CurrencySystem initial_guess(const QuoteSet& quotes, const GuessConfig& config) {
    const auto& market = config.market;
    const std::size_t N = market.currencies.size(), d = config.factors;
    if (d == 0) throw InvalidInput("at least one factor is needed");
    if (N < 2) throw InsufficientQuotes("need at least two currencies");

    // Shortest tenor of each pair.
    std::vector<PairSmile> smiles;
    for (const auto& p : quoted_pairs(quotes)) {
        if (!market.has_currency(p.dom) || !market.has_currency(p.fgn))
            throw UnknownCurrency("quoted pair " + p.code() + " is not in the market");
        double t = std::numeric_limits<double>::infinity();
        for (const auto& q : quotes)
            if (q.pair == p) t = std::min(t, q.tenor);
        std::vector<const VolQuote*> qs;
        for (const auto& q : quotes)
            if (q.pair == p && q.tenor == t) qs.push_back(&q);
        smiles.push_back(fit_smile(market, p, qs));
    }
    if (smiles.size() < 2 && N > 2) throw InsufficientQuotes("need quotes on at least two pairs");
    if (smiles.empty()) throw InsufficientQuotes("no quotes");

    // Pair variances are squared distances between points y_i with y_ik = a^i_k sqrt(V_k).
    auto idx = [&](const std::string& c) {
        return static_cast<std::size_t>(std::find(market.currencies.begin(), market.currencies.end(), c) -
                                        market.currencies.begin());
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd D = Eigen::MatrixXd::Constant(N, N, nan);
    Eigen::MatrixXi count = Eigen::MatrixXi::Zero(N, N);
    for (std::size_t i = 0; i < N; ++i) D(i, i) = 0.0;
    for (const auto& s : smiles) {
        const auto i = idx(s.pair.dom), j = idx(s.pair.fgn);
        const double prev = count(i, j) ? D(i, j) : 0.0;
        const int c = ++count(i, j);
        count(j, i) = c;
        D(i, j) = D(j, i) = prev + (s.level - prev) / c;
    }
    // Unquoted pairs: independent legs through the cheapest intermediate.
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i + 1; j < N; ++j) {
                if (count(i, j)) continue;
                double best = D(i, j);
                for (std::size_t h = 0; h < N; ++h) {
                    const double via = D(i, h) + D(h, j);
                    if (h != i && h != j && std::isfinite(via) && !(via >= best)) best = via;
                }
                if (std::isfinite(best) && !(best == D(i, j))) {
                    D(i, j) = D(j, i) = best;
                    changed = true;
                }
            }
    }
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            if (!std::isfinite(D(i, j)))
                throw InsufficientQuotes("currencies " + market.currencies[i] + " and " + market.currencies[j] +
                                         " are not linked by quotes");

    Eigen::MatrixXd G(N - 1, N - 1);
    for (std::size_t i = 1; i < N; ++i)
        for (std::size_t j = 1; j < N; ++j) G(i - 1, j - 1) = 0.5 * (D(0, i) + D(0, j) - D(i, j));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(N, d);
    for (std::size_t k = 0; k < d && k < N - 1; ++k) {
        const auto col = static_cast<Eigen::Index>(N - 2 - k);  // eigenvalues ascend
        const double lam = std::max(eig.eigenvalues()(col), 0.0);
        Y.block(1, k, N - 1, 1) = eig.eigenvectors().col(col) * std::sqrt(lam);
    }
    if (d >= 2 && config.rotation != 0.0) {
        const double c = std::cos(config.rotation), s = std::sin(config.rotation);
        const Eigen::VectorXd y0 = Y.col(0), y1 = Y.col(1);
        Y.col(0) = c * y0 - s * y1;
        Y.col(1) = s * y0 + c * y1;
    }

    double level = 0.0;
    for (const auto& s : smiles) level += s.level;
    level /= static_cast<double>(smiles.size());
    std::vector<double> V(d, level);
    Eigen::MatrixXd A(N, d);
    for (std::size_t k = 0; k < d; ++k) {
        Eigen::VectorXd col = Y.col(k) / std::sqrt(V[k]);
        col.array() -= col.minCoeff();
        const double top = col.maxCoeff();
        if (top > 2.5) {
            col *= 2.5 / top;
            V[k] *= (top / 2.5) * (top / 2.5);
        }
        A.col(k) = col;
    }

    CurrencySystem out = market;
    out.exposures.clear();
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> a(d);
        for (std::size_t k = 0; k < d; ++k) a[k] = A(i, k);
        out.exposures[market.currencies[i]] = a;
    }

    // Skew fixes rho_k xi_k, then curvature fixes xi_k^2 (minimum-norm least squares).
    const auto P = static_cast<Eigen::Index>(smiles.size());
    Eigen::MatrixXd M1(P, d), M2(P, d);
    Eigen::VectorXd r1(P);
    std::vector<std::vector<double>> bs;
    for (Eigen::Index r = 0; r < P; ++r) {
        const auto& s = smiles[r];
        std::vector<double> b(d);
        double s0 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            b[k] = A(idx(s.pair.dom), k) - A(idx(s.pair.fgn), k);
            s0 += b[k] * b[k] * V[k];
        }
        s0 = std::max(s0, 1e-12);
        for (std::size_t k = 0; k < d; ++k) {
            M1(r, k) = b[k] * b[k] * b[k] * V[k] / (2.0 * s0);
            M2(r, k) = b[k] * b[k] * b[k] * b[k] * V[k];
        }
        r1(r) = s.skew;
        bs.push_back(b);
    }
    const Eigen::VectorXd x = M1.completeOrthogonalDecomposition().solve(r1);
    Eigen::VectorXd r2(P);
    for (Eigen::Index r = 0; r < P; ++r) {
        const auto& s = smiles[r];
        double p = 0.0, fixed = 0.0, s0 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            p += x(k) * bs[r][k] * bs[r][k] * bs[r][k] * V[k];
            fixed += 2.0 * x(k) * x(k) * M2(r, k);
            s0 += bs[r][k] * bs[r][k] * V[k];
        }
        s0 = std::max(s0, 1e-12);
        r2(r) = 12.0 * s0 * s0 * s.curv + 3.75 * p * p / s0 - fixed;
    }
    const Eigen::VectorXd w = M2.completeOrthogonalDecomposition().solve(r2);

    out.factors.assign(d, FactorParams{});
    for (std::size_t k = 0; k < d; ++k) {
        auto& f = out.factors[k];
        f.kappa = 1.0;
        f.theta = f.v0 = V[k];
        f.xi = std::clamp(std::sqrt(std::max(w(k), 0.0)), 0.05, 1.0);
        f.xi = std::min(std::max(f.xi, std::abs(x(k)) / 0.9), 1.0);
        f.rho = std::clamp(x(k) / f.xi, -0.9, 0.9);
    }
    // The fit ignores measure changes; damp rho until every currency measure keeps kappa > 0.
    for (int attempt = 0;; ++attempt) {
        try {
            for (const auto& c : out.currencies) to_measure(out, c);
            break;
        } catch (const MeanExplosion&) {
            if (attempt > 30) throw;
            for (auto& f : out.factors) f.rho *= 0.5;
        }
    }
    out.validate();
    return out;
}

}  // namespace mhfx
