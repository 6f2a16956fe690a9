#include "mhfx/model.hpp"

#include <algorithm>
#include <cmath>

#include "mhfx/errors.hpp"

namespace mhfx {

void FactorParams::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(kappa) || !finite(theta) || !finite(xi) || !finite(rho) || !finite(v0))
        throw InvalidInput("factor parameters must be finite");
    if (kappa <= 0.0) throw MeanExplosion("kappa must be positive");
    if (theta < 0.0) throw InvalidInput("theta must be non-negative");
    if (xi <= 0.0) throw InvalidInput("xi must be positive");
    if (v0 < 0.0) throw InvalidInput("v0 must be non-negative");
    if (!(rho > -1.0 && rho < 1.0)) throw InvalidInput("rho must lie in (-1, 1)");
}

CurrencyPair CurrencyPair::parse(std::string_view code) {
    std::string s;
    for (char c : code)
        if (c != '/' && c != '-' && c != ' ') s.push_back(c);
    if (s.size() != 6) throw InvalidPair("pair code must look like XXXYYY: '" + std::string(code) + "'");
    CurrencyPair p{s.substr(0, 3), s.substr(3, 3)};
    if (p.dom == p.fgn) throw InvalidPair("pair needs two distinct currencies: " + s);
    return p;
}

bool CurrencySystem::has_currency(std::string_view c) const {
    return std::find(currencies.begin(), currencies.end(), c) != currencies.end();
}

bool CurrencySystem::is_measure_label(std::string_view label) const {
    return label == kNumeraire0 || has_currency(label);
}

std::vector<double> CurrencySystem::exposure_of(std::string_view label) const {
    if (label == kNumeraire0) return std::vector<double>(num_factors(), 0.0);
    auto it = exposures.find(std::string(label));
    if (it == exposures.end()) throw UnknownCurrency("unknown currency: " + std::string(label));
    return it->second;
}

double CurrencySystem::rate(std::string_view currency) const {
    auto it = rates.find(std::string(currency));
    if (it == rates.end()) throw UnknownCurrency("no rate for currency: " + std::string(currency));
    return it->second;
}

std::vector<double> CurrencySystem::initial_variances() const {
    std::vector<double> v;
    v.reserve(factors.size());
    for (const auto& f : factors) v.push_back(f.v0);
    return v;
}

std::optional<double> CurrencySystem::spot(const CurrencyPair& pair) const {
    auto direct = [&](const std::string& dom, const std::string& fgn) -> std::optional<double> {
        if (auto it = spots.find(dom + fgn); it != spots.end()) return it->second;
        if (auto it = spots.find(fgn + dom); it != spots.end()) return 1.0 / it->second;
        return std::nullopt;
    };
    if (auto s = direct(pair.dom, pair.fgn)) return s;
    for (const auto& c : currencies) {
        if (c == pair.dom || c == pair.fgn) continue;
        auto a = direct(pair.dom, c);
        auto b = direct(c, pair.fgn);
        if (a && b) return *a * *b;
    }
    return std::nullopt;
}

double CurrencySystem::spot_or_throw(const CurrencyPair& pair) const {
    auto s = spot(pair);
    if (!s) throw InvalidInput("no spot available for " + pair.code());
    return *s;
}

void CurrencySystem::validate() const {
    if (currencies.empty()) throw InvalidInput("system has no currencies");
    if (factors.empty()) throw InvalidInput("system has no factors");
    const std::size_t d = factors.size();
    for (std::size_t i = 0; i < currencies.size(); ++i) {
        const auto& c = currencies[i];
        if (c == kNumeraire0) throw InvalidInput("NUMERAIRE0 is reserved");
        if (std::count(currencies.begin(), currencies.end(), c) != 1)
            throw InvalidInput("duplicate currency " + c);
        auto e = exposures.find(c);
        if (e == exposures.end()) throw DimensionMismatch("missing exposure vector for " + c);
        if (e->second.size() != d)
            throw DimensionMismatch("exposure of " + c + " has dimension " + std::to_string(e->second.size()) +
                                    ", expected " + std::to_string(d));
        for (double x : e->second)
            if (!std::isfinite(x)) throw InvalidInput("non-finite exposure for " + c);
        auto r = rates.find(c);
        if (r == rates.end() || !std::isfinite(r->second)) throw InvalidInput("missing rate for " + c);
    }
    if (exposures.size() != currencies.size()) throw InvalidInput("exposure for an undeclared currency");
    if (!is_measure_label(measure)) throw UnknownCurrency("unknown measure " + measure);
    for (const auto& f : factors) f.validate();
    for (const auto& [code, s] : spots) {
        auto p = CurrencyPair::parse(code);
        if (!has_currency(p.dom) || !has_currency(p.fgn)) throw UnknownCurrency("spot for unknown pair " + code);
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("spot must be positive: " + code);
    }
}

CurrencySystem to_measure(const CurrencySystem& system, std::string_view target) {
    if (!system.is_measure_label(target)) throw UnknownCurrency("unknown measure " + std::string(target));
    if (target == system.measure) return system;
    const auto a_src = system.exposure_of(system.measure);
    const auto a_tgt = system.exposure_of(target);
    CurrencySystem out = system;
    out.measure = std::string(target);
    for (std::size_t k = 0; k < out.factors.size(); ++k) {
        auto& f = out.factors[k];
        const double kappa = f.kappa + f.rho * f.xi * (a_tgt[k] - a_src[k]);
        if (!(kappa > 0.0))
            throw MeanExplosion("factor " + std::to_string(k + 1) + " has kappa " + std::to_string(kappa) +
                                " under measure " + std::string(target));
        f.theta = f.theta * f.kappa / kappa;
        f.kappa = kappa;
    }
    return out;
}

PairExposure pair_exposure(const CurrencySystem& system, std::string_view i, std::string_view j) {
    if (!system.has_currency(i)) throw UnknownCurrency("unknown currency: " + std::string(i));
    if (!system.has_currency(j)) throw UnknownCurrency("unknown currency: " + std::string(j));
    if (i == j) throw InvalidPair("pair needs two distinct currencies: " + std::string(i));
    const auto& ai = system.exposures.at(std::string(i));
    const auto& aj = system.exposures.at(std::string(j));
    PairExposure out{{std::string(i), std::string(j)}, std::vector<double>(ai.size())};
    for (std::size_t k = 0; k < ai.size(); ++k) out.b[k] = ai[k] - aj[k];
    return out;
}

namespace {

void check_variances(const CurrencySystem& system, std::span<const double> v) {
    if (v.size() != system.num_factors())
        throw DimensionMismatch("variance vector has dimension " + std::to_string(v.size()) + ", expected " +
                                std::to_string(system.num_factors()));
    for (double x : v)
        if (!(x >= 0.0)) throw InvalidInput("variances must be non-negative");
}

}  // namespace

double instantaneous_variance(const CurrencySystem& system, std::string_view i, std::string_view j,
                              std::span<const double> variances) {
    check_variances(system, variances);
    const auto pe = pair_exposure(system, i, j);
    double s = 0.0;
    for (std::size_t k = 0; k < pe.b.size(); ++k) s += pe.b[k] * pe.b[k] * variances[k];
    return s;
}

InstantCovariance instantaneous_covariance(const CurrencySystem& system, const CurrencyPair& pair1,
                                           const CurrencyPair& pair2, std::span<const double> variances) {
    check_variances(system, variances);
    const auto b1 = pair_exposure(system, pair1.dom, pair1.fgn).b;
    const auto b2 = pair_exposure(system, pair2.dom, pair2.fgn).b;
    double c = 0.0, v1 = 0.0, v2 = 0.0;
    for (std::size_t k = 0; k < b1.size(); ++k) {
        c += b1[k] * b2[k] * variances[k];
        v1 += b1[k] * b1[k] * variances[k];
        v2 += b2[k] * b2[k] * variances[k];
    }
    const double denom = std::sqrt(v1) * std::sqrt(v2);
    return {c, denom > 0.0 ? std::clamp(c / denom, -1.0, 1.0) : std::nan("")};
}

double skew_correlation(const CurrencySystem& system, std::string_view i, std::string_view j,
                        std::span<const double> variances) {
    check_variances(system, variances);
    const auto b = pair_exposure(system, i, j).b;
    double num = 0.0, q = 0.0, s = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        const auto& f = system.factors[k];
        const double b2 = b[k] * b[k];
        num += b2 * b[k] * f.xi * variances[k] * f.rho;
        q += b2 * b2 * f.xi * f.xi * variances[k];
        s += b2 * variances[k];
    }
    const double denom = std::sqrt(q) * std::sqrt(s);
    if (!(denom > 0.0)) throw DegenerateVariance("skew correlation undefined: zero variance of variance");
    return std::clamp(num / denom, -1.0, 1.0);
}

TriangleCorrelation bs_triangle_correlation(double sigma_il, double sigma_im, double sigma_lm) {
    if (!(sigma_il > 0.0) || !(sigma_im > 0.0) || !(sigma_lm > 0.0))
        throw InvalidInput("triangle correlation needs positive vols");
    const double rho = (sigma_il * sigma_il + sigma_im * sigma_im - sigma_lm * sigma_lm) / (2.0 * sigma_il * sigma_im);
    return {rho, std::abs(rho) <= 1.0};
}

CurrencySystem shift_exposures(const CurrencySystem& system, std::span<const double> shift) {
    if (shift.size() != system.num_factors()) throw DimensionMismatch("shift has wrong dimension");
    CurrencySystem out = system;
    for (auto& [c, a] : out.exposures)
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += shift[k];
    return out;
}

}  // namespace mhfx
