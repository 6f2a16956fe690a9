#include "mhfx/transform.hpp"

#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "mhfx/diagnostics.hpp"
#include "mhfx/errors.hpp"

namespace mhfx {

namespace {

constexpr double kOverflowExponent = 700.0;

// (1 - exp(-z)) / z, accurate near z = 0.
cplx one_minus_exp_over(cplx z) {
    if (std::abs(z) < 0.5) {
        cplx term = 1.0, sum = 1.0;
        for (int n = 2; n < 30; ++n) {
            term *= -z / static_cast<double>(n);
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    return (1.0 - std::exp(-z)) / z;
}

cplx log1p(cplx z) {
    const cplx u = 1.0 + z;
    if (u == 1.0) return z;
    return std::log(u) * z / (u - 1.0);
}

void check_strip(const TransformInput& in) {
    const double u = in.omega.real();
    if (u >= 0.0 && u <= 1.0) return;
    const double t = pair_explosion_time(u, in.b, in.factors);
    if (!(t > in.tau))
        throw StripViolation("real part " + std::to_string(u) + " outside the strip at tau " + std::to_string(in.tau) +
                             " (explosion time " + std::to_string(t) + ")");
}

}  // namespace

void TransformInput::validate() const {
    if (!(tau >= 0.0)) throw InvalidInput("tau must be non-negative");
    if (b.size() != factors.size() || variances.size() != factors.size())
        throw DimensionMismatch("transform input dimensions disagree");
    for (double v : variances)
        if (!(v >= 0.0)) throw InvalidInput("variances must be non-negative");
}

TransformInput make_transform_input(const CurrencySystem& system, const CurrencyPair& pair, cplx omega, double tau) {
    const auto q = to_measure(system, pair.dom);
    TransformInput in;
    in.omega = omega;
    in.tau = tau;
    const auto spot = q.spot(pair);
    in.x = spot ? std::log(*spot) : 0.0;
    in.variances = q.initial_variances();
    in.b = pair_exposure(q, pair.dom, pair.fgn).b;
    in.r_dom = q.rate(pair.dom);
    in.r_for = q.rate(pair.fgn);
    in.factors = q.factors;
    return in;
}

// Stable form: with s = sqrt(Delta), E = (1 - e^{-s tau})/s,
//   B = c E / (1 - lambda+ E),  A = (2 kappa theta / xi^2) [-lambda+ tau - log(1 - lambda+ E)].
// The smaller-magnitude root is recovered from lambda+ lambda- = xi^2 c / 2 to survive xi -> 0.
FactorAB factor_ab(cplx omega, double b, const FactorParams& f, double tau) {
    const cplx c = 0.5 * (omega * omega - omega) * (b * b);
    if (c == 0.0 || tau == 0.0) return {0.0, 0.0};
    const cplx beta = -f.kappa + omega * (b * f.rho * f.xi);
    const double xi2 = f.xi * f.xi;
    const cplx delta = beta * beta - 2.0 * xi2 * c;
    cplx s = std::sqrt(delta);
    if (s.real() < 0.0) s = -s;
    const cplx prod = 0.5 * xi2 * c;
    const cplx up = 0.5 * (beta + s), dn = 0.5 * (beta - s);
    cplx lp;
    if (std::abs(up) >= std::abs(dn))
        lp = up;
    else
        lp = dn == 0.0 ? cplx(0.0) : prod / dn;
    const cplx E = tau * one_minus_exp_over(s * tau);
    const cplx den = 1.0 - lp * E;
    const cplx B = c * E / den;
    const cplx A = (2.0 * f.kappa * f.theta / xi2) * (-lp * tau - log1p(-lp * E));
    return {A, B};
}

cplx log_laplace_g(const TransformInput& in) {
    in.validate();
    check_strip(in);
    cplx e = in.omega * (in.x + (in.r_dom - in.r_for) * in.tau);
    for (std::size_t k = 0; k < in.factors.size(); ++k) {
        if (in.b[k] == 0.0) continue;
        const auto ab = factor_ab(in.omega, in.b[k], in.factors[k], in.tau);
        e += ab.A + ab.B * in.variances[k];
    }
    return e;
}

cplx laplace_g(const TransformInput& in) {
    const cplx e = log_laplace_g(in);
    if (!(e.real() <= kOverflowExponent)) throw NumericalOverflow("transform exponent overflows");
    return std::exp(e);
}

cplx char_fn(const TransformInput& in) {
    TransformInput rotated = in;
    rotated.omega = cplx(0.0, in.omega.real());
    return laplace_g(rotated);
}

namespace {

using State = std::vector<double>;

// State layout: [Re A, Im A, Re B_1, Im B_1, ..., Re B_d, Im B_d].
struct RiccatiRhs {
    const TransformInput& in;
    std::vector<cplx> c, beta;

    explicit RiccatiRhs(const TransformInput& input) : in(input) {
        for (std::size_t k = 0; k < in.factors.size(); ++k) {
            const auto& f = in.factors[k];
            c.push_back(0.5 * (in.omega * in.omega - in.omega) * (in.b[k] * in.b[k]));
            beta.push_back(-f.kappa + in.omega * (in.b[k] * f.rho * f.xi));
        }
    }

    void operator()(const State& y, State& dy, double) const {
        cplx dA = 0.0;
        for (std::size_t k = 0; k < in.factors.size(); ++k) {
            const auto& f = in.factors[k];
            const cplx B(y[2 + 2 * k], y[3 + 2 * k]);
            const cplx dB = 0.5 * f.xi * f.xi * B * B + beta[k] * B + c[k];
            dy[2 + 2 * k] = dB.real();
            dy[3 + 2 * k] = dB.imag();
            dA += f.kappa * f.theta * B;
        }
        dy[0] = dA.real();
        dy[1] = dA.imag();
    }
};

}  // namespace

cplx riccati_oracle(const TransformInput& in, const OdeControl& control) {
    namespace ode = boost::numeric::odeint;
    in.validate();
    const std::size_t d = in.factors.size();
    State y(2 + 2 * d, 0.0);
    if (in.tau > 0.0) {
        RiccatiRhs rhs(in);
        auto stepper = ode::make_controlled(control.abs_tol, control.rel_tol, ode::runge_kutta_dopri5<State>());
        ode::integrate_adaptive(stepper, rhs, y, 0.0, in.tau, std::min(control.initial_step, in.tau));
    }
    cplx e = in.omega * (in.x + (in.r_dom - in.r_for) * in.tau) + cplx(y[0], y[1]);
    for (std::size_t k = 0; k < d; ++k) e += cplx(y[2 + 2 * k], y[3 + 2 * k]) * in.variances[k];
    for (double v : y)
        if (!std::isfinite(v)) throw OdeFailure("Riccati solution is not finite before tau");
    return std::exp(e);
}

double riccati_blowup_time(const TransformInput& in, double threshold, const OdeControl& control) {
    namespace ode = boost::numeric::odeint;
    in.validate();
    TransformInput real_in = in;
    real_in.omega = in.omega.real();
    const std::size_t d = in.factors.size();
    RiccatiRhs rhs(real_in);
    State y(2 + 2 * d, 0.0);
    auto stepper = ode::make_controlled(control.abs_tol, control.rel_tol, ode::runge_kutta_dopri5<State>());
    double t = 0.0, dt = control.initial_step;
    int failures = 0;
    while (t < in.tau) {
        dt = std::min(dt, in.tau - t);
        if (stepper.try_step(rhs, y, t, dt) == ode::fail) {
            if (++failures > 10000 || dt < 1e-300) throw OdeFailure("step size underflow near blow-up");
            continue;
        }
        failures = 0;
        for (std::size_t k = 0; k < d; ++k)
            if (std::abs(y[2 + 2 * k]) > threshold) return t;
    }
    return std::numeric_limits<double>::infinity();
}

double integrated_variance(const std::vector<FactorParams>& factors, const std::vector<double>& b,
                           const std::vector<double>& variances, double tau) {
    double v = 0.0;
    for (std::size_t k = 0; k < factors.size(); ++k) {
        const auto& f = factors[k];
        const double z = f.kappa * tau;
        const double phi1 = z == 0.0 ? tau : -std::expm1(-z) / f.kappa;  // int_0^tau e^{-kappa u} du
        v += b[k] * b[k] * (f.theta * tau + (variances[k] - f.theta) * phi1);
    }
    return v;
}

}  // namespace mhfx
