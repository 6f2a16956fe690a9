#pragma once

#include <complex>
#include <limits>
#include <vector>

#include "mhfx/model.hpp"

namespace mhfx {

using cplx = std::complex<double>;

// Arguments of the conditional Laplace transform of log S^{i,j}(t+tau), factors in Q^i.
struct TransformInput {
    cplx omega{0.0, 0.0};
    double tau = 0.0;
    double x = 0.0;                   // log spot
    std::vector<double> variances;    // V_k
    std::vector<double> b;            // pair exposure
    double r_dom = 0.0;
    double r_for = 0.0;
    std::vector<FactorParams> factors;

    void validate() const;
};

// Builds the input for pair (dom, fgn) with x = log spot (0 if the system has no spot); the system is
// moved to Q^dom first.
TransformInput make_transform_input(const CurrencySystem& system, const CurrencyPair& pair, cplx omega, double tau);

// Per-factor affine coefficients A_k(tau), B_k(tau).
struct FactorAB {
    cplx A;
    cplx B;
};

FactorAB factor_ab(cplx omega, double b, const FactorParams& f, double tau);

// log G, guarded by the real-moment explosion check. Throws StripViolation.
cplx log_laplace_g(const TransformInput& in);
// exp(log G). Throws NumericalOverflow when the real part of the exponent exceeds ~700.
cplx laplace_g(const TransformInput& in);
// phi(u) = G(i u) for real u stored in in.omega.real(); the imaginary part of in.omega is ignored.
cplx char_fn(const TransformInput& in);

struct OdeControl {
    double rel_tol = 1e-11;
    double abs_tol = 1e-14;
    double initial_step = 1e-4;
};

// Integrates the Riccati system for (A, B_k) from 0 to tau with an adaptive Dormand-Prince scheme.
cplx riccati_oracle(const TransformInput& in, const OdeControl& control = {});

// First time some |B_k| exceeds `threshold` for real omega = in.omega.real(), searching up to in.tau.
// Returns +inf when no blow-up happens before in.tau.
double riccati_blowup_time(const TransformInput& in, double threshold = 1e12, const OdeControl& control = {});

// Sum_k b_k^2 E[int_0^tau V_k] in the factors' measure.
double integrated_variance(const std::vector<FactorParams>& factors, const std::vector<double>& b,
                           const std::vector<double>& variances, double tau);

}  // namespace mhfx
