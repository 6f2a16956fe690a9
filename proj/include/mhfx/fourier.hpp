#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "mhfx/black_scholes.hpp"
#include "mhfx/model.hpp"
#include "mhfx/transform.hpp"

namespace mhfx {

struct QuadratureConfig {
    double contour_im = 1.5;       // Im(lambda) of the integration line, in (1, upper strip bound)
    double abs_tol = 1e-10;        // on the strike-normalised undiscounted price
    double rel_tol = 1e-8;         // per Gauss-Kronrod panel
    double max_truncation = 2000;  // largest |Re lambda| allowed

    void validate() const;
};

// Vanilla on S^{dom,fgn}, priced in `dom` per unit of `fgn`.
struct OptionSpec {
    CurrencyPair pair;
    double strike = 1.0;
    double tau = 1.0;
    OptionType type = OptionType::Call;
    std::optional<double> spot;  // overrides the system's spot

    void validate() const;
};

// -K^{i lambda + 1} / (lambda^2 - i lambda); requires Im(lambda) > 1.
cplx payoff_transform(cplx lambda, double strike);

// Largest contour <= requested whose real moment stays finite past tau (lowered toward 1 by halving).
double effective_contour(const TransformInput& in, double requested);

// Price in Q^dom. The system may arrive in any measure; it is moved to Q^dom.
double vanilla_price(const CurrencySystem& system, const OptionSpec& option, const QuadratureConfig& quad = {});

// Same price computed under `measure`, which must be one of the pair's currencies. Under Q^fgn it is
// obtained from the inverse pair: C_i(S^{i,j}, K) = S^{i,j}(0) K P_j(S^{j,i}, 1/K).
double vanilla_price_in_measure(const CurrencySystem& system, const OptionSpec& option, std::string_view measure,
                                const QuadratureConfig& quad = {});

struct SmileGrid {
    CurrencyPair pair;
    std::vector<double> tenors;
    std::vector<DeltaPillar> pillars;
    std::vector<std::vector<double>> vols;     // [tenor][pillar]
    std::vector<std::vector<double>> strikes;  // [tenor][pillar]
    std::vector<std::vector<int>> iterations;  // fixed-point iterations used
};

// Joint strike/vol fixed point per tenor and pillar. Throws FixedPointDivergence after 50 iterations.
SmileGrid model_smile(const CurrencySystem& system, const CurrencyPair& pair, const std::vector<double>& tenors,
                      const std::vector<DeltaPillar>& pillars, const DeltaConvention& convention = {},
                      const QuadratureConfig& quad = {}, std::string_view measure = {});

}  // namespace mhfx
