#pragma once

#include <array>
#include <string>
#include <string_view>

namespace mhfx {

enum class OptionType { Call, Put };

std::string_view to_string(OptionType t);
OptionType parse_option_type(std::string_view s);

double norm_cdf(double x);
double norm_pdf(double x);
double norm_inv(double p);

// Undiscounted Black price on a forward with total variance v = sigma^2 tau. v = 0 gives intrinsic.
double black_forward(double forward, double strike, double total_variance, OptionType type);

// Garman-Kohlhagen price in domestic units per unit of foreign notional.
double gk_price(double spot, double strike, double vol, double tau, double r_dom, double r_for, OptionType type);

// Guarded Newton with bisection on [1e-6, 5]. Returns 0 at (or numerically at) intrinsic value.
double implied_vol(double price, double spot, double strike, double tau, double r_dom, double r_for, OptionType type);
// Same on an undiscounted forward price.
double implied_vol_forward(double forward_price, double forward, double strike, double tau, OptionType type);

enum class DeltaBasis { Spot, Forward };

// The ATM rule is always the delta-neutral straddle.
struct DeltaConvention {
    DeltaBasis basis = DeltaBasis::Forward;
    bool premium_adjusted = false;

    bool operator==(const DeltaConvention&) const = default;
};

enum class DeltaPillar { C10, C15, C25, DN, P25, P15, P10 };

inline constexpr std::array<DeltaPillar, 7> kAllPillars = {DeltaPillar::C10, DeltaPillar::C15, DeltaPillar::C25,
                                                           DeltaPillar::DN,  DeltaPillar::P25, DeltaPillar::P15,
                                                           DeltaPillar::P10};

std::string_view pillar_tag(DeltaPillar p);
DeltaPillar parse_pillar(std::string_view tag);
// Signed delta: +0.25 for 25DC, -0.25 for 25DP, 0 for DN.
double pillar_delta(DeltaPillar p);
// OTM option type at the pillar (DN -> Call).
OptionType pillar_option_type(DeltaPillar p);

double fx_delta(OptionType type, const DeltaConvention& conv, double spot, double strike, double vol, double tau,
                double r_dom, double r_for);

// Throws InfeasibleDelta when the pillar cannot be reached under the convention.
double strike_from_delta(DeltaPillar pillar, const DeltaConvention& conv, double vol, double spot, double tau,
                         double r_dom, double r_for);

}  // namespace mhfx
