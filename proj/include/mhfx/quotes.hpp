#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mhfx/black_scholes.hpp"
#include "mhfx/fourier.hpp"
#include "mhfx/model.hpp"

namespace mhfx {

inline constexpr std::string_view kQuoteHeader = "pair,tenor_years,pillar,vol,delta_basis,premium_adjusted";

struct VolQuote {
    CurrencyPair pair;
    double tenor = 0.0;  // years
    DeltaPillar pillar = DeltaPillar::DN;
    double vol = 0.0;
    DeltaConvention convention;

    void validate() const;
    bool operator==(const VolQuote&) const = default;
};

using QuoteSet = std::vector<VolQuote>;

std::string_view to_string(DeltaBasis b);
DeltaBasis parse_delta_basis(std::string_view s);

// Empty input (or a lone header) gives an empty set. Throws ParseError with 1-based row/column.
QuoteSet read_quotes(std::istream& in);
QuoteSet load_quotes(const std::string& path);
// Doubles are written with 17 significant digits so that a reload is exact.
void write_quotes(std::ostream& out, const QuoteSet& quotes);
void save_quotes(const std::string& path, const QuoteSet& quotes);

// Pairs in order of first appearance.
std::vector<CurrencyPair> quoted_pairs(const QuoteSet& quotes);
// Sorted distinct tenors.
std::vector<double> quoted_tenors(const QuoteSet& quotes);

// Model smile of each pair (priced in its domestic measure) read back as quotes.
QuoteSet synthesize_quotes(const CurrencySystem& system, const std::vector<CurrencyPair>& pairs,
                           const std::vector<double>& tenors, const std::vector<DeltaPillar>& pillars,
                           const DeltaConvention& convention = {}, const QuadratureConfig& quad = {});

}  // namespace mhfx
