#include "mhfx/quotes.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mhfx/errors.hpp"

namespace mhfx {

void VolQuote::validate() const {
    if (!(vol > 0.0) || !std::isfinite(vol)) throw InvalidInput("quote vol must be positive");
    if (!(tenor > 0.0) || !std::isfinite(tenor)) throw InvalidInput("quote tenor must be positive");
    if (pair.dom == pair.fgn) throw InvalidPair("quote pair needs two distinct currencies");
}

std::string_view to_string(DeltaBasis b) { return b == DeltaBasis::Spot ? "spot" : "forward"; }

DeltaBasis parse_delta_basis(std::string_view s) {
    if (s == "spot") return DeltaBasis::Spot;
    if (s == "forward") return DeltaBasis::Forward;
    throw InvalidInput("unknown delta basis '" + std::string(s) + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, std::size_t row, std::size_t col) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("not a number: '" + s + "'", row, col);
    return v;
}

bool to_bool(const std::string& s, std::size_t row, std::size_t col) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw ParseError("expected 0/1 or true/false, got '" + s + "'", row, col);
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

QuoteSet read_quotes(std::istream& in) {
    QuoteSet quotes;
    std::string line;
    std::size_t row = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++row;
        if (blank(line)) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header) {
            if (line != kQuoteHeader) throw ParseError("expected header '" + std::string(kQuoteHeader) + "'", row, 1);
            header = true;
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != 6) throw ParseError("expected 6 fields, got " + std::to_string(cells.size()), row);
        VolQuote q;
        try {
            q.pair = CurrencyPair::parse(cells[0]);
        } catch (const Error& e) {
            throw ParseError(e.what(), row, 1);
        }
        q.tenor = to_double(cells[1], row, 2);
        try {
            q.pillar = parse_pillar(cells[2]);
        } catch (const Error& e) {
            throw ParseError(e.what(), row, 3);
        }
        q.vol = to_double(cells[3], row, 4);
        try {
            q.convention.basis = parse_delta_basis(cells[4]);
        } catch (const Error& e) {
            throw ParseError(e.what(), row, 5);
        }
        q.convention.premium_adjusted = to_bool(cells[5], row, 6);
        if (!(q.tenor > 0.0) || !std::isfinite(q.tenor)) throw ParseError("tenor must be positive", row, 2);
        if (!(q.vol > 0.0) || !std::isfinite(q.vol)) throw ParseError("vol must be positive", row, 4);
        try {
            q.validate();
        } catch (const Error& e) {
            throw ParseError(e.what(), row, 1);
        }
        quotes.push_back(q);
    }
    return quotes;
}

QuoteSet load_quotes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open quotes file " + path);
    return read_quotes(in);
}

void write_quotes(std::ostream& out, const QuoteSet& quotes) {
    out << kQuoteHeader << '\n';
    char buf[64];
    for (const auto& q : quotes) {
        out << q.pair.code() << ',';
        std::snprintf(buf, sizeof buf, "%.17g", q.tenor);
        out << buf << ',' << pillar_tag(q.pillar) << ',';
        std::snprintf(buf, sizeof buf, "%.17g", q.vol);
        out << buf << ',' << to_string(q.convention.basis) << ',' << (q.convention.premium_adjusted ? 1 : 0) << '\n';
    }
}

void save_quotes(const std::string& path, const QuoteSet& quotes) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write quotes file " + path);
    write_quotes(out, quotes);
}

std::vector<CurrencyPair> quoted_pairs(const QuoteSet& quotes) {
    std::vector<CurrencyPair> pairs;
    for (const auto& q : quotes)
        if (std::find(pairs.begin(), pairs.end(), q.pair) == pairs.end()) pairs.push_back(q.pair);
    return pairs;
}

std::vector<double> quoted_tenors(const QuoteSet& quotes) {
    std::vector<double> t;
    for (const auto& q : quotes) t.push_back(q.tenor);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

QuoteSet synthesize_quotes(const CurrencySystem& system, const std::vector<CurrencyPair>& pairs,
                           const std::vector<double>& tenors, const std::vector<DeltaPillar>& pillars,
                           const DeltaConvention& convention, const QuadratureConfig& quad) {
    QuoteSet quotes;
    for (const auto& p : pairs) {
        const auto grid = model_smile(system, p, tenors, pillars, convention, quad);
        for (std::size_t a = 0; a < tenors.size(); ++a)
            for (std::size_t b = 0; b < pillars.size(); ++b)
                quotes.push_back({p, tenors[a], pillars[b], grid.vols[a][b], convention});
    }
    return quotes;
}

}  // namespace mhfx
