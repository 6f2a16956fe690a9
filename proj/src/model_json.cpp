#include "mhfx/model_json.hpp"

#include <fstream>

#include "mhfx/errors.hpp"

namespace mhfx {

using nlohmann::json;

json system_to_json(const CurrencySystem& system) {
    json doc;
    doc["currencies"] = system.currencies;
    doc["rates"] = json::object();
    for (const auto& [c, r] : system.rates) doc["rates"][c] = r;
    doc["measure"] = system.measure;
    doc["factors"] = json::array();
    for (const auto& f : system.factors)
        doc["factors"].push_back({{"kappa", f.kappa}, {"theta", f.theta}, {"xi", f.xi}, {"rho", f.rho}, {"v0", f.v0}});
    doc["exposures"] = json::object();
    for (const auto& [c, a] : system.exposures) doc["exposures"][c] = a;
    doc["spots"] = json::object();
    for (const auto& [p, s] : system.spots) doc["spots"][p] = s;
    return doc;
}

namespace {

const json& require(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    return obj.at(key);
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError("expected a number at " + where);
    return v.get<double>();
}

}  // namespace

CurrencySystem system_from_json(const json& doc) {
    CurrencySystem s;
    try {
        for (const auto& c : require(doc, "currencies")) s.currencies.push_back(c.get<std::string>());
        for (const auto& [c, r] : require(doc, "rates").items()) s.rates[c] = number(r, "rates." + c);
        s.measure = require(doc, "measure").get<std::string>();
        std::size_t k = 0;
        for (const auto& f : require(doc, "factors")) {
            const std::string where = "factors[" + std::to_string(k++) + "].";
            s.factors.push_back({number(require(f, "kappa"), where + "kappa"), number(require(f, "theta"), where + "theta"),
                                 number(require(f, "xi"), where + "xi"), number(require(f, "rho"), where + "rho"),
                                 number(require(f, "v0"), where + "v0")});
        }
        for (const auto& [c, a] : require(doc, "exposures").items()) {
            std::vector<double> v;
            for (const auto& x : a) v.push_back(number(x, "exposures." + c));
            s.exposures[c] = std::move(v);
        }
        if (doc.contains("spots"))
            for (const auto& [p, x] : doc.at("spots").items()) s.spots[p] = number(x, "spots." + p);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model document: ") + e.what());
    }
    s.validate();
    return s;
}

CurrencySystem load_system(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return system_from_json(doc);
}

void save_system(const CurrencySystem& system, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << system_to_json(system).dump(2) << '\n';
}

}  // namespace mhfx
