#pragma once

#include <random>
#include <string>

#include "mhfx/model.hpp"
#include "mhfx/model_json.hpp"

namespace mhfx::testing {

inline std::string data_path(const std::string& name) { return std::string(MHFX_TEST_DATA) + "/" + name; }

inline CurrencySystem sample_set(int n) { return load_system(data_path("sample" + std::to_string(n) + ".json")); }

// Random three-currency system in USD measure with mean reversion preserved under every currency measure.
// Factors are allowed to violate the Feller condition.
inline CurrencySystem random_system(std::mt19937_64& rng, std::size_t d = 2) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (;;) {
        CurrencySystem s;
        s.currencies = {"USD", "EUR", "JPY"};
        s.measure = "USD";
        for (const auto& c : s.currencies) {
            s.rates[c] = -0.01 + 0.06 * U(rng);
            std::vector<double> a(d);
            for (auto& x : a) x = 2.0 * U(rng);
            s.exposures[c] = a;
        }
        for (std::size_t k = 0; k < d; ++k)
            s.factors.push_back({0.3 + 2.5 * U(rng), 0.005 + 0.08 * U(rng), 0.1 + 0.9 * U(rng), -0.8 + 1.6 * U(rng),
                                 0.005 + 0.06 * U(rng)});
        s.spots["USDEUR"] = 0.7 + U(rng);
        s.spots["JPYUSD"] = 80.0 + 40.0 * U(rng);
        try {
            for (const auto& c : s.currencies) to_measure(s, c);
            to_measure(s, kNumeraire0);
        } catch (const std::exception&) {
            continue;
        }
        s.validate();
        return s;
    }
}

}  // namespace mhfx::testing
