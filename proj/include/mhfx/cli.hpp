#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace mhfx::cli {

// Provenance block attached to every artifact.
struct RunManifest {
    std::string command;
    std::uint64_t config_hash = 0;                  // options that can change the output
    std::map<std::string, std::uint64_t> inputs;    // input path -> content hash
    std::uint64_t seed = 42;
    std::string version;
    std::string timestamp;                          // UTC, SOURCE_DATE_EPOCH honoured

    nlohmann::json to_json() const;
};

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t h);

// %.10g
std::string format_number(double x);
// Numbers rounded to 10 significant digits.
nlohmann::json rounded(const nlohmann::json& doc);

// CSV artifacts carry the manifest as leading '#' lines, JSON artifacts under the key "manifest".
std::string strip_manifest_csv(const std::string& text);
nlohmann::json strip_manifest_json(nlohmann::json doc);

// Whole command line; returns 0 on success, 1 on a library error, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// "0.5", "6m", "2w", "1y", "30d"
double parse_tenor(std::string_view text);

}  // namespace mhfx::cli
