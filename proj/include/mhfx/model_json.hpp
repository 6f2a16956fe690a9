#pragma once

#include <filesystem>

#include <json.hpp>

#include "mhfx/model.hpp"

namespace mhfx {

nlohmann::json system_to_json(const CurrencySystem& system);
// Throws ParseError on schema problems; the result is validated.
CurrencySystem system_from_json(const nlohmann::json& doc);

CurrencySystem load_system(const std::filesystem::path& path);
void save_system(const CurrencySystem& system, const std::filesystem::path& path);

}  // namespace mhfx
