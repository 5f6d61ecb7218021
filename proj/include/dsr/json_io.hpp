#pragma once

#include <filesystem>

#include <json.hpp>

#include "dsr/voxel_grid.hpp"

namespace dsr {

/// Pretty-printed with a trailing newline. Throws Io.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
/// Throws Io on unreadable or malformed files.
nlohmann::json read_json(const std::filesystem::path& path);
/// read_json that also requires schema_version == version (SchemaVersion).
nlohmann::json read_versioned_json(const std::filesystem::path& path, int version);

void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);

}  // namespace dsr
