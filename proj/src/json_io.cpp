#include "dsr/json_io.hpp"

#include <fstream>

#include "dsr/error.hpp"

namespace dsr {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

nlohmann::json read_versioned_json(const std::filesystem::path& path, int version) {
  auto j = read_json(path);
  if (!j.is_object() || !j.contains("schema_version") ||
      j.at("schema_version") != nlohmann::json(version)) {
    throw Error(ErrorCode::SchemaVersion, path.string() + ": unsupported schema version");
  }
  return j;
}

void to_json(nlohmann::json& j, const GridSpec& g) {
  j = nlohmann::json{{"dims", g.dims},
                     {"voxel_size", g.voxel_size},
                     {"origin", {g.origin.x(), g.origin.y(), g.origin.z()}}};
}

void from_json(const nlohmann::json& j, GridSpec& g) {
  g.dims = j.at("dims").get<std::array<int, 3>>();
  g.voxel_size = j.at("voxel_size").get<double>();
  const auto o = j.at("origin").get<std::array<double, 3>>();
  g.origin = Vec3(o[0], o[1], o[2]);
  g.validate();
}

}  // namespace dsr
