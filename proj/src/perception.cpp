#include "dsr/perception.hpp"

#include <algorithm>
#include <deque>

namespace dsr {

std::vector<VoxelClass> classify_voxels(const TsdfVolume& obs, const PerceptionConfig& cfg) {
  const GridSpec& spec = obs.spec;
  std::vector<VoxelClass> classes(spec.voxel_count(), VoxelClass::Unknown);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!obs.observed(i)) continue;
    const float t = obs.values[i];
    if (static_cast<int>(i % spec.dims[2]) < cfg.table_layers || t >= cfg.surface_band) {
      classes[i] = VoxelClass::Free;
    } else if (t > -cfg.shell_depth) {
      classes[i] = VoxelClass::Occupied;
    }
  }
  return classes;
}

std::vector<std::vector<std::uint32_t>> connected_components(const GridSpec& spec,
                                                             std::span<const std::uint8_t> mask) {
  std::vector<std::uint8_t> visited(mask.size(), 0);
  std::vector<std::vector<std::uint32_t>> components;
  std::deque<std::uint32_t> queue;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || visited[seed]) continue;
    std::vector<std::uint32_t> comp;
    visited[seed] = 1;
    queue.push_back(static_cast<std::uint32_t>(seed));
    while (!queue.empty()) {
      const std::uint32_t v = queue.front();
      queue.pop_front();
      comp.push_back(v);
      const auto c = spec.coords(v);
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz) {
            const int x = c[0] + dx, y = c[1] + dy, z = c[2] + dz;
            if (!spec.contains(x, y, z)) continue;
            const std::size_t n = spec.index(x, y, z);
            if (!mask[n] || visited[n]) continue;
            visited[n] = 1;
            queue.push_back(static_cast<std::uint32_t>(n));
          }
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    components.push_back(std::move(comp));
  }
  return components;
}

Perception perceive(const TsdfVolume& obs, const PerceptionConfig& cfg) {
  const GridSpec& spec = obs.spec;
  Perception out;
  out.classes = classify_voxels(obs, cfg);

  std::vector<std::uint8_t> occupied(out.classes.size(), 0);
  for (std::size_t i = 0; i < occupied.size(); ++i) {
    occupied[i] = out.classes[i] == VoxelClass::Occupied;
  }
  auto components = connected_components(spec, occupied);

  std::vector<int> owner(spec.voxel_count(), -1);
  std::vector<std::vector<std::uint32_t>> kept;
  for (auto& comp : components) {
    if (static_cast<int>(comp.size()) < cfg.min_segment_voxels) continue;
    for (auto v : comp) owner[v] = static_cast<int>(kept.size());
    kept.push_back(std::move(comp));
  }

  // Amodal guess: claim unobserved voxels (and table-layer voxels) beneath
  // each occupied voxel until a free voxel or an owned voxel is reached.
  for (std::size_t s = 0; s < kept.size(); ++s) {
    Segment seg;
    seg.occupied = kept[s].size();
    seg.voxels = kept[s];
    for (auto v : kept[s]) {
      for (std::size_t below = v; below % spec.dims[2] != 0;) {
        --below;
        if (owner[below] != -1) break;
        const bool table = static_cast<int>(below % spec.dims[2]) < cfg.table_layers;
        if (out.classes[below] == VoxelClass::Free && !table) break;
        if (out.classes[below] == VoxelClass::Occupied) break;
        owner[below] = static_cast<int>(s);
        seg.voxels.push_back(static_cast<std::uint32_t>(below));
      }
    }
    std::sort(seg.voxels.begin(), seg.voxels.end());
    out.segments.push_back(std::move(seg));
  }
  return out;
}

}  // namespace dsr
