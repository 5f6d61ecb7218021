#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dsr/tsdf.hpp"
#include "dsr/voxel_grid.hpp"

namespace dsr {

enum class VoxelClass : std::uint8_t { Free = 0, Occupied = 1, Unknown = 2 };

struct PerceptionConfig {
  /// Observed voxels with -shell_depth < tsdf < surface_band are occupied;
  /// observed voxels at or above surface_band are free.
  float surface_band = 0.0f;
  float shell_depth = 0.5f;
  /// Observed voxels in the lowest layers are table, never occupied.
  int table_layers = 1;
  /// Components with fewer occupied voxels are ignored.
  int min_segment_voxels = 40;
};

/// Occupied voxels of one connected component plus the unobserved voxels in
/// the columns beneath them (down to the table). Voxel indices ascend.
struct Segment {
  std::vector<std::uint32_t> voxels;
  std::size_t occupied = 0;
};

struct Perception {
  std::vector<VoxelClass> classes;
  /// Ordered by the grid index of each component's first occupied voxel.
  std::vector<Segment> segments;
};

std::vector<VoxelClass> classify_voxels(const TsdfVolume& obs, const PerceptionConfig& cfg);

/// 26-connected components of nonzero voxels. Components are ordered by their
/// smallest index; voxel lists ascend.
std::vector<std::vector<std::uint32_t>> connected_components(const GridSpec& spec,
                                                             std::span<const std::uint8_t> mask);

Perception perceive(const TsdfVolume& obs, const PerceptionConfig& cfg = {});

}  // namespace dsr
