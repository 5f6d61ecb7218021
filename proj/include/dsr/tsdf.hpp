#pragma once

#include <cstdint>
#include <vector>

#include "dsr/volume_io.hpp"
#include "dsr/voxel_grid.hpp"

namespace dsr {

/// Truncated signed distance observation. values are sd/tau clamped to
/// [-1, 1], positive in front of the observed surface. unknown[i] != 0 marks
/// voxels no camera ray observed (outside the image, no depth return, or
/// more than tau behind the surface).
struct TsdfVolume {
  GridSpec spec;
  std::vector<float> values;
  std::vector<std::uint8_t> unknown;

  TsdfVolume() = default;
  explicit TsdfVolume(const GridSpec& s)
      : spec(s), values(s.voxel_count(), 1.0f), unknown(s.voxel_count(), 1) {}

  bool observed(std::size_t i) const { return unknown[i] == 0; }
};

/// Two f32 channels per voxel: value, unknown flag.
RawVolume to_raw(const TsdfVolume& v);
TsdfVolume tsdf_from_raw(const RawVolume& raw);

}  // namespace dsr
