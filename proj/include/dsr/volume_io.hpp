#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dsr/voxel_grid.hpp"

namespace dsr {

// Binary volume layout, all little-endian:
//   bytes 0-5   magic "DSRVOL"
//   bytes 6-7   u16 format version (kVolumeFormatVersion)
//   bytes 8-11  u32 channel count
//   bytes 12-15 u32 dtype (0 = f32, 1 = u8)
//   3 x u32 dims (nx, ny, nz), f64 voxel_size, 3 x f64 origin
//   payload: voxel-major in grid index order (z fastest, x slowest), channels
//   interleaved per voxel.
inline constexpr std::uint16_t kVolumeFormatVersion = 1;

enum class VolumeDType : std::uint32_t { Float32 = 0, UInt8 = 1 };

struct RawVolume {
  GridSpec spec;
  std::uint32_t channels = 1;
  VolumeDType dtype = VolumeDType::Float32;
  std::vector<float> f32;
  std::vector<std::uint8_t> u8;
};

std::vector<std::uint8_t> encode_volume(const RawVolume& v);
RawVolume decode_volume(std::span<const std::uint8_t> bytes);

void write_volume(const std::filesystem::path& path, const RawVolume& v);
RawVolume read_volume(const std::filesystem::path& path);

RawVolume to_raw(const ScalarVolume& v);
RawVolume to_raw(const VectorVolume& v);
ScalarVolume scalar_from_raw(const RawVolume& raw);
VectorVolume vector_from_raw(const RawVolume& raw);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace dsr
