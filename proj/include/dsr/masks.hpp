#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dsr/volume_io.hpp"
#include "dsr/voxel_grid.hpp"

namespace dsr {

/// Per-voxel probability over k channels; channel k-1 is background/empty.
/// Storage is voxel-major with channels contiguous.
struct InstanceMaskVolume {
  GridSpec spec;
  int k = 0;
  std::vector<double> probs;

  InstanceMaskVolume() = default;
  /// All voxels pure background.
  InstanceMaskVolume(const GridSpec& s, int channels);

  int background() const { return k - 1; }
  std::size_t voxel_count() const { return spec.voxel_count(); }

  std::span<double> at(std::size_t voxel) {
    return {probs.data() + voxel * static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
  }
  std::span<const double> at(std::size_t voxel) const {
    return {probs.data() + voxel * static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
  }

  void set_one_hot(std::size_t voxel, int channel);

  /// Probability that the voxel is occupied by any object channel.
  double object_mass(std::size_t voxel) const;

  /// Per-voxel argmax channel (lowest index wins ties).
  std::vector<std::uint8_t> argmax_labels() const;

  /// Sum of channel probability over all voxels.
  std::vector<double> channel_mass() const;

  /// Throws InvalidArgument unless every voxel is a probability simplex.
  void validate(double tol = 1e-6) const;

  static InstanceMaskVolume from_labels(const GridSpec& s, int channels,
                                        std::span<const std::uint8_t> labels);
};

/// Hardened masks are stored as one u8 channel index per voxel.
RawVolume labels_to_raw(const GridSpec& spec, std::span<const std::uint8_t> labels);
std::vector<std::uint8_t> labels_from_raw(const RawVolume& raw);

/// k f32 channels per voxel.
RawVolume to_raw(const InstanceMaskVolume& m);
InstanceMaskVolume masks_from_raw(const RawVolume& raw);

void require_same_channels(int a, int b, const char* what);

/// Bijection on channels; mapping[i] = p(i). The background channel maps to
/// itself.
struct ChannelPermutation {
  std::vector<int> mapping;

  static ChannelPermutation identity(int k);
  int operator()(int i) const { return mapping[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(mapping.size()); }
  ChannelPermutation inverse() const;
  /// (a.then(b))(i) == b(a(i)).
  ChannelPermutation then(const ChannelPermutation& b) const;
  bool is_valid() const;

  bool operator==(const ChannelPermutation&) const = default;
};

}  // namespace dsr
