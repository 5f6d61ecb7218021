#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dsr/masks.hpp"
#include "dsr/rigid_motion.hpp"
#include "dsr/voxel_grid.hpp"

namespace dsr {

/// Targets whose accumulated weight is below this become pure background.
inline constexpr double kMinWarpWeight = 1e-12;

/// Forward (scatter) warp of `state` by `flow` (meters). Source voxel i
/// carries weight m_i * trilinear kernel, where m_i is the object mass of
/// `motion_masks` at i, to the 8 lattice neighbours of its displaced position.
/// Each target holds the weight-normalized mix of the vectors it received.
/// Accumulation runs in ascending source order, so the result does not depend
/// on threading. Throws GridMismatch, ChannelMismatch, NonFiniteFlow.
InstanceMaskVolume forward_warp(const InstanceMaskVolume& state, const VectorVolume& flow,
                                const InstanceMaskVolume& motion_masks);

/// Mask volume stored only at voxels with nonzero object mass; every other
/// voxel is pure background. Voxel indices ascend.
struct SparseMaskSet {
  GridSpec spec;
  int k = 0;
  std::vector<std::uint32_t> voxels;
  std::vector<double> probs;

  std::size_t size() const { return voxels.size(); }
  std::span<const double> at(std::size_t i) const {
    return {probs.data() + i * static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
  }
  /// Argmax channel of the i-th stored voxel.
  int label(std::size_t i) const;

  static SparseMaskSet from_dense(const InstanceMaskVolume& dense);
  InstanceMaskVolume to_dense() const;
};

/// blended_flow evaluated at the stored voxels only.
std::vector<Vec3> blended_flow_sparse(const SparseMaskSet& masks, const TransformSet& transforms);

/// forward_warp restricted to the stored voxels: `flow[i]` belongs to
/// `motion_masks.voxels[i]`. Targets whose warped vector carries no object
/// mass are not stored. When every source vector has object mass (state and
/// motion masks share support), densifying the result reproduces the dense
/// forward_warp bit for bit.
SparseMaskSet forward_warp_sparse(const SparseMaskSet& state, const SparseMaskSet& motion_masks,
                                  std::span<const Vec3> flow);

}  // namespace dsr
