#pragma once

#include <vector>

#include <Eigen/Core>

#include "dsr/masks.hpp"

namespace dsr {

using CostMatrix = Eigen::MatrixXd;

inline constexpr double kLogEpsilon = 1e-8;
inline constexpr int kMaxMatchingChannels = 6;

struct LossConfig {
  double alpha = 5.0;
};

/// W(i, j) = -sum_voxels gt(i) * log(pred(j) + eps).
CostMatrix pairwise_nll(const InstanceMaskVolume& gt, const InstanceMaskVolume& pred);

/// Sum_i w(i, p(i)) over all channels, background included.
double matching_cost(const CostMatrix& w, const ChannelPermutation& p);

/// Exhaustive search over the (k-1)! permutations of object channels, the
/// background pinned. Ties go to the lexicographically smallest permutation.
/// Throws KTooLarge for k > 6.
ChannelPermutation optimal_matching(const CostMatrix& w);

/// Mean over voxels of -sum_i gt(i) * log(pred(p(i)) + eps).
double mask_loss(const InstanceMaskVolume& pred, const InstanceMaskVolume& gt,
                 const ChannelPermutation& p);

double total_loss(double motion, double mask, const LossConfig& cfg = {});

/// Per-step ground-truth orders for a sequence. costs[t] holds W against the
/// original ground-truth labels at step t. Step t's ground truth is first
/// relabeled by step t-1's accepted order, matched, and the composition is
/// accepted; ties therefore favour keeping the previous labeling.
std::vector<ChannelPermutation> sequence_matching(const std::vector<CostMatrix>& costs);

}  // namespace dsr
