#include "dsr/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dsr/error.hpp"

namespace dsr {
namespace {

void require_compatible(const InstanceMaskVolume& a, const InstanceMaskVolume& b,
                        const char* what) {
  require_same_grid(a.spec, b.spec, what);
  require_same_channels(a.k, b.k, what);
}

}  // namespace

CostMatrix pairwise_nll(const InstanceMaskVolume& gt, const InstanceMaskVolume& pred) {
  require_compatible(gt, pred, "pairwise_nll");
  const int k = gt.k;
  CostMatrix w = CostMatrix::Zero(k, k);
  std::vector<double> log_pred(static_cast<std::size_t>(k));
  for (std::size_t v = 0; v < gt.voxel_count(); ++v) {
    const auto g = gt.at(v);
    const auto p = pred.at(v);
    for (int j = 0; j < k; ++j) log_pred[j] = std::log(p[j] + kLogEpsilon);
    for (int i = 0; i < k; ++i) {
      if (g[i] == 0.0) continue;
      for (int j = 0; j < k; ++j) w(i, j) -= g[i] * log_pred[j];
    }
  }
  return w;
}

double matching_cost(const CostMatrix& w, const ChannelPermutation& p) {
  double c = 0.0;
  for (int i = 0; i < p.size(); ++i) c += w(i, p(i));
  return c;
}

ChannelPermutation optimal_matching(const CostMatrix& w) {
  if (w.rows() != w.cols() || w.rows() < 1) {
    throw Error(ErrorCode::InvalidArgument, "optimal_matching needs a square cost matrix");
  }
  const int k = static_cast<int>(w.rows());
  if (k > kMaxMatchingChannels) {
    throw Error(ErrorCode::KTooLarge, "optimal_matching enumerates at most k = 6 channels, got " +
                                          std::to_string(k));
  }
  ChannelPermutation current = ChannelPermutation::identity(k);
  ChannelPermutation best = current;
  double best_cost = matching_cost(w, current);
  // next_permutation walks lexicographic order, so a strict improvement test
  // keeps the lexicographically smallest optimum.
  while (std::next_permutation(current.mapping.begin(), current.mapping.end() - 1)) {
    const double c = matching_cost(w, current);
    if (c < best_cost) {
      best_cost = c;
      best = current;
    }
  }
  return best;
}

double mask_loss(const InstanceMaskVolume& pred, const InstanceMaskVolume& gt,
                 const ChannelPermutation& p) {
  require_compatible(gt, pred, "mask_loss");
  require_same_channels(p.size(), gt.k, "mask_loss permutation");
  double total = 0.0;
  for (std::size_t v = 0; v < gt.voxel_count(); ++v) {
    const auto g = gt.at(v);
    const auto q = pred.at(v);
    double voxel = 0.0;
    for (int i = 0; i < gt.k; ++i) {
      if (g[i] == 0.0) continue;
      voxel -= g[i] * std::log(q[p(i)] + kLogEpsilon);
    }
    total += voxel;
  }
  return total / static_cast<double>(gt.voxel_count());
}

double total_loss(double motion, double mask, const LossConfig& cfg) {
  return motion + cfg.alpha * mask;
}

std::vector<ChannelPermutation> sequence_matching(const std::vector<CostMatrix>& costs) {
  std::vector<ChannelPermutation> orders;
  orders.reserve(costs.size());
  for (const auto& w : costs) {
    if (orders.empty()) {
      orders.push_back(optimal_matching(w));
      continue;
    }
    // Relabel ground truth by the accepted order: row r of the relabeled
    // matrix is the original ground-truth channel prev^-1(r).
    const ChannelPermutation& prev = orders.back();
    const ChannelPermutation prev_inv = prev.inverse();
    CostMatrix relabeled(w.rows(), w.cols());
    for (int r = 0; r < w.rows(); ++r) relabeled.row(r) = w.row(prev_inv(r));
    const ChannelPermutation q = optimal_matching(relabeled);
    orders.push_back(prev.then(q));
  }
  return orders;
}

}  // namespace dsr
