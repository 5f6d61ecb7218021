#include "dsr/warp.hpp"

#include <algorithm>
#include <unordered_map>

#include "dsr/error.hpp"

namespace dsr {
namespace {

Vec3 displaced_coords(const GridSpec& spec, std::size_t idx, const Vec3& flow) {
  const auto c = spec.coords(idx);
  return Vec3(c[0], c[1], c[2]) + flow / spec.voxel_size;
}

void check_finite(const Vec3& f) {
  if (!f.allFinite()) throw Error(ErrorCode::NonFiniteFlow, "forward_warp: non-finite flow");
}

// Two passes: weight totals first, then contributions scaled by w / total.
// A target with a single contributor therefore receives exactly its vector.
template <class Sources, class Accumulator>
void scatter(const GridSpec& spec, int k, const Sources& sources, Accumulator& acc) {
  for (const auto& s : sources) {
    for (const auto& tap : trilinear_weights(spec, s.coords)) {
      acc.weight(tap.index) += s.mass * tap.weight;
    }
  }
  for (const auto& s : sources) {
    for (const auto& tap : trilinear_weights(spec, s.coords)) {
      const double total = acc.weight(tap.index);
      if (total < kMinWarpWeight) continue;
      const double share = (s.mass * tap.weight) / total;
      double* out = acc.vector(tap.index);
      for (int d = 0; d < k; ++d) out[d] += share * s.value[d];
    }
  }
}

struct Source {
  std::size_t index;
  double mass;
  Vec3 coords;
  std::span<const double> value;
};

struct DenseAccumulator {
  std::vector<double> weights;
  std::vector<double> vectors;
  int k;

  double& weight(std::size_t i) { return weights[i]; }
  double* vector(std::size_t i) { return vectors.data() + i * static_cast<std::size_t>(k); }
};

struct SparseAccumulator {
  std::unordered_map<std::size_t, std::size_t> slot;
  std::vector<std::size_t> targets;
  std::vector<double> weights;
  std::vector<double> vectors;
  int k;

  std::size_t find(std::size_t i) {
    auto [it, inserted] = slot.try_emplace(i, targets.size());
    if (inserted) {
      targets.push_back(i);
      weights.push_back(0.0);
      vectors.resize(vectors.size() + static_cast<std::size_t>(k), 0.0);
    }
    return it->second;
  }
  double& weight(std::size_t i) { return weights[find(i)]; }
  double* vector(std::size_t i) { return vectors.data() + find(i) * static_cast<std::size_t>(k); }
};

}  // namespace

InstanceMaskVolume forward_warp(const InstanceMaskVolume& state, const VectorVolume& flow,
                                const InstanceMaskVolume& motion_masks) {
  require_same_grid(state.spec, flow.spec, "forward_warp");
  require_same_grid(state.spec, motion_masks.spec, "forward_warp");
  require_same_channels(state.k, motion_masks.k, "forward_warp");
  const GridSpec& spec = state.spec;
  const int k = state.k;

  std::vector<Source> sources;
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    check_finite(flow.values[i]);
    const double m = motion_masks.object_mass(i);
    if (m <= 0.0) continue;
    sources.push_back({i, m, displaced_coords(spec, i, flow.values[i]), state.at(i)});
  }

  DenseAccumulator acc{std::vector<double>(spec.voxel_count(), 0.0),
                       std::vector<double>(spec.voxel_count() * static_cast<std::size_t>(k), 0.0), k};
  scatter(spec, k, sources, acc);

  InstanceMaskVolume out(spec, k);
  for (std::size_t j = 0; j < spec.voxel_count(); ++j) {
    if (acc.weights[j] < kMinWarpWeight) continue;
    std::copy_n(acc.vector(j), k, out.at(j).begin());
  }
  return out;
}

int SparseMaskSet::label(std::size_t i) const {
  const auto p = at(i);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

SparseMaskSet SparseMaskSet::from_dense(const InstanceMaskVolume& dense) {
  SparseMaskSet s{dense.spec, dense.k, {}, {}};
  for (std::size_t v = 0; v < dense.voxel_count(); ++v) {
    if (dense.object_mass(v) <= 0.0) continue;
    s.voxels.push_back(static_cast<std::uint32_t>(v));
    const auto p = dense.at(v);
    s.probs.insert(s.probs.end(), p.begin(), p.end());
  }
  return s;
}

InstanceMaskVolume SparseMaskSet::to_dense() const {
  InstanceMaskVolume d(spec, k);
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    const auto p = at(i);
    std::copy(p.begin(), p.end(), d.at(voxels[i]).begin());
  }
  return d;
}

std::vector<Vec3> blended_flow_sparse(const SparseMaskSet& masks, const TransformSet& transforms) {
  require_same_channels(masks.k, transforms.size(), "blended_flow_sparse");
  const BlendedFlowField field(transforms);
  std::vector<Vec3> flow;
  flow.reserve(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    flow.push_back(field.at(masks.at(i), voxel_center(masks.spec, masks.voxels[i])));
  }
  return flow;
}

SparseMaskSet forward_warp_sparse(const SparseMaskSet& state, const SparseMaskSet& motion_masks,
                                  std::span<const Vec3> flow) {
  require_same_grid(state.spec, motion_masks.spec, "forward_warp_sparse");
  require_same_channels(state.k, motion_masks.k, "forward_warp_sparse");
  if (flow.size() != motion_masks.size()) {
    throw Error(ErrorCode::InvalidArgument, "forward_warp_sparse: one flow vector per voxel");
  }
  const GridSpec& spec = state.spec;
  const int k = state.k;

  std::vector<double> background(static_cast<std::size_t>(k), 0.0);
  background.back() = 1.0;
  std::vector<Source> sources;
  sources.reserve(motion_masks.size());
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < motion_masks.size(); ++i) {
    check_finite(flow[i]);
    const auto p = motion_masks.at(i);
    double m = 0.0;
    for (int d = 0; d + 1 < k; ++d) m += p[static_cast<std::size_t>(d)];
    if (m <= 0.0) continue;
    const std::uint32_t v = motion_masks.voxels[i];
    while (cursor < state.size() && state.voxels[cursor] < v) ++cursor;
    const bool stored = cursor < state.size() && state.voxels[cursor] == v;
    sources.push_back({v, m, displaced_coords(spec, v, flow[i]),
                       stored ? state.at(cursor) : std::span<const double>(background)});
  }

  SparseAccumulator acc{{}, {}, {}, {}, k};
  scatter(spec, k, sources, acc);

  std::vector<std::size_t> order(acc.targets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return acc.targets[a] < acc.targets[b]; });

  SparseMaskSet out{spec, k, {}, {}};
  for (std::size_t o : order) {
    if (acc.weights[o] < kMinWarpWeight) continue;
    const double* p = acc.vectors.data() + o * static_cast<std::size_t>(k);
    double m = 0.0;
    for (int d = 0; d + 1 < k; ++d) m += p[d];
    if (m <= 0.0) continue;
    out.voxels.push_back(static_cast<std::uint32_t>(acc.targets[o]));
    out.probs.insert(out.probs.end(), p, p + k);
  }
  return out;
}

}  // namespace dsr
