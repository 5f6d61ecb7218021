#include "dsr/aggregate.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include <json.hpp>

#include "dsr/error.hpp"
#include "dsr/matching.hpp"
#include "dsr/warp.hpp"

namespace dsr {
namespace {

// Splits segments along the history labeling so touching objects that were
// separate channels stay separate, and merges pieces of one channel that the
// observation shows as disconnected. Segments with no history support keep
// their perception order after all supported pieces.
std::vector<Segment> split_by_history(const GridSpec& spec, const std::vector<Segment>& segments,
                                      const std::vector<std::uint8_t>& history, int k,
                                      const FusionConfig& cfg) {
  const int bg = k - 1;
  std::vector<std::vector<std::uint32_t>> pieces(static_cast<std::size_t>(bg));
  std::vector<Segment> unsupported;

  for (const auto& seg : segments) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (auto v : seg.voxels) ++counts[history[v]];
    const double need = std::max(cfg.min_piece_fraction * static_cast<double>(seg.voxels.size()),
                                 static_cast<double>(cfg.perception.min_segment_voxels));
    std::vector<int> kept;
    for (int c = 0; c < bg; ++c) {
      if (static_cast<double>(counts[static_cast<std::size_t>(c)]) >= need) kept.push_back(c);
    }
    if (kept.empty()) {
      unsupported.push_back(seg);
      continue;
    }
    if (kept.size() == 1) {
      auto& dst = pieces[static_cast<std::size_t>(kept[0])];
      dst.insert(dst.end(), seg.voxels.begin(), seg.voxels.end());
      continue;
    }
    // Multi-source BFS inside the segment from voxels of kept channels.
    const auto& vox = seg.voxels;
    std::vector<int> label(vox.size(), -1);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < vox.size(); ++i) {
      const int h = history[vox[i]];
      if (std::find(kept.begin(), kept.end(), h) != kept.end()) {
        label[i] = h;
        queue.push_back(i);
      }
    }
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const auto c = spec.coords(vox[i]);
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz) {
            const int x = c[0] + dx, y = c[1] + dy, z = c[2] + dz;
            if (!spec.contains(x, y, z)) continue;
            const auto n = static_cast<std::uint32_t>(spec.index(x, y, z));
            const auto it = std::lower_bound(vox.begin(), vox.end(), n);
            if (it == vox.end() || *it != n) continue;
            const auto j = static_cast<std::size_t>(it - vox.begin());
            if (label[j] != -1) continue;
            label[j] = label[i];
            queue.push_back(j);
          }
        }
      }
    }
    for (std::size_t i = 0; i < vox.size(); ++i) {
      // Voxels unreachable from any kept voxel (only possible through the
      // shadow fill) go to the first kept channel.
      const int c = label[i] == -1 ? kept[0] : label[i];
      pieces[static_cast<std::size_t>(c)].push_back(vox[i]);
    }
  }

  std::vector<Segment> out;
  for (auto& p : pieces) {
    if (p.empty()) continue;
    std::sort(p.begin(), p.end());
    Segment s;
    s.voxels = std::move(p);
    s.occupied = s.voxels.size();
    out.push_back(std::move(s));
  }
  for (auto& s : unsupported) out.push_back(std::move(s));
  // Splitting never creates more segments than there are channels.
  if (out.size() > static_cast<std::size_t>(bg) && segments.size() < out.size()) return segments;
  return out;
}

}  // namespace

std::string_view to_string(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::Dsr: return "dsr";
    case AggregationMode::NoWarp: return "nowarp";
    case AggregationMode::SingleStep: return "singlestep";
    case AggregationMode::GtWarp: return "gtwarp";
  }
  return "unknown";
}

AggregationMode parse_mode(std::string_view name) {
  for (auto m : {AggregationMode::Dsr, AggregationMode::NoWarp, AggregationMode::SingleStep,
                 AggregationMode::GtWarp}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown aggregation mode: " + std::string(name));
}

DsrState DsrState::empty(const GridSpec& spec, int k) {
  DsrState s;
  s.masks = InstanceMaskVolume(spec, k);
  s.identities.assign(static_cast<std::size_t>(k - 1), -1);
  return s;
}

DsrState aggregate(const DsrState* prior, const InstanceMaskVolume* warped_prior,
                   const TsdfVolume* obs, AggregationMode mode, const FusionConfig& cfg) {
  if (mode == AggregationMode::SingleStep && (prior || warped_prior)) {
    throw Error(ErrorCode::InvalidArgument, "SingleStep aggregation takes no history");
  }
  if (mode == AggregationMode::NoWarp && warped_prior) {
    throw Error(ErrorCode::InvalidArgument, "NoWarp aggregation takes no warped history");
  }
  if ((mode == AggregationMode::Dsr || mode == AggregationMode::GtWarp) && prior && !warped_prior) {
    throw Error(ErrorCode::InvalidArgument, "warping modes need the warped history");
  }
  if (!obs && !prior) {
    throw Error(ErrorCode::InvalidArgument, "aggregate needs an observation or a prior state");
  }

  const int k = prior ? prior->masks.k : cfg.k;
  if (k > kMaxMatchingChannels) {
    throw Error(ErrorCode::KTooLarge, "aggregate supports at most 6 channels");
  }
  const int bg = k - 1;
  const GridSpec spec = obs ? obs->spec : prior->masks.spec;
  const InstanceMaskVolume* history = warped_prior ? warped_prior : (prior ? &prior->masks : nullptr);
  if (history) {
    require_same_grid(spec, history->spec, "aggregate");
    require_same_channels(k, history->k, "aggregate");
  }

  std::vector<std::uint8_t> history_labels;
  std::vector<double> history_mass(static_cast<std::size_t>(k), 0.0);
  if (history) {
    history_labels = history->argmax_labels();
    history_mass = history->channel_mass();
  }

  Perception perception;
  if (obs) {
    perception = perceive(*obs, cfg.perception);
    if (history) {
      perception.segments =
          split_by_history(spec, perception.segments, history_labels, k, cfg);
    }
  }
  const auto& segments = perception.segments;
  const int n_seg = static_cast<int>(segments.size());
  if (n_seg > bg) {
    throw Error(ErrorCode::TooManyObjects, "aggregate: " + std::to_string(n_seg) +
                                               " segments for " + std::to_string(bg) + " channels");
  }

  // Segment-to-channel assignment by maximal overlap with the history labels.
  std::vector<int> seg_channel(static_cast<std::size_t>(n_seg), -1);
  std::vector<bool> channel_used(static_cast<std::size_t>(bg), false);
  std::vector<bool> from_history(static_cast<std::size_t>(n_seg), false);
  if (history && n_seg > 0) {
    CostMatrix overlap = CostMatrix::Zero(k, k);
    for (int j = 0; j < n_seg; ++j) {
      for (auto v : segments[static_cast<std::size_t>(j)].voxels) {
        const int h = history_labels[v];
        if (h != bg) overlap(h, j) += 1.0;
      }
    }
    const ChannelPermutation p = optimal_matching(-overlap);
    for (int c = 0; c < bg; ++c) {
      const int j = p(c);
      if (j < n_seg && overlap(c, j) > 0.0) {
        seg_channel[static_cast<std::size_t>(j)] = c;
        from_history[static_cast<std::size_t>(j)] = true;
        channel_used[static_cast<std::size_t>(c)] = true;
      }
    }
  }
  // A segment without overlap that lies near a live channel nothing else
  // claimed is that object seen elsewhere; the channel's stale history goes.
  std::vector<bool> evicted(static_cast<std::size_t>(k), false);
  if (history && n_seg > 0 && cfg.reassociation_radius > 0.0) {
    std::vector<Vec3> history_centroid(static_cast<std::size_t>(bg), Vec3::Zero());
    std::vector<double> history_count(static_cast<std::size_t>(bg), 0.0);
    std::vector<double> history_free(static_cast<std::size_t>(bg), 0.0);
    for (std::size_t v = 0; v < history_labels.size(); ++v) {
      const int h = history_labels[v];
      if (h == bg) continue;
      history_centroid[static_cast<std::size_t>(h)] += voxel_center(spec, v);
      history_count[static_cast<std::size_t>(h)] += 1.0;
      if (obs->observed(v) && obs->values[v] > 0.0f) history_free[static_cast<std::size_t>(h)] += 1.0;
    }
    constexpr double kFar = 1e6;
    CostMatrix dist = CostMatrix::Constant(k, k, kFar);
    dist(bg, bg) = 0.0;
    for (int c = 0; c < bg; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      if (channel_used[cu] || history_mass[cu] < cfg.empty_mass || history_count[cu] == 0.0) continue;
      if (history_free[cu] < cfg.reassociation_min_free * history_count[cu]) continue;
      const Vec3 hc = history_centroid[cu] / history_count[cu];
      for (int j = 0; j < n_seg; ++j) {
        if (seg_channel[static_cast<std::size_t>(j)] != -1) continue;
        Vec3 sc = Vec3::Zero();
        const auto& vox = segments[static_cast<std::size_t>(j)].voxels;
        for (auto v : vox) sc += voxel_center(spec, v);
        sc /= static_cast<double>(vox.size());
        const double d = (sc - hc).head<2>().norm();
        if (d <= cfg.reassociation_radius) dist(c, j) = d;
      }
    }
    const ChannelPermutation p = optimal_matching(dist);
    for (int c = 0; c < bg; ++c) {
      const int j = p(c);
      if (j >= n_seg || dist(c, j) >= kFar) continue;
      seg_channel[static_cast<std::size_t>(j)] = c;
      from_history[static_cast<std::size_t>(j)] = true;
      channel_used[static_cast<std::size_t>(c)] = true;
      evicted[static_cast<std::size_t>(c)] = true;
    }
  }
  // Remaining new segments take the lowest empty channel. Without one, the
  // unused channel with the least history is evicted and its history dropped.
  for (int j = 0; j < n_seg; ++j) {
    if (seg_channel[static_cast<std::size_t>(j)] != -1) continue;
    int chosen = -1;
    for (int c = 0; c < bg && chosen == -1; ++c) {
      if (!channel_used[static_cast<std::size_t>(c)] &&
          history_mass[static_cast<std::size_t>(c)] < cfg.empty_mass) {
        chosen = c;
      }
    }
    if (chosen == -1) {
      for (int c = 0; c < bg; ++c) {
        if (channel_used[static_cast<std::size_t>(c)]) continue;
        if (chosen == -1 || history_mass[static_cast<std::size_t>(c)] <
                                history_mass[static_cast<std::size_t>(chosen)]) {
          chosen = c;
        }
      }
      evicted[static_cast<std::size_t>(chosen)] = true;
    }
    seg_channel[static_cast<std::size_t>(j)] = chosen;
    channel_used[static_cast<std::size_t>(chosen)] = true;
  }

  DsrState out;
  out.step = prior ? prior->step + 1 : 0;
  out.next_identity = prior ? prior->next_identity : 0;
  out.identities = prior ? prior->identities : std::vector<int>(static_cast<std::size_t>(bg), -1);
  out.masks = InstanceMaskVolume(spec, k);

  std::vector<int> voxel_channel(spec.voxel_count(), -1);
  for (int j = 0; j < n_seg; ++j) {
    for (auto v : segments[static_cast<std::size_t>(j)].voxels) {
      voxel_channel[v] = seg_channel[static_cast<std::size_t>(j)];
    }
  }
  for (std::size_t v = 0; v < spec.voxel_count(); ++v) {
    auto p = out.masks.at(v);
    if (voxel_channel[v] >= 0) {
      p[static_cast<std::size_t>(bg)] = cfg.eta;
      p[static_cast<std::size_t>(voxel_channel[v])] = 1.0 - cfg.eta;
    } else if (obs && perception.classes[v] == VoxelClass::Free) {
      continue;
    } else if (history) {
      const auto h = history->at(v);
      std::copy(h.begin(), h.end(), p.begin());
      for (int c = 0; c < bg; ++c) {
        if (!evicted[static_cast<std::size_t>(c)]) continue;
        p[static_cast<std::size_t>(bg)] += p[static_cast<std::size_t>(c)];
        p[static_cast<std::size_t>(c)] = 0.0;
      }
    }
  }

  for (int j = 0; j < n_seg; ++j) {
    const auto c = static_cast<std::size_t>(seg_channel[static_cast<std::size_t>(j)]);
    if (!from_history[static_cast<std::size_t>(j)] || out.identities[c] == -1) {
      out.identities[c] = out.next_identity++;
    }
  }

  const auto mass = out.masks.channel_mass();
  for (int c = 0; c < bg; ++c) {
    if (mass[static_cast<std::size_t>(c)] >= cfg.empty_mass) continue;
    out.identities[static_cast<std::size_t>(c)] = -1;
    if (mass[static_cast<std::size_t>(c)] == 0.0) continue;
    for (std::size_t v = 0; v < spec.voxel_count(); ++v) {
      auto p = out.masks.at(v);
      p[static_cast<std::size_t>(bg)] += p[static_cast<std::size_t>(c)];
      p[static_cast<std::size_t>(c)] = 0.0;
    }
  }
  return out;
}

namespace {

DsrState advance_without_warp(const DsrState& state, const TsdfVolume* obs_next,
                              AggregationMode mode, const FusionConfig& cfg) {
  if (mode == AggregationMode::NoWarp) return aggregate(&state, nullptr, obs_next, mode, cfg);
  if (!obs_next) throw Error(ErrorCode::InvalidArgument, "SingleStep needs an observation");
  FusionConfig local = cfg;
  local.k = state.masks.k;
  DsrState out = aggregate(nullptr, nullptr, obs_next, mode, local);
  out.step = state.step + 1;
  for (auto& id : out.identities) {
    if (id != -1) id += state.next_identity;
  }
  out.next_identity += state.next_identity;
  return out;
}

bool warps(AggregationMode mode) {
  return mode == AggregationMode::Dsr || mode == AggregationMode::GtWarp;
}

}  // namespace

DsrState step_with_flow(const DsrState& state, const InstanceMaskVolume& motion_masks,
                        const VectorVolume& flow, const TsdfVolume* obs_next,
                        AggregationMode mode, const FusionConfig& cfg) {
  if (!warps(mode)) return advance_without_warp(state, obs_next, mode, cfg);
  const InstanceMaskVolume warped = forward_warp(state.masks, flow, motion_masks);
  return aggregate(&state, &warped, obs_next, mode, cfg);
}

DsrState step(const DsrState& state, const InstanceMaskVolume& motion_masks,
              const TransformSet& transforms, const TsdfVolume* obs_next, AggregationMode mode,
              const FusionConfig& cfg) {
  if (!warps(mode)) return advance_without_warp(state, obs_next, mode, cfg);
  return step_with_flow(state, motion_masks, blended_flow(motion_masks, transforms), obs_next, mode,
                        cfg);
}

void write_state(const std::filesystem::path& dir, const std::string& stem, const DsrState& s) {
  write_volume(dir / (stem + ".vol"), to_raw(s.masks));
  nlohmann::json j{{"schema_version", kStateSchemaVersion},
                   {"step", s.step},
                   {"identities", s.identities},
                   {"next_identity", s.next_identity}};
  std::ofstream out(dir / (stem + ".json"));
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / (stem + ".json")).string());
  out << j.dump(2) << "\n";
}

DsrState read_state(const std::filesystem::path& dir, const std::string& stem) {
  const auto path = dir / (stem + ".json");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const auto j = nlohmann::json::parse(in);
  if (j.at("schema_version").get<int>() != kStateSchemaVersion) {
    throw Error(ErrorCode::SchemaVersion, path.string() + ": unsupported schema version");
  }
  DsrState s;
  s.masks = masks_from_raw(read_volume(dir / (stem + ".vol")));
  s.step = j.at("step").get<int>();
  s.identities = j.at("identities").get<std::vector<int>>();
  s.next_identity = j.at("next_identity").get<int>();
  return s;
}

}  // namespace dsr
