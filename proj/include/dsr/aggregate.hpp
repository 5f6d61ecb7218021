#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dsr/masks.hpp"
#include "dsr/perception.hpp"
#include "dsr/rigid_motion.hpp"
#include "dsr/tsdf.hpp"

namespace dsr {

/// Dsr warps history by predicted motion, GtWarp by ground-truth motion,
/// NoWarp aggregates unwarped history, SingleStep keeps no history.
enum class AggregationMode { Dsr, NoWarp, SingleStep, GtWarp };

std::string_view to_string(AggregationMode mode);
AggregationMode parse_mode(std::string_view name);

struct FusionConfig {
  int k = 5;
  /// Occupied voxels take their segment's channel with probability 1 - eta,
  /// the remainder on background.
  double eta = 0.05;
  /// Channels whose total probability falls below this are emptied and their
  /// identity retired.
  double empty_mass = 0.5;
  /// A prior channel claims part of a segment only if it labels at least this
  /// fraction of the segment's voxels.
  double min_piece_fraction = 0.2;
  /// A segment with no history overlap joins the nearest live channel that no
  /// other segment claimed if their horizontal centroids are this close (m);
  /// 0 disables.
  double reassociation_radius = 0.15;
  /// Only channels whose history is at least this fraction observed free
  /// space are candidates, so hidden objects keep their channel.
  double reassociation_min_free = 0.5;
  PerceptionConfig perception;
};

/// Persistent amodal scene state: instance probabilities plus one stable
/// identity per object channel (-1 while the channel is empty).
struct DsrState {
  InstanceMaskVolume masks;
  int step = 0;
  std::vector<int> identities;
  int next_identity = 0;

  static DsrState empty(const GridSpec& spec, int k);
};

/// Fuses an observation with history. prior may be null (first step, or
/// SingleStep); warped_prior replaces prior->masks as the history volume in
/// Dsr/GtWarp. A null obs means nothing is observed and history is carried
/// unchanged, which is how predicted rollouts advance.
/// Segments without history support take an empty channel, else evict the
/// unused channel with the least history. Throws TooManyObjects when the live
/// segments do not fit in k-1 channels.
DsrState aggregate(const DsrState* prior, const InstanceMaskVolume* warped_prior,
                   const TsdfVolume* obs, AggregationMode mode, const FusionConfig& cfg);

/// One interaction step: warp the state by the blended flow of
/// (motion_masks, transforms) unless the mode skips warping, then aggregate
/// obs_next. GtWarp expects ground-truth masks and transforms.
DsrState step(const DsrState& state, const InstanceMaskVolume& motion_masks,
              const TransformSet& transforms, const TsdfVolume* obs_next, AggregationMode mode,
              const FusionConfig& cfg);

/// As step, with the scene flow already computed.
DsrState step_with_flow(const DsrState& state, const InstanceMaskVolume& motion_masks,
                        const VectorVolume& flow, const TsdfVolume* obs_next,
                        AggregationMode mode, const FusionConfig& cfg);

inline constexpr int kStateSchemaVersion = 1;

/// Writes <stem>.vol (k-channel f32 masks) and <stem>.json
/// {schema_version, step, identities, next_identity}.
void write_state(const std::filesystem::path& dir, const std::string& stem, const DsrState& s);
DsrState read_state(const std::filesystem::path& dir, const std::string& stem);

}  // namespace dsr
