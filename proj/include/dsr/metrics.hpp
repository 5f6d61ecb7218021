#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dsr/masks.hpp"
#include "dsr/tsdf.hpp"
#include "dsr/voxel_grid.hpp"

namespace dsr {

enum class FlowRegion { Visible, Full };

struct FlowError {
  /// Mean endpoint error in cm.
  double epe_cm = 0.0;
  /// Mean squared endpoint error in cm^2.
  double mse_cm2 = 0.0;
  std::size_t voxels = 0;
};

/// Full averages over every voxel; Visible over voxels flagged in
/// visible_mask. Throws GridMismatch, EmptyRegion.
FlowError flow_error(const VectorVolume& pred, const VectorVolume& gt, FlowRegion region,
                     std::span<const std::uint8_t> visible_mask = {});

/// Object voxels (gt label != background) that are observed with
/// |tsdf| < 1.
std::vector<std::uint8_t> visible_surface_mask(const TsdfVolume& obs,
                                               std::span<const std::uint8_t> gt_labels,
                                               int background);

/// IoU(i, j) between gt object channel i and predicted object channel j of
/// hardened label volumes, (k-1) x (k-1). An empty gt channel scores 1 against
/// an empty prediction and 0 otherwise.
Eigen::MatrixXd iou_matrix(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> pred,
                           int k);

/// Mean over gt object channels of iou(i, p(i)).
double mean_iou(const Eigen::MatrixXd& iou, const ChannelPermutation& p);

struct IouResult {
  double score = 0.0;
  ChannelPermutation order;
};

/// Best per-step channel permutation (background pinned).
IouResult unordered_iou(const Eigen::MatrixXd& iou);
IouResult unordered_iou(const InstanceMaskVolume& gt, const InstanceMaskVolume& pred);

/// One permutation for the whole sequence maximizing the summed per-step mean
/// IoU; score is the mean over steps under it.
IouResult ordered_iou(const std::vector<Eigen::MatrixXd>& per_step);

/// Mean over steps of each step's unordered score.
double mean_unordered_iou(const std::vector<Eigen::MatrixXd>& per_step);

struct MetricsRecord {
  std::uint64_t seed = 0;
  std::string mode;
  double flow_visible_cm = 0.0;
  double flow_full_cm = 0.0;
  double flow_visible_mse_cm2 = 0.0;
  double flow_full_mse_cm2 = 0.0;
  double iou_unordered = 0.0;
  double iou_ordered = 0.0;
};

inline constexpr int kMetricsSchemaVersion = 1;

void to_json(nlohmann::json& j, const MetricsRecord& m);
void from_json(const nlohmann::json& j, MetricsRecord& m);

}  // namespace dsr
