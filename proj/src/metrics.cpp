#include "dsr/metrics.hpp"

#include <cmath>

#include "dsr/error.hpp"
#include "dsr/matching.hpp"

namespace dsr {

FlowError flow_error(const VectorVolume& pred, const VectorVolume& gt, FlowRegion region,
                     std::span<const std::uint8_t> visible_mask) {
  require_same_grid(pred.spec, gt.spec, "flow_error");
  const std::size_t n = gt.values.size();
  if (region == FlowRegion::Visible && visible_mask.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "flow_error: visible mask size mismatch");
  }
  FlowError e;
  for (std::size_t i = 0; i < n; ++i) {
    if (region == FlowRegion::Visible && !visible_mask[i]) continue;
    const double d2 = (pred.values[i] - gt.values[i]).squaredNorm() * 1e4;
    e.epe_cm += std::sqrt(d2);
    e.mse_cm2 += d2;
    ++e.voxels;
  }
  if (e.voxels == 0) throw Error(ErrorCode::EmptyRegion, "flow_error: no voxel selected");
  e.epe_cm /= static_cast<double>(e.voxels);
  e.mse_cm2 /= static_cast<double>(e.voxels);
  return e;
}

std::vector<std::uint8_t> visible_surface_mask(const TsdfVolume& obs,
                                               std::span<const std::uint8_t> gt_labels,
                                               int background) {
  if (gt_labels.size() != obs.values.size()) {
    throw Error(ErrorCode::GridMismatch, "visible_surface_mask: label count mismatch");
  }
  std::vector<std::uint8_t> mask(gt_labels.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = obs.observed(i) && std::abs(obs.values[i]) < 1.0f && gt_labels[i] != background;
  }
  return mask;
}

Eigen::MatrixXd iou_matrix(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> pred,
                           int k) {
  if (gt.size() != pred.size()) throw Error(ErrorCode::GridMismatch, "iou_matrix: size mismatch");
  const int n = k - 1;
  Eigen::MatrixXd inter = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t v = 0; v < gt.size(); ++v) inter(gt[v], pred[v]) += 1.0;
  const Eigen::VectorXd gt_count = inter.rowwise().sum();
  const Eigen::VectorXd pred_count = inter.colwise().sum().transpose();
  Eigen::MatrixXd iou(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (gt_count(i) == 0.0) {
        iou(i, j) = pred_count(j) == 0.0 ? 1.0 : 0.0;
      } else {
        iou(i, j) = inter(i, j) / (gt_count(i) + pred_count(j) - inter(i, j));
      }
    }
  }
  return iou;
}

double mean_iou(const Eigen::MatrixXd& iou, const ChannelPermutation& p) {
  double sum = 0.0;
  for (int i = 0; i < iou.rows(); ++i) sum += iou(i, p(i));
  return sum / static_cast<double>(iou.rows());
}

namespace {

// Matching cost over k channels: -IoU between object channels, background
// free.
CostMatrix negated(const Eigen::MatrixXd& iou) {
  const auto n = iou.rows();
  CostMatrix w = CostMatrix::Zero(n + 1, n + 1);
  w.topLeftCorner(n, n) = -iou;
  return w;
}

}  // namespace

IouResult unordered_iou(const Eigen::MatrixXd& iou) {
  IouResult r;
  r.order = optimal_matching(negated(iou));
  r.score = mean_iou(iou, r.order);
  return r;
}

IouResult unordered_iou(const InstanceMaskVolume& gt, const InstanceMaskVolume& pred) {
  require_same_grid(gt.spec, pred.spec, "unordered_iou");
  require_same_channels(gt.k, pred.k, "unordered_iou");
  return unordered_iou(iou_matrix(gt.argmax_labels(), pred.argmax_labels(), gt.k));
}

IouResult ordered_iou(const std::vector<Eigen::MatrixXd>& per_step) {
  if (per_step.empty()) throw Error(ErrorCode::InvalidArgument, "ordered_iou: empty sequence");
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(per_step[0].rows(), per_step[0].cols());
  for (const auto& m : per_step) {
    if (m.rows() != total.rows()) throw Error(ErrorCode::ChannelMismatch, "ordered_iou: k differs");
    total += m;
  }
  IouResult r;
  r.order = optimal_matching(negated(total));
  double sum = 0.0;
  for (const auto& m : per_step) sum += mean_iou(m, r.order);
  r.score = sum / static_cast<double>(per_step.size());
  return r;
}

double mean_unordered_iou(const std::vector<Eigen::MatrixXd>& per_step) {
  if (per_step.empty()) throw Error(ErrorCode::InvalidArgument, "mean_unordered_iou: empty");
  double sum = 0.0;
  for (const auto& m : per_step) sum += unordered_iou(m).score;
  return sum / static_cast<double>(per_step.size());
}

namespace {

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

double number_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::nan("") : j.get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const MetricsRecord& m) {
  j = nlohmann::json{{"schema_version", kMetricsSchemaVersion},
                     {"seed", m.seed},
                     {"mode", m.mode},
                     {"flow_visible_cm", number_or_null(m.flow_visible_cm)},
                     {"flow_full_cm", number_or_null(m.flow_full_cm)},
                     {"flow_visible_mse_cm2", number_or_null(m.flow_visible_mse_cm2)},
                     {"flow_full_mse_cm2", number_or_null(m.flow_full_mse_cm2)},
                     {"iou_unordered", m.iou_unordered},
                     {"iou_ordered", m.iou_ordered}};
}

void from_json(const nlohmann::json& j, MetricsRecord& m) {
  if (j.at("schema_version").get<int>() != kMetricsSchemaVersion) {
    throw Error(ErrorCode::SchemaVersion, "metrics record: unsupported schema version");
  }
  m.seed = j.at("seed").get<std::uint64_t>();
  m.mode = j.at("mode").get<std::string>();
  m.flow_visible_cm = number_or_nan(j.at("flow_visible_cm"));
  m.flow_full_cm = number_or_nan(j.at("flow_full_cm"));
  m.flow_visible_mse_cm2 = number_or_nan(j.at("flow_visible_mse_cm2"));
  m.flow_full_mse_cm2 = number_or_nan(j.at("flow_full_mse_cm2"));
  m.iou_unordered = j.at("iou_unordered").get<double>();
  m.iou_ordered = j.at("iou_ordered").get<double>();
}

}  // namespace dsr
