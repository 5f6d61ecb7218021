#include "dsr/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dsr/error.hpp"

namespace dsr {

InstanceMaskVolume::InstanceMaskVolume(const GridSpec& s, int channels)
    : spec(s), k(channels), probs(s.voxel_count() * static_cast<std::size_t>(channels), 0.0) {
  if (channels < 1) throw Error(ErrorCode::InvalidArgument, "mask volume needs k >= 1");
  for (std::size_t v = 0; v < s.voxel_count(); ++v) at(v)[static_cast<std::size_t>(k - 1)] = 1.0;
}

void InstanceMaskVolume::set_one_hot(std::size_t voxel, int channel) {
  auto p = at(voxel);
  std::fill(p.begin(), p.end(), 0.0);
  p[static_cast<std::size_t>(channel)] = 1.0;
}

double InstanceMaskVolume::object_mass(std::size_t voxel) const {
  const auto p = at(voxel);
  double m = 0.0;
  for (int d = 0; d + 1 < k; ++d) m += p[static_cast<std::size_t>(d)];
  return m;
}

std::vector<std::uint8_t> InstanceMaskVolume::argmax_labels() const {
  std::vector<std::uint8_t> labels(voxel_count());
  for (std::size_t v = 0; v < labels.size(); ++v) {
    const auto p = at(v);
    labels[v] = static_cast<std::uint8_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }
  return labels;
}

std::vector<double> InstanceMaskVolume::channel_mass() const {
  std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
  for (std::size_t v = 0; v < voxel_count(); ++v) {
    const auto p = at(v);
    for (int d = 0; d < k; ++d) mass[static_cast<std::size_t>(d)] += p[static_cast<std::size_t>(d)];
  }
  return mass;
}

void InstanceMaskVolume::validate(double tol) const {
  if (probs.size() != voxel_count() * static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::InvalidArgument, "mask volume: size does not match grid");
  }
  for (std::size_t v = 0; v < voxel_count(); ++v) {
    double sum = 0.0;
    for (double p : at(v)) {
      if (!(p >= -tol && p <= 1.0 + tol)) {
        throw Error(ErrorCode::InvalidArgument, "mask volume: probability out of [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) {
      std::ostringstream os;
      os << "mask volume: voxel " << v << " sums to " << sum;
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  }
}

InstanceMaskVolume InstanceMaskVolume::from_labels(const GridSpec& s, int channels,
                                                   std::span<const std::uint8_t> labels) {
  if (labels.size() != s.voxel_count()) {
    throw Error(ErrorCode::GridMismatch, "label count does not match grid");
  }
  InstanceMaskVolume m(s, channels);
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] >= channels) throw Error(ErrorCode::ChannelMismatch, "label exceeds k");
    if (labels[v] != channels - 1) m.set_one_hot(v, labels[v]);
  }
  return m;
}

RawVolume labels_to_raw(const GridSpec& spec, std::span<const std::uint8_t> labels) {
  RawVolume r{spec, 1, VolumeDType::UInt8, {}, {}};
  r.u8.assign(labels.begin(), labels.end());
  return r;
}

std::vector<std::uint8_t> labels_from_raw(const RawVolume& raw) {
  if (raw.channels != 1 || raw.dtype != VolumeDType::UInt8) {
    throw Error(ErrorCode::ChannelMismatch, "expected a 1-channel u8 label volume");
  }
  return raw.u8;
}

RawVolume to_raw(const InstanceMaskVolume& m) {
  RawVolume r{m.spec, static_cast<std::uint32_t>(m.k), VolumeDType::Float32, {}, {}};
  r.f32.assign(m.probs.begin(), m.probs.end());
  return r;
}

InstanceMaskVolume masks_from_raw(const RawVolume& raw) {
  if (raw.dtype != VolumeDType::Float32) {
    throw Error(ErrorCode::ChannelMismatch, "expected an f32 mask volume");
  }
  InstanceMaskVolume m;
  m.spec = raw.spec;
  m.k = static_cast<int>(raw.channels);
  m.probs.assign(raw.f32.begin(), raw.f32.end());
  return m;
}

void require_same_channels(int a, int b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::ChannelMismatch, std::string(what) + ": channel count " +
                                                std::to_string(a) + " vs " + std::to_string(b));
  }
}

ChannelPermutation ChannelPermutation::identity(int k) {
  ChannelPermutation p;
  p.mapping.resize(static_cast<std::size_t>(k));
  std::iota(p.mapping.begin(), p.mapping.end(), 0);
  return p;
}

ChannelPermutation ChannelPermutation::inverse() const {
  ChannelPermutation inv;
  inv.mapping.resize(mapping.size());
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    inv.mapping[static_cast<std::size_t>(mapping[i])] = static_cast<int>(i);
  }
  return inv;
}

ChannelPermutation ChannelPermutation::then(const ChannelPermutation& b) const {
  ChannelPermutation out;
  out.mapping.resize(mapping.size());
  for (std::size_t i = 0; i < mapping.size(); ++i) out.mapping[i] = b(mapping[i]);
  return out;
}

bool ChannelPermutation::is_valid() const {
  const int k = size();
  if (k == 0) return false;
  std::vector<bool> seen(mapping.size(), false);
  for (int v : mapping) {
    if (v < 0 || v >= k || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return mapping.back() == k - 1;
}

}  // namespace dsr
