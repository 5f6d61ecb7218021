#include "dsr/tsdf.hpp"

#include "dsr/error.hpp"

namespace dsr {

RawVolume to_raw(const TsdfVolume& v) {
  RawVolume r{v.spec, 2, VolumeDType::Float32, {}, {}};
  r.f32.resize(v.values.size() * 2);
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    r.f32[2 * i] = v.values[i];
    r.f32[2 * i + 1] = v.unknown[i] ? 1.0f : 0.0f;
  }
  return r;
}

TsdfVolume tsdf_from_raw(const RawVolume& raw) {
  if (raw.channels != 2 || raw.dtype != VolumeDType::Float32) {
    throw Error(ErrorCode::ChannelMismatch, "expected a 2-channel f32 TSDF volume");
  }
  TsdfVolume v(raw.spec);
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    v.values[i] = raw.f32[2 * i];
    v.unknown[i] = raw.f32[2 * i + 1] != 0.0f ? 1 : 0;
  }
  return v;
}

}  // namespace dsr
