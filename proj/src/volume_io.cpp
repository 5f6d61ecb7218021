#include "dsr/volume_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dsr/error.hpp"

namespace dsr {
namespace {

constexpr char kMagic[6] = {'D', 'S', 'R', 'V', 'O', 'L'};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::Io, "volume: truncated data");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_volume(const RawVolume& v) {
  const std::size_t n = v.spec.voxel_count() * v.channels;
  const bool is_f32 = v.dtype == VolumeDType::Float32;
  if ((is_f32 ? v.f32.size() : v.u8.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "volume: payload size does not match header");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + 12 + 32 + n * (is_f32 ? 4 : 1));
  out.insert(out.end(), kMagic, kMagic + 6);
  put_le(out, kVolumeFormatVersion);
  put_le(out, v.channels);
  put_le(out, static_cast<std::uint32_t>(v.dtype));
  for (int d : v.spec.dims) put_le(out, static_cast<std::uint32_t>(d));
  put_le(out, v.spec.voxel_size);
  for (int i = 0; i < 3; ++i) put_le(out, v.spec.origin[i]);
  if (is_f32) {
    for (float f : v.f32) put_le(out, f);
  } else {
    out.insert(out.end(), v.u8.begin(), v.u8.end());
  }
  return out;
}

RawVolume decode_volume(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(6);
  if (std::memcmp(magic.data(), kMagic, 6) != 0) {
    throw Error(ErrorCode::Io, "volume: bad magic");
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kVolumeFormatVersion) {
    throw Error(ErrorCode::SchemaVersion,
                "volume: unsupported format version " + std::to_string(version));
  }
  RawVolume v;
  v.channels = r.get<std::uint32_t>();
  const auto dtype = r.get<std::uint32_t>();
  if (dtype > 1) throw Error(ErrorCode::Io, "volume: unknown dtype");
  v.dtype = static_cast<VolumeDType>(dtype);
  for (int& d : v.spec.dims) d = static_cast<int>(r.get<std::uint32_t>());
  v.spec.voxel_size = r.get<double>();
  for (int i = 0; i < 3; ++i) v.spec.origin[i] = r.get<double>();
  v.spec.validate();
  const std::size_t n = v.spec.voxel_count() * v.channels;
  if (v.dtype == VolumeDType::Float32) {
    if (r.remaining() != n * 4) throw Error(ErrorCode::Io, "volume: payload size mismatch");
    v.f32.resize(n);
    for (auto& f : v.f32) f = r.get<float>();
  } else {
    if (r.remaining() != n) throw Error(ErrorCode::Io, "volume: payload size mismatch");
    auto payload = r.take(n);
    v.u8.assign(payload.begin(), payload.end());
  }
  return v;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void write_volume(const std::filesystem::path& path, const RawVolume& v) {
  write_file_bytes(path, encode_volume(v));
}

RawVolume read_volume(const std::filesystem::path& path) {
  try {
    return decode_volume(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw Error(ErrorCode::Io, path.string() + ": " + e.what());
    throw;
  }
}

RawVolume to_raw(const ScalarVolume& v) {
  RawVolume r{v.spec, 1, VolumeDType::Float32, {}, {}};
  r.f32.assign(v.values.begin(), v.values.end());
  return r;
}

RawVolume to_raw(const VectorVolume& v) {
  RawVolume r{v.spec, 3, VolumeDType::Float32, {}, {}};
  r.f32.reserve(v.values.size() * 3);
  for (const auto& f : v.values) {
    for (int i = 0; i < 3; ++i) r.f32.push_back(static_cast<float>(f[i]));
  }
  return r;
}

ScalarVolume scalar_from_raw(const RawVolume& raw) {
  if (raw.channels != 1 || raw.dtype != VolumeDType::Float32) {
    throw Error(ErrorCode::ChannelMismatch, "expected a 1-channel f32 volume");
  }
  ScalarVolume v(raw.spec);
  for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = raw.f32[i];
  return v;
}

VectorVolume vector_from_raw(const RawVolume& raw) {
  if (raw.channels != 3 || raw.dtype != VolumeDType::Float32) {
    throw Error(ErrorCode::ChannelMismatch, "expected a 3-channel f32 volume");
  }
  VectorVolume v(raw.spec);
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    v.values[i] = Vec3(raw.f32[3 * i], raw.f32[3 * i + 1], raw.f32[3 * i + 2]);
  }
  return v;
}

}  // namespace dsr
