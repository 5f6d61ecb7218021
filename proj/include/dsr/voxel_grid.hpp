#pragma once

#include <array>
#include <cstddef>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

namespace dsr {

using Vec3 = Eigen::Vector3d;

/// Dense voxel lattice. Integer voxel coordinates address voxel centers, so
/// voxel (0,0,0) has its center at origin + voxel_size/2. Linear index is
/// (x*ny + y)*nz + z: z varies fastest, x slowest.
struct GridSpec {
  std::array<int, 3> dims{1, 1, 1};
  double voxel_size = 0.004;
  Vec3 origin = Vec3::Zero();

  /// 128x128x48 voxels of 4 mm over the 0.512 m square workspace. The world
  /// origin sits at the workspace center on the table plane.
  static GridSpec benchmark();

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
  }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(x) * dims[1] + y) * dims[2] + z;
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const int z = static_cast<int>(idx % dims[2]);
    idx /= dims[2];
    return {static_cast<int>(idx / dims[1]), static_cast<int>(idx % dims[1]), z};
  }

  /// Throws InvalidArgument unless dims >= 1 and voxel_size > 0.
  void validate() const;

  bool operator==(const GridSpec& o) const {
    return dims == o.dims && voxel_size == o.voxel_size && origin == o.origin;
  }
};

/// Continuous voxel coordinates of a world point (meters).
Vec3 world_to_voxel(const GridSpec& spec, const Vec3& p);
Vec3 voxel_to_world(const GridSpec& spec, const Vec3& c);
Vec3 voxel_center(const GridSpec& spec, std::size_t idx);

/// Throws GridMismatch when the two grids differ.
void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

struct TrilinearTap {
  std::size_t index;
  double weight;
};

/// In-grid lattice neighbours of a continuous coordinate with nonzero weight.
struct TrilinearStencil {
  std::array<TrilinearTap, 8> taps{};
  int size = 0;

  const TrilinearTap* begin() const { return taps.data(); }
  const TrilinearTap* end() const { return taps.data() + size; }
  double weight_sum() const;
};

/// Product kernel max(0,1-|dx|)*max(0,1-|dy|)*max(0,1-|dz|) over the 8
/// surrounding lattice points; zero-weight and out-of-grid taps are dropped.
TrilinearStencil trilinear_weights(const GridSpec& spec, const Vec3& c);

template <class T>
T zero_value() {
  if constexpr (std::is_arithmetic_v<T>) {
    return T{0};
  } else {
    return T::Zero();
  }
}

template <class T>
struct Volume {
  GridSpec spec;
  std::vector<T> values;

  Volume() = default;
  explicit Volume(const GridSpec& s) : Volume(s, zero_value<T>()) {}
  Volume(const GridSpec& s, const T& fill) : spec(s), values(s.voxel_count(), fill) {}

  T& operator()(int x, int y, int z) { return values[spec.index(x, y, z)]; }
  const T& operator()(int x, int y, int z) const { return values[spec.index(x, y, z)]; }
};

using ScalarVolume = Volume<double>;
using VectorVolume = Volume<Vec3>;

/// Trilinear sample renormalized over in-grid taps; 0 when no tap is in grid.
double gather_trilinear(const ScalarVolume& v, const Vec3& c);

}  // namespace dsr
