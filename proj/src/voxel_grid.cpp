#include "dsr/voxel_grid.hpp"

#include <cmath>
#include <sstream>

#include "dsr/error.hpp"

namespace dsr {

GridSpec GridSpec::benchmark() {
  GridSpec g;
  g.dims = {128, 128, 48};
  g.voxel_size = 0.004;
  g.origin = Vec3(-0.256, -0.256, 0.0);
  return g;
}

void GridSpec::validate() const {
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1 || !(voxel_size > 0.0) ||
      !origin.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "grid needs dims >= 1 and voxel_size > 0");
  }
}

Vec3 world_to_voxel(const GridSpec& spec, const Vec3& p) {
  return (p - spec.origin) / spec.voxel_size - Vec3::Constant(0.5);
}

Vec3 voxel_to_world(const GridSpec& spec, const Vec3& c) {
  return spec.origin + (c + Vec3::Constant(0.5)) * spec.voxel_size;
}

Vec3 voxel_center(const GridSpec& spec, std::size_t idx) {
  const auto c = spec.coords(idx);
  return voxel_to_world(spec, Vec3(c[0], c[1], c[2]));
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) {
    std::ostringstream os;
    os << what << ": grid mismatch (" << a.dims[0] << "x" << a.dims[1] << "x" << a.dims[2]
       << " vs " << b.dims[0] << "x" << b.dims[1] << "x" << b.dims[2] << ")";
    throw Error(ErrorCode::GridMismatch, os.str());
  }
}

double TrilinearStencil::weight_sum() const {
  double s = 0.0;
  for (const auto& t : *this) s += t.weight;
  return s;
}

TrilinearStencil trilinear_weights(const GridSpec& spec, const Vec3& c) {
  TrilinearStencil out;
  const double fx = std::floor(c.x()), fy = std::floor(c.y()), fz = std::floor(c.z());
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy), z0 = static_cast<int>(fz);
  const double ax = c.x() - fx, ay = c.y() - fy, az = c.z() - fz;
  const double wx[2] = {1.0 - ax, ax};
  const double wy[2] = {1.0 - ay, ay};
  const double wz[2] = {1.0 - az, az};
  for (int dx = 0; dx < 2; ++dx) {
    if (wx[dx] == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      if (wy[dy] == 0.0) continue;
      for (int dz = 0; dz < 2; ++dz) {
        if (wz[dz] == 0.0) continue;
        const int x = x0 + dx, y = y0 + dy, z = z0 + dz;
        if (!spec.contains(x, y, z)) continue;
        out.taps[static_cast<std::size_t>(out.size++)] = {spec.index(x, y, z),
                                                          wx[dx] * wy[dy] * wz[dz]};
      }
    }
  }
  return out;
}

double gather_trilinear(const ScalarVolume& v, const Vec3& c) {
  const auto stencil = trilinear_weights(v.spec, c);
  double num = 0.0, den = 0.0;
  for (const auto& t : stencil) {
    num += t.weight * v.values[t.index];
    den += t.weight;
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace dsr
