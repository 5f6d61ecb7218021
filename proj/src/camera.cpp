#include "dsr/camera.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include <Eigen/Geometry>

#include "dsr/error.hpp"
#include "dsr/volume_io.hpp"

namespace dsr {

CameraModel CameraModel::look_at(const Vec3& eye, const Vec3& target, int width, int height,
                                 double fx, double fy) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(Vec3::UnitZ()).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  CameraModel cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.width = width;
  cam.height = height;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.world_from_camera = SE3Transform::from_matrix(r, eye);
  return cam;
}

CameraModel CameraModel::benchmark() {
  return look_at(Vec3(0.0, -0.55, 0.55), Vec3::Zero(), 640, 480, 600.0, 600.0);
}

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "camera needs fx, fy > 0 and a nonempty image");
  }
}

namespace {

bool better(double t, double best) { return t > 1e-9 && t < best; }

}  // namespace

std::optional<double> intersect_ray(const RigidObject& obj, const Vec3& origin, const Vec3& dir) {
  const Mat3 rt = obj.pose.rotation().transpose();
  const Vec3 o = rt * (origin - obj.pose.translation);
  const Vec3 d = rt * dir;
  const Vec3 h = 0.5 * obj.shape.extents;
  double best = std::numeric_limits<double>::infinity();

  switch (obj.shape.kind) {
    case ShapeKind::Box: {
      double t_near = -std::numeric_limits<double>::infinity();
      double t_far = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-15) {
          if (std::abs(o[i]) > h[i]) return std::nullopt;
          continue;
        }
        double t1 = (-h[i] - o[i]) / d[i];
        double t2 = (h[i] - o[i]) / d[i];
        if (t1 > t2) std::swap(t1, t2);
        t_near = std::max(t_near, t1);
        t_far = std::min(t_far, t2);
      }
      if (t_near <= t_far && better(t_near, best)) best = t_near;
      break;
    }
    case ShapeKind::Cylinder: {
      const double r = obj.shape.radius();
      const double a = d.x() * d.x() + d.y() * d.y();
      if (a > 0.0) {
        const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
        const double c = o.x() * o.x() + o.y() * o.y() - r * r;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
          for (double t : {(-b - std::sqrt(disc)) / (2.0 * a), (-b + std::sqrt(disc)) / (2.0 * a)}) {
            if (std::abs(o.z() + t * d.z()) <= h.z() && better(t, best)) best = t;
          }
        }
      }
      if (std::abs(d.z()) > 1e-15) {
        for (double cap : {-h.z(), h.z()}) {
          const double t = (cap - o.z()) / d.z();
          const Vec3 p = o + t * d;
          if (p.x() * p.x() + p.y() * p.y() <= r * r && better(t, best)) best = t;
        }
      }
      break;
    }
    case ShapeKind::Sphere: {
      const double r = obj.shape.radius();
      const double a = d.squaredNorm();
      const double b = 2.0 * o.dot(d);
      const double c = o.squaredNorm() - r * r;
      const double disc = b * b - 4.0 * a * c;
      if (disc >= 0.0) {
        for (double t : {(-b - std::sqrt(disc)) / (2.0 * a), (-b + std::sqrt(disc)) / (2.0 * a)}) {
          if (better(t, best)) best = t;
        }
      }
      break;
    }
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

DepthImage render_depth(const SceneState& scene, const CameraModel& cam) {
  cam.validate();
  DepthImage img;
  img.width = cam.width;
  img.height = cam.height;
  img.depth.assign(static_cast<std::size_t>(cam.width) * cam.height, 0.0f);
  const Mat3 r = cam.world_from_camera.rotation();
  const Vec3 eye = cam.world_from_camera.translation;

  // Bounding spheres for a cheap rejection test.
  std::vector<std::pair<Vec3, double>> spheres;
  for (const auto& obj : scene.objects) {
    spheres.emplace_back(obj.pose.translation, 0.5 * obj.shape.extents.norm() + 1e-6);
  }

  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 dir = r * Vec3((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
      double best = std::numeric_limits<double>::infinity();
      if (dir.z() < 0.0) best = -eye.z() / dir.z();
      for (std::size_t o = 0; o < scene.objects.size(); ++o) {
        const Vec3 oc = spheres[o].first - eye;
        const double along = oc.dot(dir) / dir.squaredNorm();
        if ((oc - along * dir).squaredNorm() > spheres[o].second * spheres[o].second) continue;
        if (auto t = intersect_ray(scene.objects[o], eye, dir); t && *t < best) best = *t;
      }
      if (std::isfinite(best)) {
        img.depth[static_cast<std::size_t>(v) * cam.width + u] = static_cast<float>(best);
      }
    }
  }
  return img;
}

TsdfVolume fuse_tsdf(const DepthImage& depth, const CameraModel& cam, const GridSpec& spec,
                     double truncation) {
  cam.validate();
  if (depth.width != cam.width || depth.height != cam.height) {
    throw Error(ErrorCode::InvalidArgument, "fuse_tsdf: depth image does not match camera");
  }
  TsdfVolume tsdf(spec);
  const Mat3 rt = cam.world_from_camera.rotation().transpose();
  const Vec3 eye = cam.world_from_camera.translation;
  for (std::size_t i = 0; i < spec.voxel_count(); ++i) {
    const Vec3 pc = rt * (voxel_center(spec, i) - eye);
    if (pc.z() <= 0.0) continue;
    const long u = std::lround(cam.fx * pc.x() / pc.z() + cam.cx);
    const long v = std::lround(cam.fy * pc.y() / pc.z() + cam.cy);
    if (u < 0 || v < 0 || u >= cam.width || v >= cam.height) continue;
    const double d = depth.at(static_cast<int>(u), static_cast<int>(v));
    if (d <= 0.0) continue;
    const double sd = d - pc.z();
    if (sd < -truncation) {
      tsdf.values[i] = -1.0f;
      continue;
    }
    tsdf.values[i] = static_cast<float>(std::clamp(sd / truncation, -1.0, 1.0));
    tsdf.unknown[i] = 0;
  }
  return tsdf;
}

void write_depth(const std::filesystem::path& path, const DepthImage& d) {
  std::vector<std::uint8_t> out = {'D', 'S', 'R', 'D', 'E', 'P'};
  const auto put32 = [&](std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  };
  out.push_back(static_cast<std::uint8_t>(kDepthFormatVersion & 0xff));
  out.push_back(static_cast<std::uint8_t>(kDepthFormatVersion >> 8));
  put32(static_cast<std::uint32_t>(d.width));
  put32(static_cast<std::uint32_t>(d.height));
  for (float f : d.depth) put32(std::bit_cast<std::uint32_t>(f));
  write_file_bytes(path, out);
}

DepthImage read_depth(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const auto get32 = [&](std::size_t at) {
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return x;
  };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "DSRDEP", 6) != 0) {
    throw Error(ErrorCode::Io, path.string() + ": not a depth file");
  }
  const auto version = static_cast<std::uint16_t>(bytes[6] | (bytes[7] << 8));
  if (version != kDepthFormatVersion) {
    throw Error(ErrorCode::SchemaVersion, path.string() + ": unsupported depth version");
  }
  DepthImage d;
  d.width = static_cast<int>(get32(8));
  d.height = static_cast<int>(get32(12));
  const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
  if (bytes.size() != 16 + 4 * n) throw Error(ErrorCode::Io, path.string() + ": truncated depth");
  d.depth.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.depth[i] = std::bit_cast<float>(get32(16 + 4 * i));
  return d;
}

void to_json(nlohmann::json& j, const CameraModel& c) {
  j = nlohmann::json{{"fx", c.fx},         {"fy", c.fy},         {"cx", c.cx},
                     {"cy", c.cy},         {"width", c.width},   {"height", c.height},
                     {"world_from_camera", c.world_from_camera}};
}

void from_json(const nlohmann::json& j, CameraModel& c) {
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.world_from_camera = j.at("world_from_camera").get<SE3Transform>();
}

}  // namespace dsr
