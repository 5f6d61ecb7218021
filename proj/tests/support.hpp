#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dsr/error.hpp"
#include "dsr/masks.hpp"
#include "dsr/rng.hpp"
#include "dsr/voxel_grid.hpp"

namespace testing {

inline dsr::GridSpec small_grid(int nx = 6, int ny = 5, int nz = 4, double vs = 0.01) {
  dsr::GridSpec g;
  g.dims = {nx, ny, nz};
  g.voxel_size = vs;
  g.origin = dsr::Vec3(-0.5 * nx * vs, -0.5 * ny * vs, 0.0);
  return g;
}

/// Random simplex per voxel; about a third of the voxels are pure background.
inline dsr::InstanceMaskVolume random_masks(const dsr::GridSpec& g, int k, dsr::CounterRng& rng) {
  dsr::InstanceMaskVolume m(g, k);
  for (std::size_t v = 0; v < m.voxel_count(); ++v) {
    if (rng.uniform() < 0.33) continue;
    auto p = m.at(v);
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += (p[c] = rng.uniform() + 1e-3);
    for (int c = 0; c < k; ++c) p[c] /= s;
  }
  return m;
}

/// Classic O(n^3) assignment with row/column potentials (minimization).
/// Returns assignment[row] = column.
inline std::vector<int> hungarian(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

/// Forward splat written out corner by corner over the whole grid.
inline dsr::InstanceMaskVolume brute_force_splat(const dsr::InstanceMaskVolume& state,
                                                 const dsr::VectorVolume& flow,
                                                 const dsr::InstanceMaskVolume& motion) {
  const auto& g = state.spec;
  const int k = state.k;
  const std::size_t n = g.voxel_count();
  std::vector<double> total(n, 0.0);
  auto kernel = [](double d) { return std::max(0.0, 1.0 - std::abs(d)); };
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    double m = 0.0;
    for (int c = 0; c + 1 < k; ++c) m += motion.at(s)[c];
    if (m <= 0.0) continue;
    const auto c = g.coords(s);
    const double px = c[0] + flow.values[s].x() / g.voxel_size;
    const double py = c[1] + flow.values[s].y() / g.voxel_size;
    const double pz = c[2] + flow.values[s].z() / g.voxel_size;
    for (std::size_t t = 0; t < n; ++t) {
      const auto q = g.coords(t);
      w[s][t] = m * kernel(px - q[0]) * kernel(py - q[1]) * kernel(pz - q[2]);
      total[t] += w[s][t];
    }
  }
  dsr::InstanceMaskVolume out(g, k);
  for (std::size_t t = 0; t < n; ++t) {
    if (total[t] < 1e-12) continue;
    auto o = out.at(t);
    std::fill(o.begin(), o.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      if (w[s][t] == 0.0) continue;
      for (int c = 0; c < k; ++c) o[c] += w[s][t] / total[t] * state.at(s)[c];
    }
  }
  return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Code of the dsr::Error thrown by f, if any.
template <class F>
std::optional<dsr::ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const dsr::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("dsr_test_" + name);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testing
