#pragma once

#include <array>
#include <vector>

#include "dsr/pushing.hpp"
#include "dsr/rng.hpp"
#include "dsr/scene.hpp"

namespace dsr {

/// Heuristic data-collection policy state: one score per object plus the
/// initial and previous planar positions.
struct PolicyState {
  std::vector<int> scores;
  std::vector<Vec2> initial;
  std::vector<Vec2> previous;

  static PolicyState start(const SceneState& scene);
};

struct PolicyConfig {
  double origin_weight = 1.5;
  double previous_weight = 2.0;
  /// Objects at least this far from the workspace center are discouraged
  /// from moving further out.
  double far_distance = 0.2;
  double far_penalty = -10.0;
  /// Gap between the pusher and the object footprint at the start, in cells.
  int clearance_cells = 2;
};

/// +1, wrapping to -2 past 2.
int bump_score(int score);

/// Q for each of the 8 directions of object i at its current position.
std::array<double, kPushDirections> direction_scores(const SceneState& scene,
                                                     const PolicyState& ps, std::size_t i,
                                                     const PolicyConfig& cfg = {});

/// Samples an object by softmax(scores), bumps its score, samples a direction
/// by softmax(Q) and places the pusher behind the object. Records the current
/// positions as the previous ones for the next call.
PushAction interaction_policy(const SceneState& scene, PolicyState& ps, CounterRng& rng,
                              const SimConfig& sim = {}, const PolicyConfig& cfg = {});

}  // namespace dsr
