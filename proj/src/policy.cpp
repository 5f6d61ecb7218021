#include "dsr/policy.hpp"

#include "dsr/error.hpp"

namespace dsr {

PolicyState PolicyState::start(const SceneState& scene) {
  PolicyState ps;
  for (const auto& obj : scene.objects) {
    ps.scores.push_back(0);
    ps.initial.push_back(obj.position());
    ps.previous.push_back(obj.position());
  }
  return ps;
}

int bump_score(int score) { return score + 1 > 2 ? -2 : score + 1; }

namespace {

Vec2 unit_or_zero(const Vec2& v) {
  const double n = v.norm();
  return n > 1e-12 ? Vec2(v / n) : Vec2::Zero();
}

}  // namespace

std::array<double, kPushDirections> direction_scores(const SceneState& scene,
                                                     const PolicyState& ps, std::size_t i,
                                                     const PolicyConfig& cfg) {
  const Vec2 p = scene.objects[i].position();
  const Vec2 from_start = unit_or_zero(p - ps.initial[i]);
  const Vec2 from_previous = unit_or_zero(p - ps.previous[i]);
  const bool far = p.norm() >= cfg.far_distance;
  std::array<double, kPushDirections> q{};
  for (int d = 0; d < kPushDirections; ++d) {
    const Vec2 v = push_direction(d);
    q[d] = cfg.origin_weight * v.dot(from_start) + cfg.previous_weight * v.dot(from_previous);
    if (far && v.dot(p) > 0.0) q[d] += cfg.far_penalty;
  }
  return q;
}

PushAction interaction_policy(const SceneState& scene, PolicyState& ps, CounterRng& rng,
                              const SimConfig& sim, const PolicyConfig& cfg) {
  if (scene.objects.empty()) throw Error(ErrorCode::NoObjects, "interaction_policy: empty scene");
  if (ps.scores.size() != scene.objects.size()) {
    throw Error(ErrorCode::InvalidArgument, "interaction_policy: state does not match scene");
  }
  std::vector<double> scores(ps.scores.begin(), ps.scores.end());
  const auto i = static_cast<std::size_t>(rng.softmax_choice(scores));
  ps.scores[i] = bump_score(ps.scores[i]);

  const auto q = direction_scores(scene, ps, i, cfg);
  const int d = rng.softmax_choice(q);
  const Vec2 v = push_direction(d);
  const Footprint fp = scene.objects[i].footprint();
  const double back = fp.support(v) + sim.pusher_radius + cfg.clearance_cells * kActionCellSize;
  const auto cell = action_cell(fp.center - v * back);

  for (std::size_t j = 0; j < scene.objects.size(); ++j) ps.previous[j] = scene.objects[j].position();
  return {cell[0], cell[1], d};
}

}  // namespace dsr
