#include "stopt/seed_planner.hpp"

#include "stopt/gjk.hpp"
#include "stopt/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

namespace stopt {

namespace {

struct Bound {
  Vec2 center;
  double radius;
};

Bound bounding_circle(const BufferedObstacle& o) {
  const auto pts = outline(o, 64);
  Vec2 lo = pts.front();
  Vec2 hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 c = 0.5 * (lo + hi);
  double r = 0.0;
  for (const auto& p : pts) r = std::max(r, (p - c).norm());
  // Outline samples are inscribed; pad for the chords.
  return {c, r * 1.01 + 1e-6};
}

class CollisionChecker {
 public:
  CollisionChecker(std::span<const BufferedObstacle> obstacles, const VehicleGeometry& vehicle)
      : obstacles_(obstacles), vehicle_(vehicle) {
    for (const auto& o : obstacles_) bounds_.push_back(bounding_circle(o));
  }

  bool free(const Pose2& pose) const {
    const State x = (State() << pose.x, pose.y, pose.theta, 0.0, 0.0).finished();
    const Vec2 c = vehicle_center(x, vehicle_);
    const double r = vehicle_.half_diagonal();
    std::array<Vec2, 4> fp;
    bool have_fp = false;
    for (std::size_t i = 0; i < obstacles_.size(); ++i) {
      if ((bounds_[i].center - c).norm() > bounds_[i].radius + r) continue;
      if (!have_fp) {
        fp = footprint(x, vehicle_);
        have_fp = true;
      }
      const auto d = polygon_distance(fp, obstacles_[i]);
      if (d.contains_origin || d.distance <= 0.0) return false;
    }
    return true;
  }

 private:
  std::span<const BufferedObstacle> obstacles_;
  const VehicleGeometry& vehicle_;
  std::vector<Bound> bounds_;
};

// Shortest 8-connected grid distance from the goal for a point at the rear axle, with cells
// inside obstacles blocked. Cheap lower-bound-like guide for the search; ignores heading.
class DistanceField {
 public:
  DistanceField(const Pose2& start, const Pose2& goal, std::span<const BufferedObstacle> obstacles,
                double resolution)
      : res_(resolution) {
    constexpr double kPad = 12.0;
    lo_ = start.position().cwiseMin(goal.position()) - Vec2::Constant(kPad);
    const Vec2 hi = start.position().cwiseMax(goal.position()) + Vec2::Constant(kPad);
    nx_ = static_cast<int>(std::ceil((hi.x() - lo_.x()) / res_)) + 1;
    ny_ = static_cast<int>(std::ceil((hi.y() - lo_.y()) / res_)) + 1;
    const std::size_t cells = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
    std::vector<char> blocked(cells, 0);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const Vec2 p = lo_ + res_ * Vec2(i, j);
        for (const auto& o : obstacles) {
          if (point_distance(o, p).contains_origin) {
            blocked[index(i, j)] = 1;
            break;
          }
        }
      }
    }
    dist_.assign(cells, std::numeric_limits<double>::infinity());
    const auto [gi, gj] = cell_of(goal.position());
    if (!inside(gi, gj)) return;
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist_[index(gi, gj)] = 0.0;
    open.emplace(0.0, index(gi, gj));
    while (!open.empty()) {
      const auto [d, id] = open.top();
      open.pop();
      if (d > dist_[id]) continue;
      const int i = static_cast<int>(id % static_cast<std::size_t>(nx_));
      const int j = static_cast<int>(id / static_cast<std::size_t>(nx_));
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if ((di == 0 && dj == 0) || !inside(i + di, j + dj)) continue;
          const std::size_t nid = index(i + di, j + dj);
          if (blocked[nid]) continue;
          const double nd = d + res_ * std::hypot(di, dj);
          if (nd < dist_[nid]) {
            dist_[nid] = nd;
            open.emplace(nd, nid);
          }
        }
      }
    }
  }

  // Falls back to the straight-line distance off the grid or in unreachable cells.
  double at(const Vec2& p, const Vec2& goal) const {
    const double euclid = (p - goal).norm();
    const auto [i, j] = cell_of(p);
    if (!inside(i, j)) return euclid;
    const double d = dist_[index(i, j)];
    return std::isfinite(d) ? std::max(euclid, d - 1.5 * res_) : euclid;
  }

 private:
  std::pair<int, int> cell_of(const Vec2& p) const {
    return {static_cast<int>(std::lround((p.x() - lo_.x()) / res_)),
            static_cast<int>(std::lround((p.y() - lo_.y()) / res_))};
  }
  bool inside(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }

  double res_;
  Vec2 lo_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> dist_;
};

struct Node {
  Pose2 pose;
  Direction direction = Direction::Forward;
  double kappa = 0.0;
  double g = 0.0;
  int parent = -1;
};

// Constant-curvature piece; negative length drives backward.
struct Piece {
  double length;
  double kappa;
};

double mod2pi(double a) {
  const double r = std::fmod(a, 2.0 * std::numbers::pi);
  return r < 0.0 ? r + 2.0 * std::numbers::pi : r;
}

Pose2 drive(const Pose2& from, std::span<const Piece> pieces) {
  Pose2 p = from;
  for (const auto& pc : pieces) p = drive_arc(p, pc.length, pc.kappa);
  return p;
}

// Forward Dubins words (turn-straight-turn and turn-turn-turn) from `a` to `b`.
std::vector<std::array<Piece, 3>> dubins_words(const Pose2& a, const Pose2& b, double kmax) {
  const double r = 1.0 / kmax;
  const Vec2 delta = b.position() - a.position();
  const double d = delta.norm() / r;
  const double phi = std::atan2(delta.y(), delta.x());
  const double al = mod2pi(a.theta - phi);
  const double be = mod2pi(b.theta - phi);
  const double sa = std::sin(al), sb = std::sin(be), ca = std::cos(al), cb = std::cos(be);
  const double cab = std::cos(al - be);
  const double L = kmax, S = 0.0, R = -kmax;
  std::vector<std::array<Piece, 3>> out;
  auto add = [&](double t, double p, double q, double k1, double k2, double k3) {
    out.push_back({Piece{t * r, k1}, Piece{p * r, k2}, Piece{q * r, k3}});
  };
  if (double p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb); p2 >= 0.0) {
    const double tmp = std::atan2(cb - ca, d + sa - sb);
    add(mod2pi(-al + tmp), std::sqrt(p2), mod2pi(be - tmp), L, S, L);
  }
  if (double p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa); p2 >= 0.0) {
    const double tmp = std::atan2(ca - cb, d - sa + sb);
    add(mod2pi(al - tmp), std::sqrt(p2), mod2pi(-be + tmp), R, S, R);
  }
  if (double p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb); p2 >= 0.0) {
    const double p = std::sqrt(p2);
    const double tmp = std::atan2(-ca - cb, d + sa + sb) - std::atan2(-2.0, p);
    add(mod2pi(-al + tmp), p, mod2pi(-be + tmp), L, S, R);
  }
  if (double p2 = d * d - 2.0 + 2.0 * cab - 2.0 * d * (sa + sb); p2 >= 0.0) {
    const double p = std::sqrt(p2);
    const double tmp = std::atan2(ca + cb, d - sa - sb) - std::atan2(2.0, p);
    add(mod2pi(al - tmp), p, mod2pi(be - tmp), R, S, L);
  }
  if (double c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0; std::abs(c) <= 1.0) {
    const double p = mod2pi(2.0 * std::numbers::pi - std::acos(c));
    const double t = mod2pi(al - std::atan2(ca - cb, d - sa + sb) + p / 2.0);
    add(t, p, mod2pi(al - be - t + p), R, L, R);
  }
  if (double c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0; std::abs(c) <= 1.0) {
    const double p = mod2pi(2.0 * std::numbers::pi - std::acos(c));
    const double t = mod2pi(-al - std::atan2(ca - cb, d + sa - sb) + p / 2.0);
    add(t, p, mod2pi(be - al - t + p), L, R, L);
  }
  return out;
}

struct Shot {
  Direction direction;
  std::vector<Piece> pieces;
  double cost;
};

// Single-direction curves from `from` to `goal`, cheapest first. Each candidate is
// verified by integration so that only exact connections survive.
std::vector<Shot> goal_shots(const Node& from, bool is_root, const Pose2& goal,
                             const SeedPlannerOptions& options) {
  std::vector<Shot> shots;
  for (Direction dir : {Direction::Forward, Direction::Backward}) {
    const bool backward = dir == Direction::Backward;
    Pose2 a = from.pose;
    Pose2 b = goal;
    if (backward) {
      a.theta += std::numbers::pi;
      b.theta += std::numbers::pi;
    }
    for (const auto& word : dubins_words(a, b, options.kappa_max)) {
      Shot shot{dir, {}, 0.0};
      double prev_kappa = from.kappa;
      bool first = true;
      for (const auto& pc : word) {
        if (pc.length < 1e-9) continue;
        const double kappa = backward ? -pc.kappa : pc.kappa;
        shot.pieces.push_back({backward ? -pc.length : pc.length, kappa});
        shot.cost += pc.length * (backward ? options.reverse_factor : 1.0);
        if (!(first && (is_root || dir != from.direction))) {
          shot.cost += options.steering_change_penalty * std::abs(kappa - prev_kappa) /
                       (2.0 * options.kappa_max);
        }
        prev_kappa = kappa;
        first = false;
      }
      if (shot.pieces.empty()) continue;
      if (!is_root && dir != from.direction) shot.cost += options.switch_penalty;
      const Pose2 end = drive(from.pose, shot.pieces);
      if ((end.position() - goal.position()).norm() > 1e-6 ||
          std::abs(wrap_angle(end.theta - goal.theta)) > 1e-6) {
        continue;
      }
      shots.push_back(std::move(shot));
    }
  }
  std::sort(shots.begin(), shots.end(),
            [](const Shot& x, const Shot& y) { return x.cost < y.cost; });
  return shots;
}

bool pieces_free(const Pose2& from, std::span<const Piece> pieces, const CollisionChecker& checker,
                 double spacing) {
  Pose2 p = from;
  for (const auto& pc : pieces) {
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(pc.length) / spacing)));
    for (int i = 1; i <= n; ++i) {
      if (!checker.free(drive_arc(p, pc.length * i / n, pc.kappa))) return false;
    }
    p = drive_arc(p, pc.length, pc.kappa);
  }
  return true;
}

void append_piece(LabeledPath& path, const Pose2& from, const Piece& piece, double spacing) {
  const Direction dir = piece.length < 0.0 ? Direction::Backward : Direction::Forward;
  if (path.segments.empty() || path.segments.back().direction != dir) {
    path.segments.push_back(PathSegment{{from}, dir});
  }
  auto& poses = path.segments.back().poses;
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(piece.length) / spacing - 1e-9)));
  for (int i = 1; i <= n; ++i) poses.push_back(drive_arc(from, piece.length * i / n, piece.kappa));
}

// Spreads the remaining offset to `goal` over the last segment, or only moves the final
// pose when the blended poses would collide.
void snap_to_goal(LabeledPath& path, const Pose2& goal, const CollisionChecker& checker) {
  auto& last = path.segments.back().poses;
  const Pose2 end = last.back();
  const Vec2 dp = goal.position() - end.position();
  const double dth = wrap_angle(goal.theta - end.theta);
  std::vector<double> arc(last.size(), 0.0);
  for (std::size_t i = 1; i < last.size(); ++i) {
    arc[i] = arc[i - 1] + (last[i].position() - last[i - 1].position()).norm();
  }
  std::vector<Pose2> blended = last;
  bool blended_ok = arc.back() > 0.0;
  for (std::size_t i = 1; i < blended.size() && blended_ok; ++i) {
    const double t = arc[i] / arc.back();
    blended[i].x += t * dp.x();
    blended[i].y += t * dp.y();
    blended[i].theta += t * dth;
    blended_ok = checker.free(blended[i]);
  }
  if (blended_ok) {
    last = std::move(blended);
  } else {
    last.back() = Pose2{goal.x, goal.y, end.theta + dth};
  }
}

std::optional<LabeledPath> search(const Pose2& start, const Pose2& goal,
                                  const CollisionChecker& plain, const CollisionChecker& checker,
                                  const DistanceField& field, const SeedPlannerOptions& options) {
  auto at_goal = [&](const Pose2& p) {
    return (p.position() - goal.position()).norm() <= options.goal_position_tolerance &&
           std::abs(wrap_angle(p.theta - goal.theta)) <= options.goal_heading_tolerance;
  };
  if (at_goal(start)) {
    return LabeledPath{{PathSegment{{start, goal}, Direction::Forward}}};
  }

  const int heading_bins =
      static_cast<int>(std::ceil(2.0 * std::numbers::pi / options.heading_resolution));
  auto key_of = [&](const Pose2& p, Direction d) {
    const auto ix = static_cast<std::int64_t>(std::floor(p.x / options.xy_resolution));
    const auto iy = static_cast<std::int64_t>(std::floor(p.y / options.xy_resolution));
    const auto it =
        static_cast<std::int64_t>(mod2pi(p.theta) / options.heading_resolution) % heading_bins;
    const std::uint64_t ux = static_cast<std::uint64_t>(ix + (1 << 20)) & 0x1fffff;
    const std::uint64_t uy = static_cast<std::uint64_t>(iy + (1 << 20)) & 0x1fffff;
    return (ux << 43) | (uy << 22) | (static_cast<std::uint64_t>(it) << 1) |
           (d == Direction::Backward ? 1u : 0u);
  };
  auto heuristic = [&](const Pose2& p) {
    const double dist = field.at(p.position(), goal.position());
    const double turn = std::abs(wrap_angle(p.theta - goal.theta)) / options.kappa_max;
    return std::max(dist, turn);
  };

  std::vector<Node> nodes;
  std::unordered_map<std::uint64_t, double> best_g;
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  nodes.push_back({start, Direction::Forward, 0.0, 0.0, -1});
  open.emplace(heuristic(start), 0);

  const double kappas[3] = {-options.kappa_max, 0.0, options.kappa_max};
  const int substeps = std::max(1, static_cast<int>(std::ceil(options.step / 0.1 - 1e-9)));
  int found = -1;
  std::vector<Piece> final_shot;
  std::size_t expanded = 0;

  while (!open.empty() && expanded < options.node_budget) {
    const auto [f, id] = open.top();
    open.pop();
    const Node node = nodes[static_cast<std::size_t>(id)];
    if (id != 0) {
      const auto it = best_g.find(key_of(node.pose, node.direction));
      if (it != best_g.end() && node.g > it->second + 1e-12) continue;
    }
    if (at_goal(node.pose)) {
      found = id;
      break;
    }
    if (expanded % options.shot_interval == 0) {
      const double limit = options.shot_length_factor * heuristic(node.pose) + 1.0;
      for (const auto& shot : goal_shots(node, id == 0, goal, options)) {
        if (shot.cost > limit) break;
        if (pieces_free(node.pose, shot.pieces, checker, 0.1)) {
          found = id;
          final_shot = shot.pieces;
          break;
        }
      }
      if (found >= 0) break;
    }
    ++expanded;

    for (Direction dir : {Direction::Forward, Direction::Backward}) {
      const double sign = direction_sign(dir);
      for (double kappa : kappas) {
        Pose2 next = node.pose;
        bool ok = true;
        for (int i = 1; i <= substeps && ok; ++i) {
          next = drive_arc(node.pose, sign * options.step * i / substeps, kappa);
          ok = checker.free(next);
        }
        if (!ok) continue;

        double g = node.g + options.step * (dir == Direction::Backward ? options.reverse_factor
                                                                       : 1.0);
        if (id != 0) {
          if (dir != node.direction) {
            g += options.switch_penalty;
          } else {
            g += options.steering_change_penalty * std::abs(kappa - node.kappa) /
                 (2.0 * options.kappa_max);
          }
        }
        const auto key = key_of(next, dir);
        const auto it = best_g.find(key);
        if (it != best_g.end() && it->second <= g) continue;
        best_g[key] = g;
        nodes.push_back({next, dir, kappa, g, id});
        open.emplace(g + heuristic(next), static_cast<int>(nodes.size() - 1));
      }
    }
  }
  if (found < 0) {
    log::debug("seed planner: no path after ", expanded, " expansions");
    return std::nullopt;
  }
  log::debug("seed planner: ", expanded, " expansions, cost ",
             nodes[static_cast<std::size_t>(found)].g, final_shot.empty() ? "" : " + shot");

  std::vector<int> chain;
  for (int id = found; id >= 0; id = nodes[static_cast<std::size_t>(id)].parent) {
    chain.push_back(id);
  }
  std::reverse(chain.begin(), chain.end());

  LabeledPath path;
  for (std::size_t c = 1; c < chain.size(); ++c) {
    const Node& from = nodes[static_cast<std::size_t>(chain[c - 1])];
    const Node& to = nodes[static_cast<std::size_t>(chain[c])];
    append_piece(path, from.pose,
                 Piece{direction_sign(to.direction) * options.step, to.kappa},
                 options.output_spacing);
  }
  Pose2 p = nodes[static_cast<std::size_t>(found)].pose;
  for (const auto& pc : final_shot) {
    append_piece(path, p, pc, options.output_spacing);
    p = drive_arc(p, pc.length, pc.kappa);
  }
  snap_to_goal(path, goal, plain);
  return path;
}

}  // namespace

bool pose_is_free(const Pose2& pose, const VehicleGeometry& vehicle,
                  std::span<const BufferedObstacle> obstacles) {
  return CollisionChecker(obstacles, vehicle).free(pose);
}

Pose2 drive_arc(const Pose2& from, double distance, double kappa) {
  if (std::abs(kappa) < 1e-12) {
    return {from.x + distance * std::cos(from.theta), from.y + distance * std::sin(from.theta),
            from.theta};
  }
  const double th = from.theta + distance * kappa;
  return {from.x + (std::sin(th) - std::sin(from.theta)) / kappa,
          from.y - (std::cos(th) - std::cos(from.theta)) / kappa, th};
}

LabeledPath plan_seed_path(const Pose2& start, const Pose2& goal,
                           std::span<const BufferedObstacle> obstacles,
                           const VehicleGeometry& vehicle, const SeedPlannerOptions& options) {
  const CollisionChecker plain(obstacles, vehicle);
  if (!plain.free(start)) throw PlannerFailure("start pose collides with an obstacle");
  if (!plain.free(goal)) throw PlannerFailure("goal pose collides with an obstacle");

  const DistanceField field(start, goal, obstacles, 0.25);
  std::vector<double> margins = options.clearance_margins;
  if (margins.empty() || margins.back() != 0.0) margins.push_back(0.0);
  for (double margin : margins) {
    std::vector<BufferedObstacle> inflated(obstacles.begin(), obstacles.end());
    for (auto& o : inflated) o.buffer += margin;
    const CollisionChecker checker(inflated, vehicle);
    if (auto path = search(start, goal, plain, checker, field, options)) {
      log::debug("seed planner: path found with clearance margin ", margin);
      return *path;
    }
  }
  throw PlannerFailure("no path found within the node budget");
}

}  // namespace stopt
