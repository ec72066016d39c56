#include "stopt/trajectory.hpp"

#include <cmath>

namespace stopt {

std::string_view to_string(Direction d) {
  return d == Direction::Forward ? "forward" : "backward";
}

std::size_t SegmentedTrajectory::point_count() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.states.size();
  return n;
}

double path_length(const SegmentedTrajectory& trajectory) {
  double total = 0.0;
  for (const auto& seg : trajectory.segments) {
    for (std::size_t k = 0; k + 1 < seg.states.size(); ++k) {
      total += std::hypot(seg.states[k + 1](idx::kX) - seg.states[k](idx::kX),
                          seg.states[k + 1](idx::kY) - seg.states[k](idx::kY));
    }
  }
  return total;
}

std::vector<double> curvature_jumps(const SegmentedTrajectory& trajectory) {
  std::vector<double> jumps;
  for (std::size_t i = 0; i + 1 < trajectory.segments.size(); ++i) {
    const auto& a = trajectory.segments[i].states;
    const auto& b = trajectory.segments[i + 1].states;
    if (a.empty() || b.empty()) continue;
    jumps.push_back(std::abs(b.front()(idx::kKappa) - a.back()(idx::kKappa)));
  }
  return jumps;
}

bool LabeledPath::operator==(const LabeledPath& other) const {
  if (segments.size() != other.segments.size()) return false;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].direction != other.segments[i].direction) return false;
    if (segments[i].poses != other.segments[i].poses) return false;
  }
  return true;
}

}  // namespace stopt
