#include "stopt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace stopt {

namespace {

struct Box {
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = Vec2::Constant(-std::numeric_limits<double>::infinity());

  void add(const Vec2& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
};

class Canvas {
 public:
  Canvas(const Box& box, double width_px, double margin) : margin_(margin) {
    lo_ = box.lo;
    const Vec2 span = (box.hi - box.lo).cwiseMax(Vec2::Constant(1e-6));
    scale_ = (width_px - 2 * margin) / span.x();
    width_ = width_px;
    height_ = span.y() * scale_ + 2 * margin;
    hi_y_ = box.hi.y();
  }

  double width() const { return width_; }
  double height() const { return height_; }

  std::string pt(const Vec2& p) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", margin_ + (p.x() - lo_.x()) * scale_,
                  margin_ + (hi_y_ - p.y()) * scale_);
    return buf;
  }

  std::string points(const std::vector<Vec2>& pts) const {
    std::string s;
    for (const auto& p : pts) {
      if (!s.empty()) s += ' ';
      s += pt(p);
    }
    return s;
  }

 private:
  Vec2 lo_;
  double scale_ = 1.0;
  double margin_;
  double width_ = 0.0;
  double height_ = 0.0;
  double hi_y_ = 0.0;
};

std::string header(double w, double h) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                w, h, w, h);
  return buf;
}

std::string text(double x, double y, std::string_view s, int size = 14) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"%d\">",
                x, y, size);
  return std::string(buf) + std::string(s) + "</text>\n";
}

const char* segment_color(Direction d) { return d == Direction::Forward ? "#1f77b4" : "#d62728"; }

}  // namespace

std::string trajectory_svg(const Scenario& scenario, const SegmentedTrajectory& trajectory,
                           const LabeledPath* seed, const Corridor* corridor,
                           std::string_view title) {
  const auto obstacles = scenario.buffered_obstacles();
  Box box;
  for (const auto& o : obstacles) {
    for (const auto& p : outline(o, 48)) box.add(p);
  }
  for (const auto& seg : trajectory.segments) {
    for (const auto& x : seg.states) {
      for (const auto& c : corners(x, scenario.vehicle)) box.add(c);
    }
  }
  if (seed) {
    for (const auto& seg : seed->segments) {
      for (const auto& p : seg.poses) box.add(p.position());
    }
  }
  if (!std::isfinite(box.lo.x())) {
    box.add(Vec2(-1, -1));
    box.add(Vec2(1, 1));
  }
  box.lo -= Vec2::Constant(0.5);
  box.hi += Vec2::Constant(0.5);
  const Canvas cv(box, 900.0, 30.0);

  std::string svg = header(cv.width(), cv.height());
  svg += text(10, 20, title);

  if (corridor) {
    for (const auto& seg : corridor->segments) {
      for (const auto& r : seg) {
        svg += "<polygon points=\"" + cv.points(r.vertices) +
               "\" fill=\"#2ca02c\" fill-opacity=\"0.03\" stroke=\"#2ca02c\" stroke-opacity=\"0.35\" stroke-width=\"0.6\"/>\n";
      }
    }
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    BufferedObstacle base{obstacles[i].base, 0.0};
    svg += "<polygon points=\"" + cv.points(outline(base, 64)) +
           "\" fill=\"#7f7f7f\" fill-opacity=\"0.6\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    svg += "<polygon points=\"" + cv.points(outline(obstacles[i], 96)) +
           "\" fill=\"none\" stroke=\"#444\" stroke-dasharray=\"4 3\" stroke-width=\"1\"/>\n";
  }
  if (seed) {
    for (const auto& seg : seed->segments) {
      std::vector<Vec2> pts;
      for (const auto& p : seg.poses) pts.push_back(p.position());
      svg += "<polyline points=\"" + cv.points(pts) +
             "\" fill=\"none\" stroke=\"#999\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"/>\n";
    }
  }
  for (const auto& seg : trajectory.segments) {
    const char* color = segment_color(seg.direction);
    const std::size_t every = std::max<std::size_t>(1, seg.states.size() / 6);
    for (std::size_t k = 0; k < seg.states.size(); k += every) {
      const auto fp = footprint(seg.states[k], scenario.vehicle);
      svg += "<polygon points=\"" + cv.points({fp.begin(), fp.end()}) + "\" fill=\"none\" stroke=\"" +
             color + "\" stroke-opacity=\"0.35\" stroke-width=\"0.8\"/>\n";
    }
    std::vector<Vec2> pts;
    for (const auto& x : seg.states) pts.emplace_back(x(idx::kX), x(idx::kY));
    svg += "<polyline points=\"" + cv.points(pts) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
  }
  for (const Pose2* p : {&scenario.start, &scenario.goal}) {
    const State x = (State() << p->x, p->y, p->theta, 0.0, 0.0).finished();
    const auto fp = footprint(x, scenario.vehicle);
    svg += "<polygon points=\"" + cv.points({fp.begin(), fp.end()}) +
           "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  }
  svg += text(10, cv.height() - 8, "forward: blue, backward: red, seed: dashed grey", 12);
  svg += "</svg>\n";
  return svg;
}

std::string profile_svg(const SegmentedTrajectory& trajectory, const StoParams& params,
                        std::string_view title) {
  struct Series {
    std::vector<Vec2> points;
    Direction direction;
  };
  std::vector<Series> kappa;
  std::vector<Series> psi;
  double t0 = 0.0;
  for (const auto& seg : trajectory.segments) {
    Series k{{}, seg.direction};
    Series p{{}, seg.direction};
    for (std::size_t i = 0; i < seg.states.size(); ++i) {
      const double t = t0 + static_cast<double>(i) * trajectory.timestep;
      k.points.emplace_back(t, seg.states[i](idx::kKappa));
      if (i < seg.controls.size()) p.points.emplace_back(t, seg.controls[i](idx::kCurvRate));
    }
    if (!seg.states.empty()) t0 += static_cast<double>(seg.states.size() - 1) * trajectory.timestep;
    kappa.push_back(std::move(k));
    psi.push_back(std::move(p));
  }
  const double t_end = std::max(t0, 1e-3);

  const double W = 900.0;
  const double H = 260.0;
  std::string svg = header(W, 2 * H + 40);
  svg += text(10, 20, title);

  auto panel = [&](const std::vector<Series>& series, double bound, double top,
                   std::string_view label) {
    const double left = 70.0;
    const double right = W - 20.0;
    const double y0 = top + 20.0;
    const double y1 = top + H - 20.0;
    const double range = 1.25 * bound;
    auto map = [&](const Vec2& p) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f,%.2f", left + (p.x() / t_end) * (right - left),
                    y0 + (range - p.y()) / (2 * range) * (y1 - y0));
      return std::string(buf);
    };
    std::string s;
    s += "<rect x=\"" + std::to_string(left) + "\" y=\"" + std::to_string(y0) + "\" width=\"" +
         std::to_string(right - left) + "\" height=\"" + std::to_string(y1 - y0) +
         "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (double b : {bound, -bound, 0.0}) {
      s += "<polyline points=\"" + map(Vec2(0, b)) + " " + map(Vec2(t_end, b)) +
           "\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"" + (b == 0.0 ? "1 3" : "5 4") +
           "\"/>\n";
    }
    for (const auto& se : series) {
      std::string pts;
      for (const auto& p : se.points) pts += map(p) + " ";
      s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
           segment_color(se.direction) + "\" stroke-width=\"2\"/>\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", bound);
    s += text(5, y0 + 0.1 * (y1 - y0) + 4, buf, 11);
    std::snprintf(buf, sizeof buf, "%.3g", -bound);
    s += text(5, y1 - 0.1 * (y1 - y0) + 4, buf, 11);
    s += text(left + 5, y0 - 5, label, 13);
    return s;
  };
  svg += panel(kappa, params.kappa_max, 30.0, "curvature [1/m]");
  svg += panel(psi, params.curvature_rate_max, 30.0 + H, "curvature rate [1/(m s)]");
  char buf[64];
  std::snprintf(buf, sizeof buf, "time 0 .. %.1f s", t_end);
  svg += text(W - 160, 2 * H + 30, buf, 12);
  svg += "</svg>\n";
  return svg;
}

}  // namespace stopt
