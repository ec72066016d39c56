#include "stopt/scenario_io.hpp"

#include "stopt/builtin_fixtures.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace stopt {

namespace {

using Json = nlohmann::ordered_json;
using Kind = ScenarioError::Kind;

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Io: return "io error";
    case Kind::Parse: return "parse error";
    case Kind::MissingField: return "missing field";
    case Kind::UnknownField: return "unknown field";
    case Kind::Semantic: return "invalid value";
  }
  return "error";
}

// Raised while walking the parsed document; converted to a positioned ScenarioError.
struct FieldError {
  Kind kind;
  std::string pointer;
  std::string message;
};

[[noreturn]] void fail(Kind kind, const std::string& pointer, const std::string& message) {
  throw FieldError{kind, pointer, message};
}

std::string escape_token(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

std::string child(const std::string& ptr, std::string_view key) {
  return ptr + "/" + escape_token(key);
}
std::string child(const std::string& ptr, std::size_t index) {
  return ptr + "/" + std::to_string(index);
}

// Walks syntactically valid JSON text and records where every value starts. Object
// members are located at their key so that field errors point at the name.
class Locator {
 public:
  explicit Locator(std::string_view text) : t_(text) {
    skip_ws();
    value("");
  }

  std::size_t offset(const std::string& pointer) const {
    std::string p = pointer;
    while (true) {
      const auto it = pos_.find(p);
      if (it != pos_.end()) return it->second;
      const auto slash = p.rfind('/');
      if (slash == std::string::npos) return 0;
      p.resize(slash);
    }
  }

  const std::vector<std::pair<std::string, std::size_t>>& duplicates() const { return dups_; }

 private:
  void skip_ws() {
    while (i_ < t_.size() && (t_[i_] == ' ' || t_[i_] == '\n' || t_[i_] == '\r' || t_[i_] == '\t')) {
      ++i_;
    }
  }

  std::string string_token() {
    const std::size_t begin = i_;
    ++i_;
    while (i_ < t_.size() && t_[i_] != '"') {
      if (t_[i_] == '\\') ++i_;
      ++i_;
    }
    ++i_;
    return Json::parse(t_.substr(begin, i_ - begin)).get<std::string>();
  }

  void value(const std::string& ptr) {
    if (!pos_.count(ptr)) pos_[ptr] = i_;
    if (i_ >= t_.size()) return;
    const char c = t_[i_];
    if (c == '{') {
      ++i_;
      skip_ws();
      std::map<std::string, bool> seen;
      while (i_ < t_.size() && t_[i_] != '}') {
        const std::size_t key_at = i_;
        const std::string key = string_token();
        const std::string p = child(ptr, key);
        if (seen.count(key)) dups_.emplace_back(p, key_at);
        seen[key] = true;
        pos_[p] = key_at;
        skip_ws();
        ++i_;  // ':'
        skip_ws();
        value(p);
        skip_ws();
        if (i_ < t_.size() && t_[i_] == ',') {
          ++i_;
          skip_ws();
        }
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      skip_ws();
      std::size_t index = 0;
      while (i_ < t_.size() && t_[i_] != ']') {
        value(child(ptr, index++));
        skip_ws();
        if (i_ < t_.size() && t_[i_] == ',') {
          ++i_;
          skip_ws();
        }
      }
      ++i_;
    } else if (c == '"') {
      string_token();
    } else {
      while (i_ < t_.size() && std::string_view(",]} \n\r\t").find(t_[i_]) == std::string_view::npos) {
        ++i_;
      }
    }
  }

  std::string_view t_;
  std::size_t i_ = 0;
  std::map<std::string, std::size_t> pos_;
  std::vector<std::pair<std::string, std::size_t>> dups_;
};

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1;
  std::size_t line_start = 0;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      line_start = i + 1;
    }
  }
  return {line, offset - line_start + 1};
}

void only_keys(const Json& j, const std::string& ptr, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) fail(Kind::Semantic, ptr, "expected an object");
  for (const auto& item : j.items()) {
    if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
      fail(Kind::UnknownField, child(ptr, item.key()), "unknown field '" + item.key() + "'");
    }
  }
}

const Json& field(const Json& j, const std::string& ptr, const char* key) {
  if (!j.contains(key)) fail(Kind::MissingField, ptr, std::string("missing required field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& ptr) {
  if (!j.is_number()) fail(Kind::Semantic, ptr, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(Kind::Semantic, ptr, "number must be finite");
  return v;
}

double number_field(const Json& j, const std::string& ptr, const char* key) {
  return number(field(j, ptr, key), child(ptr, key));
}

std::string string_value(const Json& j, const std::string& ptr) {
  if (!j.is_string()) fail(Kind::Semantic, ptr, "expected a string");
  return j.get<std::string>();
}

const Json& array(const Json& j, const std::string& ptr, std::size_t size = 0) {
  if (!j.is_array()) fail(Kind::Semantic, ptr, "expected an array");
  if (size != 0 && j.size() != size) {
    fail(Kind::Semantic, ptr, "expected an array of " + std::to_string(size) + " numbers");
  }
  return j;
}

Vec2 vec2(const Json& j, const std::string& ptr) {
  array(j, ptr, 2);
  return {number(j[0], child(ptr, 0)), number(j[1], child(ptr, 1))};
}

Pose2 pose(const Json& j, const std::string& ptr) {
  only_keys(j, ptr, {"x", "y", "theta"});
  return {number_field(j, ptr, "x"), number_field(j, ptr, "y"), number_field(j, ptr, "theta")};
}

ObstacleSpec obstacle(const Json& j, const std::string& ptr) {
  only_keys(j, ptr, {"name", "buffer", "polygon", "disk", "ellipse"});
  ObstacleSpec o;
  if (j.contains("name")) o.name = string_value(j["name"], child(ptr, "name"));
  o.buffer = number_field(j, ptr, "buffer");
  if (o.buffer < 0.0) fail(Kind::Semantic, child(ptr, "buffer"), "buffer must be non-negative");

  const int shapes = static_cast<int>(j.contains("polygon")) + static_cast<int>(j.contains("disk")) +
                     static_cast<int>(j.contains("ellipse"));
  if (shapes == 0) fail(Kind::MissingField, ptr, "obstacle needs one of 'polygon', 'disk', 'ellipse'");
  if (shapes > 1) fail(Kind::Semantic, ptr, "obstacle has more than one shape");

  if (j.contains("polygon")) {
    const std::string p = child(ptr, "polygon");
    const Json& a = array(j["polygon"], p);
    PolygonSpec spec;
    for (std::size_t i = 0; i < a.size(); ++i) spec.vertices.push_back(vec2(a[i], child(p, i)));
    try {
      (void)ConvexShape::polygon(spec.vertices);
    } catch (const std::invalid_argument& e) {
      fail(Kind::Semantic, p, e.what());
    }
    o.shape = spec;
  } else if (j.contains("disk")) {
    const std::string p = child(ptr, "disk");
    only_keys(j["disk"], p, {"c", "r"});
    DiskSpec spec{vec2(field(j["disk"], p, "c"), child(p, "c")), number_field(j["disk"], p, "r")};
    if (!(spec.radius > 0.0)) fail(Kind::Semantic, child(p, "r"), "radius must be positive");
    o.shape = spec;
  } else {
    const std::string p = child(ptr, "ellipse");
    const Json& e = j["ellipse"];
    only_keys(e, p, {"center", "semi_axes", "rotation"});
    EllipseSpec spec{vec2(field(e, p, "center"), child(p, "center")),
                     vec2(field(e, p, "semi_axes"), child(p, "semi_axes")),
                     number_field(e, p, "rotation")};
    if (!(spec.semi_axes.array() > 0.0).all()) {
      fail(Kind::Semantic, child(p, "semi_axes"), "semi-axes must be positive");
    }
    o.shape = spec;
  }
  return o;
}

StoParams params(const Json& j, const std::string& ptr) {
  only_keys(j, ptr,
            {"weights", "kappa_max", "accel_max", "curvature_rate_max", "v_max", "v_min",
             "position_proximity", "heading_proximity", "feasibility_tolerance",
             "max_iterations", "timestep"});
  StoParams p;
  if (j.contains("weights")) {
    const std::string wp = child(ptr, "weights");
    const Json& w = array(j["weights"], wp, 8);
    for (std::size_t i = 0; i < 8; ++i) p.weights[i] = number(w[i], child(wp, i));
  }
  auto opt = [&](const char* key, double& out) {
    if (j.contains(key)) out = number(j[key], child(ptr, key));
  };
  opt("kappa_max", p.kappa_max);
  opt("accel_max", p.accel_max);
  opt("curvature_rate_max", p.curvature_rate_max);
  opt("v_max", p.v_max);
  opt("v_min", p.v_min);
  opt("heading_proximity", p.heading_proximity);
  opt("timestep", p.timestep);
  if (j.contains("position_proximity")) {
    p.position_proximity = vec2(j["position_proximity"], child(ptr, "position_proximity"));
  }
  if (j.contains("feasibility_tolerance")) {
    const std::string fp = child(ptr, "feasibility_tolerance");
    const Json& f = array(j["feasibility_tolerance"], fp, 5);
    for (int i = 0; i < 5; ++i) p.feasibility_tolerance(i) = number(f[static_cast<std::size_t>(i)], child(fp, static_cast<std::size_t>(i)));
  }
  if (j.contains("max_iterations")) {
    const std::string mp = child(ptr, "max_iterations");
    if (!j["max_iterations"].is_number_integer()) fail(Kind::Semantic, mp, "expected an integer");
    p.max_iterations = j["max_iterations"].get<int>();
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    fail(Kind::Semantic, ptr, e.what());
  }
  return p;
}

LabeledPath seed_path(const Json& j, const std::string& ptr) {
  only_keys(j, ptr, {"segments"});
  const std::string sp = child(ptr, "segments");
  const Json& segs = array(field(j, ptr, "segments"), sp);
  if (segs.empty()) fail(Kind::Semantic, sp, "seed path needs at least one segment");
  LabeledPath path;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string p = child(sp, i);
    only_keys(segs[i], p, {"direction", "poses"});
    PathSegment seg;
    const std::string dir = string_value(field(segs[i], p, "direction"), child(p, "direction"));
    if (dir == "forward") {
      seg.direction = Direction::Forward;
    } else if (dir == "backward") {
      seg.direction = Direction::Backward;
    } else {
      fail(Kind::Semantic, child(p, "direction"), "direction must be 'forward' or 'backward'");
    }
    const std::string pp = child(p, "poses");
    const Json& poses = array(field(segs[i], p, "poses"), pp);
    if (poses.empty()) fail(Kind::Semantic, pp, "segment needs at least one pose");
    for (std::size_t k = 0; k < poses.size(); ++k) {
      const std::string kp = child(pp, k);
      array(poses[k], kp, 3);
      seg.poses.push_back({number(poses[k][0], child(kp, 0)), number(poses[k][1], child(kp, 1)),
                           number(poses[k][2], child(kp, 2))});
    }
    path.segments.push_back(std::move(seg));
  }
  return path;
}

Scenario scenario_from_json(const Json& j) {
  const std::string root;
  only_keys(j, root,
            {"name", "notes", "vehicle", "start", "goal", "obstacles", "params", "seed_path"});
  Scenario s;
  s.name = string_value(field(j, root, "name"), "/name");
  if (j.contains("notes")) {
    const Json& notes = array(j["notes"], "/notes");
    for (std::size_t i = 0; i < notes.size(); ++i) {
      s.notes.push_back(string_value(notes[i], child(std::string("/notes"), i)));
    }
  }
  if (j.contains("vehicle")) {
    const Json& v = j["vehicle"];
    only_keys(v, "/vehicle", {"front", "rear", "width"});
    s.vehicle = {number_field(v, "/vehicle", "front"), number_field(v, "/vehicle", "rear"),
                 number_field(v, "/vehicle", "width")};
    try {
      s.vehicle.validate();
    } catch (const std::invalid_argument& e) {
      fail(Kind::Semantic, "/vehicle", e.what());
    }
  }
  s.start = pose(field(j, root, "start"), "/start");
  s.goal = pose(field(j, root, "goal"), "/goal");
  const Json& obs = array(field(j, root, "obstacles"), "/obstacles");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    s.obstacles.push_back(obstacle(obs[i], child(std::string("/obstacles"), i)));
  }
  if (j.contains("params")) s.params = params(j["params"], "/params");
  if (j.contains("seed_path")) s.seed_path = seed_path(j["seed_path"], "/seed_path");
  return s;
}

Json vec_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Json scenario_to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  if (!s.notes.empty()) j["notes"] = s.notes;
  j["vehicle"] = {{"front", s.vehicle.front}, {"rear", s.vehicle.rear}, {"width", s.vehicle.width}};
  j["start"] = {{"x", s.start.x}, {"y", s.start.y}, {"theta", s.start.theta}};
  j["goal"] = {{"x", s.goal.x}, {"y", s.goal.y}, {"theta", s.goal.theta}};
  j["obstacles"] = Json::array();
  for (const auto& o : s.obstacles) {
    Json oj;
    if (!o.name.empty()) oj["name"] = o.name;
    oj["buffer"] = o.buffer;
    if (const auto* p = std::get_if<PolygonSpec>(&o.shape)) {
      Json verts = Json::array();
      for (const auto& v : p->vertices) verts.push_back(vec_json(v));
      oj["polygon"] = verts;
    } else if (const auto* d = std::get_if<DiskSpec>(&o.shape)) {
      oj["disk"] = {{"c", vec_json(d->center)}, {"r", d->radius}};
    } else {
      const auto& e = std::get<EllipseSpec>(o.shape);
      oj["ellipse"] = {{"center", vec_json(e.center)},
                       {"semi_axes", vec_json(e.semi_axes)},
                       {"rotation", e.rotation}};
    }
    j["obstacles"].push_back(oj);
  }
  const auto& p = s.params;
  Json pj;
  pj["weights"] = p.weights;
  pj["kappa_max"] = p.kappa_max;
  pj["accel_max"] = p.accel_max;
  pj["curvature_rate_max"] = p.curvature_rate_max;
  pj["v_max"] = p.v_max;
  pj["v_min"] = p.v_min;
  pj["position_proximity"] = vec_json(p.position_proximity);
  pj["heading_proximity"] = p.heading_proximity;
  pj["feasibility_tolerance"] = Json::array();
  for (int i = 0; i < 5; ++i) pj["feasibility_tolerance"].push_back(p.feasibility_tolerance(i));
  pj["max_iterations"] = p.max_iterations;
  pj["timestep"] = p.timestep;
  j["params"] = pj;
  if (s.seed_path) {
    Json segs = Json::array();
    for (const auto& seg : s.seed_path->segments) {
      Json poses = Json::array();
      for (const auto& q : seg.poses) poses.push_back(Json::array({q.x, q.y, q.theta}));
      segs.push_back({{"direction", std::string(to_string(seg.direction))}, {"poses", poses}});
    }
    j["seed_path"] = {{"segments", segs}};
  }
  return j;
}

Json state_error_json(const StateVector<double>& e) {
  Json a = Json::array();
  for (int i = 0; i < 5; ++i) a.push_back(e(i));
  return a;
}

double segment_length(const Segment& seg) {
  SegmentedTrajectory t;
  t.segments.push_back(seg);
  return path_length(t);
}

Json result_to_json(const StoResult& r, Mode mode) {
  Json j;
  j["mode"] = std::string(to_string(mode));
  j["status"] = std::string(to_string(r.status));
  j["iterations"] = r.iterations;
  j["failed_iteration"] = r.failed_iteration >= 0 ? Json(r.failed_iteration) : Json(nullptr);
  j["message"] = r.message;
  j["timestep"] = r.trajectory.timestep;
  j["path_length"] = path_length(r.trajectory);
  Json segs = Json::array();
  for (const auto& seg : r.trajectory.segments) {
    segs.push_back({{"direction", std::string(to_string(seg.direction))},
                    {"points", seg.states.size()},
                    {"length", segment_length(seg)}});
  }
  j["segments"] = segs;
  j["curvature_jumps"] = curvature_jumps(r.trajectory);

  double kmax = 0.0, amax = 0.0, pmax = 0.0, vmax = 0.0;
  for (const auto& seg : r.trajectory.segments) {
    for (const auto& x : seg.states) {
      kmax = std::max(kmax, std::abs(x(idx::kKappa)));
      vmax = std::max(vmax, std::abs(x(idx::kV)));
    }
    for (const auto& u : seg.controls) {
      amax = std::max(amax, std::abs(u(idx::kAccel)));
      pmax = std::max(pmax, std::abs(u(idx::kCurvRate)));
    }
  }
  j["max_abs"] = {{"kappa", kmax}, {"accel", amax}, {"curvature_rate", pmax}, {"speed", vmax}};

  Json errors = Json::array();
  Json qp = Json::array();
  for (const auto& h : r.history) {
    errors.push_back(state_error_json(h.feasibility_error));
    qp.push_back({{"status", std::string(qp::to_string(h.qp_status))},
                  {"iterations", h.qp_iterations},
                  {"polished", h.qp_polished},
                  {"objective", h.qp_objective},
                  {"max_slack", h.max_slack}});
  }
  j["feasibility_errors"] = errors;
  j["final_feasibility_error"] =
      r.history.empty() ? Json(nullptr) : state_error_json(r.history.back().feasibility_error);
  j["qp"] = qp;
  return j;
}

Json region_json(const ConvexPolygonRegion& region) {
  Json hs = Json::array();
  for (const auto& h : region.halfspaces) {
    hs.push_back(Json::array({h.normal.x(), h.normal.y(), h.offset}));
  }
  Json verts = Json::array();
  for (const auto& v : region.vertices) verts.push_back(vec_json(v));
  const double rot = std::atan2(region.ellipse.rotation(1, 0), region.ellipse.rotation(0, 0));
  return {{"anchor", vec_json(region.anchor)},
          {"halfspaces", hs},
          {"vertices", verts},
          {"ellipse",
           {{"center", vec_json(region.ellipse.center)},
            {"semi_axes", Json::array({region.ellipse.semi_major, region.ellipse.semi_minor})},
            {"rotation", rot}}}};
}

}  // namespace

ScenarioError::ScenarioError(Kind kind, const std::string& message, std::size_t line,
                             std::size_t column)
    : std::runtime_error(line > 0 ? std::string(kind_name(kind)) + " at line " +
                                        std::to_string(line) + ", column " +
                                        std::to_string(column) + ": " + message
                                  : std::string(kind_name(kind)) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column),
      detail_(message) {}

BufferedObstacle ObstacleSpec::build() const {
  if (const auto* p = std::get_if<PolygonSpec>(&shape)) {
    return make_buffered(ConvexShape::polygon(p->vertices), buffer);
  }
  if (const auto* d = std::get_if<DiskSpec>(&shape)) {
    return make_buffered(ConvexShape::disk(d->center, d->radius), buffer);
  }
  const auto& e = std::get<EllipseSpec>(shape);
  return make_buffered(ConvexShape::ellipse(e.center, e.semi_axes, e.rotation), buffer);
}

std::vector<BufferedObstacle> Scenario::buffered_obstacles() const {
  std::vector<BufferedObstacle> out;
  out.reserve(obstacles.size());
  for (const auto& o : obstacles) out.push_back(o.build());
  return out;
}

Scenario load_scenario(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = line_column(text, offset);
    std::string what = e.what();
    const auto colon = what.find(": ", what.find("parse error"));
    if (colon != std::string::npos) what = what.substr(colon + 2);
    throw ScenarioError(Kind::Parse, what, line, col);
  }
  const Locator locator(text);
  if (!locator.duplicates().empty()) {
    const auto& [ptr, offset] = locator.duplicates().front();
    const auto [line, col] = line_column(text, offset);
    throw ScenarioError(Kind::Semantic, "duplicate field '" + ptr + "'", line, col);
  }
  try {
    return scenario_from_json(j);
  } catch (const FieldError& e) {
    const auto [line, col] = line_column(text, locator.offset(e.pointer));
    const std::string where = e.pointer.empty() ? "" : " (" + e.pointer + ")";
    throw ScenarioError(e.kind, e.message + where, line, col);
  }
}

std::string save_scenario(const Scenario& scenario) {
  return scenario_to_json(scenario).dump(2) + "\n";
}

std::vector<std::string_view> builtin_scenario_names() {
  std::vector<std::string_view> names;
  for (const auto& [name, text] : fixtures::kBuiltin) names.push_back(name);
  return names;
}

std::optional<std::string_view> builtin_scenario_text(std::string_view name) {
  for (const auto& [n, text] : fixtures::kBuiltin) {
    if (n == name) return text;
  }
  return std::nullopt;
}

Scenario load_builtin_scenario(std::string_view name) {
  const auto text = builtin_scenario_text(name);
  if (!text) throw ScenarioError(Kind::Io, "no built-in scenario named '" + std::string(name) + "'");
  return load_scenario(*text);
}

Scenario load_scenario_source(const std::string& path_or_name) {
  if (builtin_scenario_text(path_or_name)) return load_builtin_scenario(path_or_name);
  std::ifstream in(path_or_name, std::ios::binary);
  if (!in) throw ScenarioError(Kind::Io, "cannot open '" + path_or_name + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

std::string trajectory_csv(const SegmentedTrajectory& trajectory) {
  std::string out = "segment,k,t,x,y,theta,v,kappa,a,psi,sigma\n";
  char buf[512];
  double t0 = 0.0;
  for (std::size_t s = 0; s < trajectory.segments.size(); ++s) {
    const auto& seg = trajectory.segments[s];
    for (std::size_t k = 0; k < seg.states.size(); ++k) {
      const State& x = seg.states[k];
      const double t = t0 + static_cast<double>(k) * trajectory.timestep;
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,", s, k, t,
                    x(idx::kX), x(idx::kY), x(idx::kTheta), x(idx::kV), x(idx::kKappa));
      out += buf;
      if (k < seg.controls.size()) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,", seg.controls[k](idx::kAccel),
                      seg.controls[k](idx::kCurvRate));
        out += buf;
      } else {
        out += ",,";
      }
      if (k < seg.slacks.size()) {
        std::snprintf(buf, sizeof buf, "%.10g", seg.slacks[k] + 0.0);  // -0 prints as 0
        out += buf;
      }
      out += '\n';
    }
    if (!seg.states.empty()) t0 += static_cast<double>(seg.states.size() - 1) * trajectory.timestep;
  }
  return out;
}

std::string save_result(const StoResult& result, Mode mode) {
  return result_to_json(result, mode).dump(2) + "\n";
}

std::string run_report_json(const RunReportInput& input) {
  Json j;
  j["scenario"] = input.scenario;
  j["seed"] = input.seed;
  Json seed;
  seed["source"] = input.seed_source;
  if (input.seed_path) {
    Json segs = Json::array();
    for (const auto& seg : input.seed_path->segments) {
      double len = 0.0;
      for (std::size_t i = 1; i < seg.poses.size(); ++i) {
        len += (seg.poses[i].position() - seg.poses[i - 1].position()).norm();
      }
      segs.push_back({{"direction", std::string(to_string(seg.direction))},
                      {"poses", seg.poses.size()},
                      {"length", len}});
    }
    seed["segments"] = segs;
  }
  j["seed_path"] = seed;

  Json runs = Json::array();
  const StoResult* sto = nullptr;
  const StoResult* baseline = nullptr;
  for (const auto& run : input.runs) {
    runs.push_back(result_to_json(run.result, run.mode));
    (run.mode == Mode::Sto ? sto : baseline) = &run.result;
  }
  j["runs"] = runs;
  if (sto && baseline) {
    const double ls = path_length(sto->trajectory);
    const double lb = path_length(baseline->trajectory);
    auto max_jump = [](const StoResult& r) {
      const auto jumps = curvature_jumps(r.trajectory);
      return jumps.empty() ? 0.0 : *std::max_element(jumps.begin(), jumps.end());
    };
    j["comparison"] = {{"sto_length", ls},
                       {"baseline_length", lb},
                       {"reduction_percent", lb > 0.0 ? 100.0 * (lb - ls) / lb : 0.0},
                       {"sto_max_curvature_jump", max_jump(*sto)},
                       {"baseline_max_curvature_jump", max_jump(*baseline)}};
  }

  Json timing;
  timing["seed_planner_seconds"] = input.seed_planner_seconds;
  Json trun = Json::array();
  for (const auto& run : input.runs) {
    Json corridor = Json::array();
    Json qp = Json::array();
    for (const auto& h : run.result.history) {
      corridor.push_back(h.corridor_seconds);
      qp.push_back(h.qp_seconds);
    }
    trun.push_back({{"mode", std::string(to_string(run.mode))},
                    {"total_seconds", run.result.total_seconds},
                    {"corridor_seconds", corridor},
                    {"qp_seconds", qp}});
  }
  timing["runs"] = trun;
  j["timing"] = timing;
  return j.dump(2) + "\n";
}

std::string corridor_json(const StoResult& result) {
  Json iters = Json::array();
  for (std::size_t i = 0; i < result.corridors.size(); ++i) {
    Json segs = Json::array();
    for (const auto& seg : result.corridors[i].segments) {
      Json regions = Json::array();
      for (const auto& r : seg) regions.push_back(region_json(r));
      segs.push_back(regions);
    }
    iters.push_back({{"iteration", i + 1}, {"segments", segs}});
  }
  return Json{{"iterations", iters}}.dump(2) + "\n";
}

}  // namespace stopt
