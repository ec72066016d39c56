#pragma once

#include "stopt/geom2d.hpp"
#include "stopt/params.hpp"
#include "stopt/sto.hpp"
#include "stopt/trajectory.hpp"
#include "stopt/vehicle.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stopt {

struct PolygonSpec {
  std::vector<Vec2> vertices;
  bool operator==(const PolygonSpec&) const = default;
};

struct DiskSpec {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
  bool operator==(const DiskSpec&) const = default;
};

struct EllipseSpec {
  Vec2 center = Vec2::Zero();
  Vec2 semi_axes = Vec2::Ones();
  double rotation = 0.0;
  bool operator==(const EllipseSpec&) const = default;
};

/// Obstacle as written in a scenario file; keeps the authored parameters so that
/// saving reproduces the input.
struct ObstacleSpec {
  std::string name;
  std::variant<PolygonSpec, DiskSpec, EllipseSpec> shape;
  double buffer = 0.0;

  BufferedObstacle build() const;
  bool operator==(const ObstacleSpec&) const = default;
};

struct Scenario {
  std::string name;
  std::vector<std::string> notes;
  VehicleGeometry vehicle;
  Pose2 start;
  Pose2 goal;
  std::vector<ObstacleSpec> obstacles;
  StoParams params;
  std::optional<LabeledPath> seed_path;

  std::vector<BufferedObstacle> buffered_obstacles() const;
  bool operator==(const Scenario&) const = default;
};

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { Io, Parse, MissingField, UnknownField, Semantic };

  ScenarioError(Kind kind, const std::string& message, std::size_t line = 0,
                std::size_t column = 0);

  Kind kind() const { return kind_; }
  /// 1-based; 0 when no position applies (I/O errors).
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& detail() const { return detail_; }

 private:
  Kind kind_;
  std::size_t line_;
  std::size_t column_;
  std::string detail_;
};

Scenario load_scenario(std::string_view text);
std::string save_scenario(const Scenario& scenario);

/// Reads a file, or a built-in fixture when `path_or_name` names one.
Scenario load_scenario_source(const std::string& path_or_name);

std::vector<std::string_view> builtin_scenario_names();
std::optional<std::string_view> builtin_scenario_text(std::string_view name);
Scenario load_builtin_scenario(std::string_view name);

/// segment,k,t,x,y,theta,v,kappa,a,psi,sigma; t runs continuously across segments.
std::string trajectory_csv(const SegmentedTrajectory& trajectory);

/// Single run as a JSON object (no timings).
std::string save_result(const StoResult& result, Mode mode);

struct ModeRun {
  Mode mode = Mode::Sto;
  StoResult result;
};

struct RunReportInput {
  std::string scenario;
  std::string seed_source;  // "planner" or "scenario"
  std::uint64_t seed = 0;
  const LabeledPath* seed_path = nullptr;
  double seed_planner_seconds = 0.0;
  std::span<const ModeRun> runs;
};

/// Report with deterministic content first and all wall-clock figures under "timing".
std::string run_report_json(const RunReportInput& input);

/// Corridor regions of every iteration of one run.
std::string corridor_json(const StoResult& result);

}  // namespace stopt
