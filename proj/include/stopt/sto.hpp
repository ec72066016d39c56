#pragma once

#include "stopt/corridor.hpp"
#include "stopt/params.hpp"
#include "stopt/qp.hpp"
#include "stopt/trajectory.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stopt {

/// Baseline additionally ties curvature across gear shifts.
enum class Mode { Sto, Baseline };
std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view text);

enum class StoStatus { Converged, MaxIterations, QpInfeasible, CorridorInfeasible };
std::string_view to_string(StoStatus s);

/// Decision vector layout: per segment all states, then all controls, then all slacks.
class VariableLayout {
 public:
  explicit VariableLayout(const SegmentedTrajectory& reference);

  int state(std::size_t segment, std::size_t k, int component) const;
  int control(std::size_t segment, std::size_t k, int component) const;
  int slack(std::size_t segment, std::size_t k) const;
  int size() const { return total_; }
  std::size_t segment_count() const { return blocks_.size(); }
  std::size_t points(std::size_t segment) const { return blocks_[segment].points; }

 private:
  struct Block {
    int states = 0;
    int controls = 0;
    int slacks = 0;
    std::size_t points = 0;
  };
  std::vector<Block> blocks_;
  int total_ = 0;
};

struct Subproblem {
  qp::QpProblem problem;
  VariableLayout layout;
  int dynamics_rows = 0;
  int switching_rows = 0;
  int endpoint_rows = 0;
  int corner_rows = 0;
};

/// Linearizes dynamics and corner containment about `reference` (headings must already
/// be continuous) and builds the convex subproblem. Throws std::invalid_argument when
/// the corridor does not match the reference point count.
Subproblem assemble_subproblem(const SegmentedTrajectory& reference, const Corridor& corridor,
                               const VehicleGeometry& vehicle, const StoParams& params,
                               Mode mode, const Pose2& start, const Pose2& goal);

/// Reads a QP solution back into trajectory form, keeping segment directions.
SegmentedTrajectory extract_trajectory(const qp::Vector& x, const VariableLayout& layout,
                                       const SegmentedTrajectory& reference);

/// Makes headings continuous along the whole trajectory, segment by segment.
void unwrap_headings(SegmentedTrajectory& trajectory);

struct IterationRecord {
  StateVector<double> feasibility_error = StateVector<double>::Zero();
  double corridor_seconds = 0.0;
  double qp_seconds = 0.0;
  qp::QpStatus qp_status = qp::QpStatus::Optimal;
  int qp_iterations = 0;
  bool qp_polished = false;
  double qp_objective = 0.0;
  double max_slack = 0.0;
  double min_clearance = 0.0;
};

struct OptimizeOptions {
  bool keep_corridors = true;
  /// When set, every subproblem is written to <dir>/iter_<n>/ in MatrixMarket form.
  std::optional<std::filesystem::path> dump_qp_dir;
  qp::QpSettings qp;
};

struct StoResult {
  SegmentedTrajectory reference;  // initial speed-planned reference
  SegmentedTrajectory trajectory;
  StoStatus status = StoStatus::MaxIterations;
  int iterations = 0;
  int failed_iteration = -1;
  std::string message;
  std::vector<IterationRecord> history;
  std::vector<Corridor> corridors;
  double total_seconds = 0.0;
};

/// Smallest GJK distance from any vehicle corner of the trajectory to any obstacle; 0 when
/// a corner lies inside one. Infinity without obstacles.
double min_corner_clearance(const SegmentedTrajectory& trajectory, const VehicleGeometry& vehicle,
                            std::span<const BufferedObstacle> obstacles);

/// Speed plan, then corridor / QP / RK4 check until the feasibility error drops
/// below the tolerance or the iteration cap is hit.
StoResult optimize(const LabeledPath& path, std::span<const BufferedObstacle> obstacles,
                   const VehicleGeometry& vehicle, const StoParams& params, Mode mode,
                   const OptimizeOptions& options = {});

/// Same loop starting from an already time-parameterized reference.
StoResult optimize_reference(SegmentedTrajectory reference,
                             std::span<const BufferedObstacle> obstacles,
                             const VehicleGeometry& vehicle, const StoParams& params, Mode mode,
                             const Pose2& start, const Pose2& goal,
                             const OptimizeOptions& options = {});

}  // namespace stopt
