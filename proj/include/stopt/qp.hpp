#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <filesystem>
#include <optional>
#include <string_view>

namespace stopt::qp {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

inline constexpr double kInfinity = 1e30;

/// minimize 0.5 x^T H x + g^T x
/// s.t.     A_eq x = b_eq
///          l_in <= A_in x <= u_in   (entries beyond +-kInfinity are unbounded)
struct QpProblem {
  SparseMatrix H;
  Vector g;
  SparseMatrix A_eq;
  Vector b_eq;
  SparseMatrix A_in;
  Vector l_in;
  Vector u_in;

  Eigen::Index n_vars() const { return g.size(); }
  /// Throws std::invalid_argument on inconsistent dimensions or l_in > u_in.
  void validate() const;
  double objective(const Vector& x) const;
};

enum class QpStatus { Optimal, MaxIterations, Infeasible };
std::string_view to_string(QpStatus s);

enum class QpMethod { InteriorPoint, Admm };
std::string_view to_string(QpMethod m);

struct QpSolution {
  Vector primal;
  Vector dual_eq;  // multipliers, sign convention H x + g + A_eq^T y_eq + A_in^T y_in = 0
  Vector dual_in;  // y_in > 0 on active upper bounds, < 0 on active lower bounds
  double objective = 0.0;
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
  QpMethod method = QpMethod::Admm;  // the method that produced the result
};

struct QpSettings {
  /// Interior point falls back to ADMM when it does not converge; ADMM also provides the
  /// infeasibility certificate.
  QpMethod method = QpMethod::InteriorPoint;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_infeasible = 1e-6;
  int max_iterations = 10000;
  int check_interval = 25;
  int scaling_iterations = 10;
  bool adaptive_rho = true;
  bool polish = true;
};

/// Interior point or operator-splitting (ADMM) solve on the Ruiz-equilibrated problem.
/// Deterministic for fixed inputs and settings. The warm start seeds the primal iterate.
QpSolution solve(const QpProblem& problem, const std::optional<Vector>& warm_start = std::nullopt,
                 const QpSettings& settings = {});

/// Writes H.mtx, A_eq.mtx, A_in.mtx (MatrixMarket coordinate format) and g, b_eq, l_in,
/// u_in as one-column array files into `directory`.
void write_matrix_market(const QpProblem& problem, const std::filesystem::path& directory);

}  // namespace stopt::qp
