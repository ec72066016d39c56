#include "stopt/qp.hpp"

#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/SparseExtra>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace stopt::qp {

namespace {

constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqualityScale = 1e3;
constexpr double kScalingMin = 1e-4;
constexpr double kScalingMax = 1e4;
constexpr double kPolishDelta = 1e-7;

enum class RowKind { Loose, Inequality, Equality };

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

Vector column_inf_norms(const SparseMatrix& m) {
  Vector out = Vector::Zero(m.cols());
  for (Eigen::Index j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      out(j) = std::max(out(j), std::abs(it.value()));
    }
  }
  return out;
}

Vector row_inf_norms(const SparseMatrix& m) {
  Vector out = Vector::Zero(m.rows());
  for (Eigen::Index j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      out(it.row()) = std::max(out(it.row()), std::abs(it.value()));
    }
  }
  return out;
}

Vector limited_inverse_sqrt(const Vector& norms) {
  Vector out(norms.size());
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    double n = norms(i);
    if (n < kScalingMin) n = 1.0;
    n = std::min(n, kScalingMax);
    out(i) = 1.0 / std::sqrt(n);
  }
  return out;
}

SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom, Eigen::Index cols) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(top.nonZeros() + bottom.nonZeros()));
  for (Eigen::Index j = 0; j < top.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(top, j); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  }
  for (Eigen::Index j = 0; j < bottom.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(bottom, j); it; ++it) {
      t.emplace_back(it.row() + top.rows(), it.col(), it.value());
    }
  }
  SparseMatrix out(top.rows() + bottom.rows(), cols);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SparseMatrix identity(Eigen::Index n, double value) {
  SparseMatrix m(n, n);
  m.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index i = 0; i < n; ++i) m.insert(i, i) = value;
  return m;
}

// Problem data after Ruiz equilibration: P = c D P0 D, A = E A0 D, q = c D q0.
struct ScaledProblem {
  SparseMatrix P;
  SparseMatrix A;
  SparseMatrix At;
  Vector q;
  Vector l;
  Vector u;
  Vector D;
  Vector E;
  double c = 1.0;
};

ScaledProblem scale_problem(const SparseMatrix& P0, const Vector& q0, const SparseMatrix& A0,
                            const Vector& l0, const Vector& u0, int iterations) {
  ScaledProblem s;
  s.P = P0;
  s.A = A0;
  s.q = q0;
  s.D = Vector::Ones(P0.cols());
  s.E = Vector::Ones(A0.rows());
  for (int it = 0; it < iterations; ++it) {
    const Vector dcol = column_inf_norms(s.P).cwiseMax(column_inf_norms(s.A));
    const Vector d = limited_inverse_sqrt(dcol);
    const Vector e = limited_inverse_sqrt(row_inf_norms(s.A));
    s.P = d.asDiagonal() * s.P * d.asDiagonal();
    s.A = e.asDiagonal() * s.A * d.asDiagonal();
    s.q = d.cwiseProduct(s.q);
    s.D = s.D.cwiseProduct(d);
    s.E = s.E.cwiseProduct(e);

    const Vector pcol = column_inf_norms(s.P);
    const double mean = pcol.size() > 0 ? pcol.mean() : 0.0;
    double cost = std::max(mean, inf_norm(s.q));
    if (cost < kScalingMin) cost = 1.0;
    cost = std::min(cost, kScalingMax);
    const double gamma = 1.0 / cost;
    s.P *= gamma;
    s.q *= gamma;
    s.c *= gamma;
  }
  s.l = s.E.cwiseProduct(l0);
  s.u = s.E.cwiseProduct(u0);
  for (Eigen::Index i = 0; i < s.l.size(); ++i) {
    if (l0(i) <= -kInfinity) s.l(i) = -kInfinity;
    if (u0(i) >= kInfinity) s.u(i) = kInfinity;
  }
  s.At = s.A.transpose();
  return s;
}

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double eps_primal = 0.0;
  double eps_dual = 0.0;
  // Scaled-space quantities for rho adaptation.
  double primal_ratio = 0.0;
  double dual_ratio = 0.0;

  bool converged() const { return primal <= eps_primal && dual <= eps_dual; }
  double score() const {
    return std::max(primal / std::max(eps_primal, 1e-300), dual / std::max(eps_dual, 1e-300));
  }
};

Residuals compute_residuals(const ScaledProblem& s, const Vector& x, const Vector& z,
                            const Vector& y, const QpSettings& settings) {
  const Vector Ax = s.A * x;
  const Vector Px = s.P * x;
  const Vector Aty = s.At * y;
  const Vector Einv = s.E.cwiseInverse();
  const Vector Dinv = s.D.cwiseInverse();

  Residuals r;
  r.primal = inf_norm(Einv.cwiseProduct(Ax - z));
  const double ax_norm = inf_norm(Einv.cwiseProduct(Ax));
  const double z_norm = inf_norm(Einv.cwiseProduct(z));
  r.eps_primal = settings.eps_abs + settings.eps_rel * std::max(ax_norm, z_norm);

  r.dual = inf_norm(Dinv.cwiseProduct(Px + s.q + Aty)) / s.c;
  const double px_norm = inf_norm(Dinv.cwiseProduct(Px)) / s.c;
  const double aty_norm = inf_norm(Dinv.cwiseProduct(Aty)) / s.c;
  const double q_norm = inf_norm(Dinv.cwiseProduct(s.q)) / s.c;
  r.eps_dual = settings.eps_abs + settings.eps_rel * std::max({px_norm, aty_norm, q_norm});

  const double sp = inf_norm(Ax - z);
  const double sp_norm = std::max({inf_norm(Ax), inf_norm(z), 1e-12});
  const double sd = inf_norm(Px + s.q + Aty);
  const double sd_norm = std::max({inf_norm(Px), inf_norm(Aty), inf_norm(s.q), 1e-12});
  r.primal_ratio = sp / sp_norm;
  r.dual_ratio = sd / sd_norm;
  return r;
}

bool primal_infeasible(const ScaledProblem& s, const Vector& dy_scaled, double eps) {
  const Vector dy = s.E.cwiseProduct(dy_scaled);
  const double norm = inf_norm(dy);
  if (norm < 1e-20) return false;
  const Vector dyn = dy / norm;
  // A0^T dy = D^-1 A^T (E^-1 dy) = D^-1 A^T dy_scaled / norm.
  const Vector atdy = s.D.cwiseInverse().cwiseProduct(s.At * (dy_scaled / norm));
  if (inf_norm(atdy) >= eps) return false;
  double support = 0.0;
  const Vector Einv = s.E.cwiseInverse();
  for (Eigen::Index i = 0; i < dyn.size(); ++i) {
    const double u = s.u(i) >= kInfinity ? kInfinity : s.u(i) * Einv(i);
    const double l = s.l(i) <= -kInfinity ? -kInfinity : s.l(i) * Einv(i);
    if (dyn(i) > 0.0) {
      if (u >= kInfinity) {
        if (dyn(i) > eps) return false;
        continue;
      }
      support += u * dyn(i);
    } else if (dyn(i) < 0.0) {
      if (l <= -kInfinity) {
        if (dyn(i) < -eps) return false;
        continue;
      }
      support += l * dyn(i);
    }
  }
  return support < -eps;
}

std::vector<RowKind> classify_rows(const ScaledProblem& s) {
  std::vector<RowKind> kinds(static_cast<std::size_t>(s.l.size()));
  for (Eigen::Index i = 0; i < s.l.size(); ++i) {
    const bool lo_inf = s.l(i) <= -kInfinity;
    const bool hi_inf = s.u(i) >= kInfinity;
    RowKind k = RowKind::Inequality;
    if (lo_inf && hi_inf) {
      k = RowKind::Loose;
    } else if (std::abs(s.u(i) - s.l(i)) <= 1e-12 * std::max(1.0, std::abs(s.l(i)))) {
      k = RowKind::Equality;
    }
    kinds[static_cast<std::size_t>(i)] = k;
  }
  return kinds;
}

class AdmmSolver {
 public:
  AdmmSolver(const ScaledProblem& s, const QpSettings& settings)
      : s_(s), settings_(settings), rho_scalar_(settings.rho), kinds_(classify_rows(s)) {
    build_rho();
    factorize(true);
  }

  bool ok() const { return ok_; }
  const Vector& rho() const { return rho_; }

  void set_rho(double rho) {
    rho_scalar_ = std::clamp(rho, kRhoMin, kRhoMax);
    build_rho();
    factorize(false);
  }
  double rho_scalar() const { return rho_scalar_; }

  Vector solve_linear(const Vector& rhs) const { return ldlt_.solve(rhs); }

 private:
  void build_rho() {
    rho_.resize(s_.l.size());
    for (Eigen::Index i = 0; i < rho_.size(); ++i) {
      switch (kinds_[static_cast<std::size_t>(i)]) {
        case RowKind::Loose: rho_(i) = kRhoMin; break;
        case RowKind::Equality: rho_(i) = kRhoEqualityScale * rho_scalar_; break;
        case RowKind::Inequality: rho_(i) = rho_scalar_; break;
      }
    }
  }

  void factorize(bool analyze) {
    const Eigen::Index n = s_.P.cols();
    SparseMatrix K = s_.P + identity(n, settings_.sigma);
    if (s_.A.rows() > 0) K += SparseMatrix(s_.At * rho_.asDiagonal() * s_.A);
    K.makeCompressed();
    if (analyze) ldlt_.analyzePattern(K);
    ldlt_.factorize(K);
    ok_ = ldlt_.info() == Eigen::Success;
  }

  const ScaledProblem& s_;
  const QpSettings& settings_;
  double rho_scalar_;
  Vector rho_;
  std::vector<RowKind> kinds_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool ok_ = false;

 public:
  const std::vector<RowKind>& kinds() const { return kinds_; }
};

struct Iterate {
  Vector x;
  Vector z;
  Vector y;
};

struct ActiveRow {
  Eigen::Index row;
  double target;
  int side;  // -1 lower, +1 upper, 0 equality
};

// Equality-constrained solve on a fixed active set.
std::optional<Iterate> solve_active(const ScaledProblem& s, const std::vector<ActiveRow>& active) {
  const Eigen::Index n = s.P.cols();
  const Eigen::Index m = s.A.rows();
  const auto na = static_cast<Eigen::Index>(active.size());

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(s.P.nonZeros() + n + 2 * na * 4));
  for (Eigen::Index j = 0; j < s.P.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator p(s.P, j); p; ++p) t.emplace_back(p.row(), p.col(), p.value());
  }
  for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, kPolishDelta);
  SparseMatrix Aact(na, n);
  {
    std::vector<Eigen::Index> row_of(static_cast<std::size_t>(m), -1);
    for (Eigen::Index r = 0; r < na; ++r) row_of[static_cast<std::size_t>(active[r].row)] = r;
    std::vector<Eigen::Triplet<double>> at;
    for (Eigen::Index j = 0; j < s.A.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator a(s.A, j); a; ++a) {
        const auto r = row_of[static_cast<std::size_t>(a.row())];
        if (r >= 0) at.emplace_back(r, a.col(), a.value());
      }
    }
    Aact.setFromTriplets(at.begin(), at.end());
  }
  for (Eigen::Index j = 0; j < Aact.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator a(Aact, j); a; ++a) {
      t.emplace_back(n + a.row(), a.col(), a.value());
      t.emplace_back(a.col(), n + a.row(), a.value());
    }
  }
  for (Eigen::Index r = 0; r < na; ++r) t.emplace_back(n + r, n + r, -kPolishDelta);
  SparseMatrix K(n + na, n + na);
  K.setFromTriplets(t.begin(), t.end());
  K.makeCompressed();

  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(K);
  if (ldlt.info() != Eigen::Success) return std::nullopt;

  Vector rhs(n + na);
  rhs.head(n) = -s.q;
  for (Eigen::Index r = 0; r < na; ++r) rhs(n + r) = active[static_cast<std::size_t>(r)].target;
  Vector sol = ldlt.solve(rhs);
  // Iterative refinement against the unregularized KKT system.
  const SparseMatrix AactT = Aact.transpose();
  for (int ref = 0; ref < 10; ++ref) {
    Vector res(n + na);
    res.head(n) = rhs.head(n) - (s.P * sol.head(n) + AactT * sol.tail(na));
    res.tail(na) = rhs.tail(na) - Aact * sol.head(n);
    if (inf_norm(res) < 1e-13) break;
    sol += ldlt.solve(res);
  }
  if (!sol.allFinite()) return std::nullopt;

  Iterate out;
  out.x = sol.head(n);
  out.y = Vector::Zero(m);
  for (Eigen::Index r = 0; r < na; ++r) out.y(active[static_cast<std::size_t>(r)].row) = sol(n + r);
  out.z = (s.A * out.x).cwiseMax(s.l).cwiseMin(s.u);
  return out;
}

// Solve the equality-constrained problem on the guessed active set and accept the result
// only when it is primal feasible, stationary and the multiplier signs are consistent.
// A few rounds of active-set correction follow: rows whose multiplier has the wrong sign
// are released and violated rows are added. Dependent rows, such as a bound duplicating an
// equality, otherwise split their multiplier arbitrarily.
std::optional<std::pair<Iterate, Residuals>> polish(const ScaledProblem& s, const Iterate& it,
                                                    const std::vector<RowKind>& kinds,
                                                    const QpSettings& settings) {
  constexpr int kRounds = 8;
  const Eigen::Index m = s.A.rows();
  std::vector<ActiveRow> active;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto kind = kinds[static_cast<std::size_t>(i)];
    if (kind == RowKind::Loose) continue;
    if (kind == RowKind::Equality) {
      active.push_back({i, s.l(i), 0});
      continue;
    }
    const bool lower = s.l(i) > -kInfinity && it.z(i) - s.l(i) < -it.y(i);
    const bool upper = s.u(i) < kInfinity && s.u(i) - it.z(i) < it.y(i);
    if (lower) {
      active.push_back({i, s.l(i), -1});
    } else if (upper) {
      active.push_back({i, s.u(i), 1});
    }
  }

  for (int round = 0; round < kRounds; ++round) {
    const auto sol = solve_active(s, active);
    if (!sol) return std::nullopt;
    const Residuals res = compute_residuals(s, sol->x, sol->z, sol->y, settings);
    std::vector<char> in_set(static_cast<std::size_t>(m), 0);
    std::vector<ActiveRow> next;
    next.reserve(active.size());
    bool changed = false;
    for (const auto& a : active) {
      const double y_unscaled = s.E(a.row) * sol->y(a.row) / s.c;
      if (a.side * y_unscaled >= -res.eps_dual) {
        next.push_back(a);
        in_set[static_cast<std::size_t>(a.row)] = 1;
      } else {
        changed = true;
      }
    }
    if (!res.converged()) {
      const Vector Ax = s.A * sol->x;
      const Vector Einv = s.E.cwiseInverse();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (in_set[static_cast<std::size_t>(i)]) continue;
        if (Einv(i) * (Ax(i) - s.u(i)) > res.eps_primal) {
          next.push_back({i, s.u(i), 1});
          changed = true;
        } else if (Einv(i) * (s.l(i) - Ax(i)) > res.eps_primal) {
          next.push_back({i, s.l(i), -1});
          changed = true;
        }
      }
    }
    if (!changed) {
      if (!res.converged()) return std::nullopt;
      return std::make_pair(*sol, res);
    }
    active = std::move(next);
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::MaxIterations: return "max_iter";
    case QpStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

void QpProblem::validate() const {
  const Eigen::Index n = g.size();
  if (H.rows() != n || H.cols() != n) throw std::invalid_argument("H must be n x n");
  if (A_eq.cols() != n || A_eq.rows() != b_eq.size()) {
    throw std::invalid_argument("A_eq/b_eq dimensions are inconsistent");
  }
  if (A_in.cols() != n || A_in.rows() != l_in.size() || l_in.size() != u_in.size()) {
    throw std::invalid_argument("A_in/l_in/u_in dimensions are inconsistent");
  }
  for (Eigen::Index i = 0; i < l_in.size(); ++i) {
    if (l_in(i) > u_in(i)) throw std::invalid_argument("l_in exceeds u_in");
  }
  if (!g.allFinite() || !b_eq.allFinite()) throw std::invalid_argument("non-finite QP data");
}

double QpProblem::objective(const Vector& x) const { return 0.5 * x.dot(H * x) + g.dot(x); }

namespace {

struct Outcome {
  Iterate sol;
  Residuals res;
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  bool polished = false;
};

Outcome run_admm(const ScaledProblem& s, const Vector& x0, const QpSettings& settings) {
  Outcome out;
  AdmmSolver admm(s, settings);
  Iterate it;
  it.x = x0;
  it.z = (s.A * it.x).cwiseMax(s.l).cwiseMin(s.u);
  it.y = Vector::Zero(s.A.rows());
  out.sol = it;
  out.res = compute_residuals(s, it.x, it.z, it.y, settings);
  if (!admm.ok()) return out;

  Vector y_prev = it.y;
  int last_polish = -1000000;
  const double alpha = settings.alpha;
  auto done = [&](const Iterate& sol, const Residuals& res, QpStatus status, int k, bool pol) {
    out.sol = sol;
    out.res = res;
    out.status = status;
    out.iterations = k;
    out.polished = pol;
    return out;
  };

  for (int k = 1; k <= settings.max_iterations; ++k) {
    y_prev = it.y;
    const Vector rhs =
        settings.sigma * it.x - s.q + s.At * (admm.rho().cwiseProduct(it.z) - it.y);
    const Vector x_tilde = admm.solve_linear(rhs);
    const Vector z_tilde = s.A * x_tilde;
    it.x = alpha * x_tilde + (1.0 - alpha) * it.x;
    const Vector z_relaxed = alpha * z_tilde + (1.0 - alpha) * it.z;
    const Vector z_next =
        (z_relaxed + admm.rho().cwiseInverse().cwiseProduct(it.y)).cwiseMax(s.l).cwiseMin(s.u);
    it.y += admm.rho().cwiseProduct(z_relaxed - z_next);
    it.z = z_next;

    if (k % settings.check_interval != 0 && k != settings.max_iterations) continue;

    const Residuals res = compute_residuals(s, it.x, it.z, it.y, settings);
    if (res.score() < out.res.score()) {
      out.sol = it;
      out.res = res;
    }
    if (res.converged()) {
      if (settings.polish) {
        if (auto pol = polish(s, it, admm.kinds(), settings)) {
          return done(pol->first, pol->second, QpStatus::Optimal, k, true);
        }
      }
      return done(it, res, QpStatus::Optimal, k, false);
    }
    if (settings.polish && k - last_polish >= 4 * settings.check_interval &&
        res.primal <= 1e3 * res.eps_primal && res.dual <= 1e3 * res.eps_dual) {
      last_polish = k;
      if (auto pol = polish(s, it, admm.kinds(), settings)) {
        return done(pol->first, pol->second, QpStatus::Optimal, k, true);
      }
    }
    if (primal_infeasible(s, it.y - y_prev, settings.eps_infeasible)) {
      return done(it, res, QpStatus::Infeasible, k, false);
    }
    if (settings.adaptive_rho) {
      const double ratio = std::sqrt(res.primal_ratio / std::max(res.dual_ratio, 1e-300));
      const double candidate = std::clamp(admm.rho_scalar() * ratio, kRhoMin, kRhoMax);
      if (candidate > 5.0 * admm.rho_scalar() || candidate < 0.2 * admm.rho_scalar()) {
        admm.set_rho(candidate);
        if (!admm.ok()) break;
      }
    }
  }

  out.iterations = settings.max_iterations;
  if (settings.polish) {
    if (auto pol = polish(s, out.sol, admm.kinds(), settings)) {
      return done(pol->first, pol->second, QpStatus::Optimal, settings.max_iterations, true);
    }
  }
  return out;
}

// Primal-dual interior point with Mehrotra's predictor-corrector on the scaled problem.
// Each finite bound of an inequality row gets its own slack and multiplier; equality rows
// stay in the KKT system, which is factorized in quasi-definite form.
class InteriorPoint {
 public:
  InteriorPoint(const ScaledProblem& s, const std::vector<RowKind>& kinds) : s_(s) {
    for (Eigen::Index i = 0; i < s_.A.rows(); ++i) {
      switch (kinds[static_cast<std::size_t>(i)]) {
        case RowKind::Equality: eq_rows_.push_back(i); break;
        case RowKind::Inequality: in_rows_.push_back(i); break;
        case RowKind::Loose: break;
      }
    }
    Aeq_ = select_rows(eq_rows_);
    Ain_ = select_rows(in_rows_);
    AinT_ = Ain_.transpose();
    AeqT_ = Aeq_.transpose();
    b_.resize(static_cast<Eigen::Index>(eq_rows_.size()));
    for (std::size_t r = 0; r < eq_rows_.size(); ++r) b_(static_cast<Eigen::Index>(r)) = s_.l(eq_rows_[r]);
    const auto p = static_cast<Eigen::Index>(in_rows_.size());
    lo_.resize(p);
    hi_.resize(p);
    has_lo_.assign(static_cast<std::size_t>(p), 0);
    has_hi_.assign(static_cast<std::size_t>(p), 0);
    for (Eigen::Index r = 0; r < p; ++r) {
      const auto i = in_rows_[static_cast<std::size_t>(r)];
      lo_(r) = s_.l(i);
      hi_(r) = s_.u(i);
      has_lo_[static_cast<std::size_t>(r)] = s_.l(i) > -kInfinity;
      has_hi_[static_cast<std::size_t>(r)] = s_.u(i) < kInfinity;
    }
  }

  std::optional<Outcome> run(const Vector& x0, const QpSettings& settings) {
    constexpr double kStepFraction = 0.99;
    constexpr double kReg = 1e-9;
    const Eigen::Index n = s_.P.cols();
    const auto p = Ain_.rows();
    const auto me = Aeq_.rows();
    const auto mask = [](const std::vector<char>& v) {
      Vector m(static_cast<Eigen::Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i)) = v[i] ? 1.0 : 0.0;
      return m;
    };
    const Vector mlo = mask(has_lo_);
    const Vector mhi = mask(has_hi_);
    const double n_bounds = std::max(1.0, mlo.sum() + mhi.sum());

    Vector x = x0;
    Vector y = Vector::Zero(me);
    // Slacks sl = a x - lo, sh = hi - a x; inactive sides are pinned to 1 with zero dual.
    const Vector ax0 = Ain_ * x;
    Vector sl = mlo.cwiseProduct((ax0 - lo_.cwiseProduct(mlo)).cwiseMax(1.0)) + (Vector::Ones(p) - mlo);
    Vector sh = mhi.cwiseProduct((hi_.cwiseProduct(mhi) - ax0).cwiseMax(1.0)) + (Vector::Ones(p) - mhi);
    Vector zl = mlo;
    Vector zh = mhi;
    const Vector lo = lo_.cwiseProduct(mlo);
    const Vector hi = hi_.cwiseProduct(mhi);

    bool analyzed = false;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    SparseMatrix K;

    for (int k = 1; k <= kMaxIterations; ++k) {
      const Vector ax = Ain_ * x;
      const Vector rd = s_.P * x + s_.q + AeqT_ * y + AinT_ * (zh - zl);
      const Vector re = Aeq_ * x - b_;
      const Vector rl = mlo.cwiseProduct(ax - sl - lo);
      const Vector rh = mhi.cwiseProduct(ax + sh - hi);
      const double mu = (sl.cwiseProduct(zl).dot(mlo) + sh.cwiseProduct(zh).dot(mhi)) / n_bounds;

      const Iterate it = current(x, y, zl, zh);
      const Residuals res = compute_residuals(s_, it.x, it.z, it.y, settings);
      if (res.converged() && mu / s_.c < 0.1 * std::min(res.eps_primal, res.eps_dual)) {
        Outcome out;
        out.sol = it;
        out.res = res;
        out.status = QpStatus::Optimal;
        out.iterations = k;
        return out;
      }
      if (!x.allFinite() || mu > 1e20) return std::nullopt;

      // Diagonal weights of the condensed system.
      const Vector wl = mlo.cwiseProduct(zl.cwiseQuotient(sl));
      const Vector wh = mhi.cwiseProduct(zh.cwiseQuotient(sh));
      const Vector w = wl + wh;
      K = assemble(w, kReg);
      if (!analyzed) {
        ldlt.analyzePattern(K);
        analyzed = true;
      }
      ldlt.factorize(K);
      if (ldlt.info() != Eigen::Success) return std::nullopt;

      // Solves for a complementarity target rcl = sl zl - t, rch = sh zh - t.
      auto direction = [&](const Vector& rcl, const Vector& rch, Vector& dx, Vector& dy,
                           Vector& dsl, Vector& dsh, Vector& dzl, Vector& dzh) {
        // dsl = a dx + rl and dsh = -a dx - rh; dzl = -(rcl + zl dsl) / sl and
        // dzh = -(rch + zh dsh) / sh.
        const Vector tl = mlo.cwiseProduct((rcl + zl.cwiseProduct(rl)).cwiseQuotient(sl));
        const Vector th = mhi.cwiseProduct((rch - zh.cwiseProduct(rh)).cwiseQuotient(sh));
        Vector rhs(n + me);
        rhs.head(n) = -rd - AinT_ * (tl - th);
        rhs.tail(me) = -re;
        Vector sol = ldlt.solve(rhs);
        for (int ref = 0; ref < 3; ++ref) {
          Vector r(n + me);
          r.head(n) = rhs.head(n) - (s_.P * sol.head(n) + AinT_ * w.cwiseProduct(Ain_ * sol.head(n)) +
                                     AeqT_ * sol.tail(me));
          r.tail(me) = rhs.tail(me) - Aeq_ * sol.head(n);
          if (inf_norm(r) < 1e-14 * std::max(1.0, inf_norm(rhs))) break;
          sol += ldlt.solve(r);
        }
        dx = sol.head(n);
        dy = sol.tail(me);
        const Vector adx = Ain_ * dx;
        dsl = mlo.cwiseProduct(adx + rl);
        dsh = mhi.cwiseProduct(-adx - rh);
        dzl = mlo.cwiseProduct(-(rcl + zl.cwiseProduct(dsl)).cwiseQuotient(sl));
        dzh = mhi.cwiseProduct(-(rch + zh.cwiseProduct(dsh)).cwiseQuotient(sh));
      };
      auto max_step = [&](const Vector& v, const Vector& dv, const Vector& m) {
        double a = 1.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
          if (m(i) > 0.0 && dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
        }
        return a;
      };

      Vector dx, dy, dsl, dsh, dzl, dzh;
      const Vector cl = sl.cwiseProduct(zl).cwiseProduct(mlo);
      const Vector ch = sh.cwiseProduct(zh).cwiseProduct(mhi);
      direction(cl, ch, dx, dy, dsl, dsh, dzl, dzh);
      const double ap_aff = std::min(max_step(sl, dsl, mlo), max_step(sh, dsh, mhi));
      const double ad_aff = std::min(max_step(zl, dzl, mlo), max_step(zh, dzh, mhi));
      const double mu_aff = ((sl + ap_aff * dsl).cwiseProduct(zl + ad_aff * dzl).dot(mlo) +
                             (sh + ap_aff * dsh).cwiseProduct(zh + ad_aff * dzh).dot(mhi)) /
                            n_bounds;
      const double sigma = std::pow(std::clamp(mu_aff / std::max(mu, 1e-300), 0.0, 1.0), 3);
      const Vector target = Vector::Constant(p, sigma * mu);
      const Vector cl2 = mlo.cwiseProduct(cl + dsl.cwiseProduct(dzl) - target);
      const Vector ch2 = mhi.cwiseProduct(ch + dsh.cwiseProduct(dzh) - target);
      direction(cl2, ch2, dx, dy, dsl, dsh, dzl, dzh);
      const double ap = std::min(1.0, kStepFraction * std::min(max_step(sl, dsl, mlo), max_step(sh, dsh, mhi)));
      const double ad = std::min(1.0, kStepFraction * std::min(max_step(zl, dzl, mlo), max_step(zh, dzh, mhi)));
      x += ap * dx;
      sl += ap * dsl;
      sh += ap * dsh;
      y += ad * dy;
      zl += ad * dzl;
      zh += ad * dzh;
    }
    return std::nullopt;
  }

 private:
  static constexpr int kMaxIterations = 100;

  SparseMatrix select_rows(const std::vector<Eigen::Index>& rows) const {
    std::vector<Eigen::Index> row_of(static_cast<std::size_t>(s_.A.rows()), -1);
    for (std::size_t r = 0; r < rows.size(); ++r) row_of[static_cast<std::size_t>(rows[r])] = static_cast<Eigen::Index>(r);
    std::vector<Eigen::Triplet<double>> t;
    for (Eigen::Index j = 0; j < s_.A.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator a(s_.A, j); a; ++a) {
        const auto r = row_of[static_cast<std::size_t>(a.row())];
        if (r >= 0) t.emplace_back(r, a.col(), a.value());
      }
    }
    SparseMatrix out(static_cast<Eigen::Index>(rows.size()), s_.A.cols());
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }

  SparseMatrix assemble(const Vector& w, double reg) const {
    const Eigen::Index n = s_.P.cols();
    const auto me = Aeq_.rows();
    const SparseMatrix H = s_.P + SparseMatrix(AinT_ * w.asDiagonal() * Ain_);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(H.nonZeros() + 2 * Aeq_.nonZeros() + n + me));
    for (Eigen::Index j = 0; j < H.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator a(H, j); a; ++a) t.emplace_back(a.row(), a.col(), a.value());
    }
    for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, reg);
    for (Eigen::Index j = 0; j < Aeq_.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator a(Aeq_, j); a; ++a) {
        t.emplace_back(n + a.row(), a.col(), a.value());
        t.emplace_back(a.col(), n + a.row(), a.value());
      }
    }
    for (Eigen::Index r = 0; r < me; ++r) t.emplace_back(n + r, n + r, -reg);
    SparseMatrix K(n + me, n + me);
    K.setFromTriplets(t.begin(), t.end());
    K.makeCompressed();
    return K;
  }

  // Maps the interior point variables onto the (x, z, y) form used for residuals.
  Iterate current(const Vector& x, const Vector& y, const Vector& zl, const Vector& zh) const {
    Iterate it;
    it.x = x;
    it.z = (s_.A * x).cwiseMax(s_.l).cwiseMin(s_.u);
    it.y = Vector::Zero(s_.A.rows());
    for (std::size_t r = 0; r < eq_rows_.size(); ++r) it.y(eq_rows_[r]) = y(static_cast<Eigen::Index>(r));
    for (std::size_t r = 0; r < in_rows_.size(); ++r) {
      const auto i = static_cast<Eigen::Index>(r);
      it.y(in_rows_[r]) = zh(i) - zl(i);
    }
    return it;
  }

  const ScaledProblem& s_;
  std::vector<Eigen::Index> eq_rows_;
  std::vector<Eigen::Index> in_rows_;
  SparseMatrix Aeq_, AeqT_, Ain_, AinT_;
  Vector b_, lo_, hi_;
  std::vector<char> has_lo_, has_hi_;
};

}  // namespace

std::string_view to_string(QpMethod m) {
  switch (m) {
    case QpMethod::InteriorPoint: return "interior_point";
    case QpMethod::Admm: return "admm";
  }
  return "unknown";
}

QpSolution solve(const QpProblem& problem, const std::optional<Vector>& warm_start,
                 const QpSettings& settings) {
  problem.validate();
  const Eigen::Index n = problem.n_vars();
  const Eigen::Index m_eq = problem.A_eq.rows();

  const SparseMatrix A0 = vstack(problem.A_eq, problem.A_in, n);
  Vector l0(A0.rows());
  Vector u0(A0.rows());
  l0 << problem.b_eq, problem.l_in.cwiseMax(-kInfinity);
  u0 << problem.b_eq, problem.u_in.cwiseMin(kInfinity);

  // Only the lower triangle of H is read by the factorization; symmetrize explicitly.
  SparseMatrix P0 = 0.5 * (problem.H + SparseMatrix(problem.H.transpose()));
  const ScaledProblem s = scale_problem(P0, problem.g, A0, l0, u0, settings.scaling_iterations);

  Vector x0 = Vector::Zero(n);
  if (warm_start && warm_start->size() == n) x0 = s.D.cwiseInverse().cwiseProduct(*warm_start);

  std::optional<Outcome> result;
  int ipm_iterations = 0;
  if (settings.method == QpMethod::InteriorPoint) {
    InteriorPoint ipm(s, classify_rows(s));
    result = ipm.run(x0, settings);
    if (!result) {
      ipm_iterations = 100;
    } else if (settings.polish) {
      // Bounds where both the gap and the multiplier vanish are approached only at the rate
      // of sqrt(mu); the active-set solve lands on them exactly.
      if (auto pol = polish(s, result->sol, classify_rows(s), settings)) {
        result->sol = pol->first;
        result->res = pol->second;
        result->polished = true;
      }
    }
  }
  // The first-order method also serves as the infeasibility certificate when the interior
  // point iteration fails.
  if (!result) {
    result = run_admm(s, x0, settings);
    result->iterations += ipm_iterations;
  }

  QpSolution out;
  out.primal = s.D.cwiseProduct(result->sol.x);
  const Vector y = s.E.cwiseProduct(result->sol.y) / s.c;
  out.dual_eq = y.head(m_eq);
  out.dual_in = y.tail(y.size() - m_eq);
  out.objective = problem.objective(out.primal);
  out.status = result->status;
  out.iterations = result->iterations;
  out.primal_residual = result->res.primal;
  out.dual_residual = result->res.dual;
  out.polished = result->polished;
  out.method = settings.method == QpMethod::InteriorPoint && ipm_iterations == 0
                   ? QpMethod::InteriorPoint
                   : QpMethod::Admm;
  return out;
}

void write_matrix_market(const QpProblem& problem, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  auto write_matrix = [&](const SparseMatrix& m, const char* name) {
    if (!Eigen::saveMarket(m, (directory / name).string())) {
      throw std::runtime_error(std::string("failed to write ") + name);
    }
  };
  auto write_vector = [&](const Vector& v, const char* name) {
    std::ofstream os(directory / name);
    if (!os) throw std::runtime_error(std::string("failed to write ") + name);
    os << "%%MatrixMarket matrix array real general\n" << v.size() << " 1\n";
    os.precision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i) os << v(i) << '\n';
  };
  write_matrix(problem.H, "H.mtx");
  write_matrix(problem.A_eq, "A_eq.mtx");
  write_matrix(problem.A_in, "A_in.mtx");
  write_vector(problem.g, "g.mtx");
  write_vector(problem.b_eq, "b_eq.mtx");
  write_vector(problem.l_in.cwiseMax(-kInfinity), "l_in.mtx");
  write_vector(problem.u_in.cwiseMin(kInfinity), "u_in.mtx");
}

}  // namespace stopt::qp
