#include "absnf/lp.hpp"

#include <limits>
#include <vector>

#include "absnf/errors.hpp"

namespace absnf {

FeasibilityResult solve_feasibility(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol) {
  const Eigen::Index m = A.rows();
  const Eigen::Index k = A.cols();
  if (b.size() != m) throw ValidationError("LP right-hand side has the wrong length");
  constexpr double kPivotEps = 1e-12;

  // Columns: k structural, m artificial, 1 right-hand side.
  const Eigen::Index rhs = k + m;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, k + m + 1);
  Eigen::VectorXd flip = Eigen::VectorXd::Ones(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    if (b[r] < 0) flip[r] = -1.0;
    T.row(r).head(k) = flip[r] * A.row(r);
    T(r, k + r) = 1.0;
    T(r, rhs) = flip[r] * b[r];
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r) basis[static_cast<std::size_t>(r)] = k + r;

  // Reduced costs of min sum(artificials), basis = artificials.
  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(k + m + 1);
  for (Eigen::Index j = 0; j < k; ++j) cost[j] = -T.col(j).sum();
  cost[rhs] = -T.col(rhs).sum();

  const std::size_t max_iter = 50 * static_cast<std::size_t>(k + m) + 1000;
  for (std::size_t iter = 0;; ++iter) {
    if (iter > max_iter) throw NumericalError("simplex iteration limit reached");
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < k + m; ++j) {
      if (cost[j] < -kPivotEps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < m; ++r) {
      const double t = T(r, enter);
      if (t <= kPivotEps) continue;
      const double ratio = T(r, rhs) / t;
      if (ratio < best - kPivotEps ||
          (ratio <= best + kPivotEps && leave >= 0 &&
           basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
        best = std::min(best, ratio);
        leave = r;
      }
    }
    if (leave < 0) throw NumericalError("phase-one LP reported unbounded");
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index r = 0; r < m; ++r) {
      if (r != leave && T(r, enter) != 0.0) T.row(r) -= T(r, enter) * T.row(leave);
    }
    cost -= cost[enter] * T.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  FeasibilityResult res;
  res.infeasibility = -cost[rhs];
  res.feasible = res.infeasibility <= tol;
  res.x = Eigen::VectorXd::Zero(k);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index j = basis[static_cast<std::size_t>(r)];
    if (j < k) res.x[j] = T(r, rhs);
  }
  // Artificial column r has cost 1, so its reduced cost is 1 - y_r.
  res.dual.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) res.dual[r] = flip[r] * (1.0 - cost[k + r]);
  return res;
}

}  // namespace absnf
