#pragma once

#include <Eigen/Dense>

namespace absnf {

struct FeasibilityResult {
  bool feasible = false;
  // Optimal phase-one objective: sum of artificial variables, i.e. the L1
  // residual ||A x - b||_1 of the best x >= 0 found.
  double infeasibility = 0.0;
  Eigen::VectorXd x;
  // Multipliers y of the phase-one optimum. When infeasible they form a
  // Farkas certificate: y^T A <= 0 and y^T b = infeasibility > 0.
  Eigen::VectorXd dual;
};

// Dense tableau phase-one simplex with Bland's rule for {x >= 0 : A x = b}.
// Intended for desk-scale problems (tens of rows, thousands of columns).
FeasibilityResult solve_feasibility(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                    double tol = 1e-9);

}  // namespace absnf
