#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "absnf/absnormal.hpp"

namespace absnf {

inline constexpr double kDefaultRankTol = 1e-9;

// A choice of d|.|(z_bar) for every switch: xi_i in [-1, 1] on the active
// set, xi_i = sigma_bar_i everywhere else.
class XiChoice {
 public:
  // Rejects entries outside [-1, 1] and entries that differ from sigma_bar
  // at an inactive index.
  static XiChoice make(const Signature& sigma_bar, Eigen::VectorXd xi);
  // The same value at every active index (the usual AD-tool convention).
  static XiChoice at_kinks(const Signature& sigma_bar, double value);

  const Eigen::VectorXd& values() const { return xi_; }
  std::size_t size() const { return static_cast<std::size_t>(xi_.size()); }

 private:
  explicit XiChoice(Eigen::VectorXd xi) : xi_(std::move(xi)) {}
  Eigen::VectorXd xi_;
};

// y = (I - M - L W)^{-T} (W b + d) for W = diag(weights), by the explicit
// back-recursion over the strictly lower triangular structure.
Eigen::VectorXd switching_adjoint(const AbsNormalPoint& p, const Eigen::VectorXd& weights);

// (I - L W - M)^{-1} Z by forward substitution; this is D z_W[x].
Eigen::MatrixXd switching_jacobian(const AbsNormalPoint& p, const Eigen::VectorXd& weights);

// Gradient of the smooth selection phi_sigma at the anchor, a + Z^T y_sigma.
// Requires sigma >= p.sigma.
Eigen::VectorXd grad_sigma(const AbsNormalPoint& p, const Signature& sigma);

// Gradient of phi_xi at the anchor, a + Z^T y_xi.
Eigen::VectorXd grad_xi(const AbsNormalPoint& p, const XiChoice& xi);

struct BetaTerm {
  Signature sigma;
  double beta = 0.0;
};

// beta_{sigma,xi} = prod_{i in alpha} (sigma_i xi_i + 1) / 2 over the definite
// successors of sigma_bar, in enumeration order.
std::vector<BetaTerm> beta_coefficients(const Signature& sigma_bar, const XiChoice& xi,
                                        std::size_t cap = kDefaultEnumerationCap);

// Number of singular values above rank_tol * sigma_max.
std::size_t numerical_rank(const Eigen::MatrixXd& m, double rank_tol = kDefaultRankTol);

struct LikqReport {
  bool holds = true;
  std::size_t rank = 0;
  std::size_t active = 0;
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd matrix;  // P_alpha (I - L Sigma - M)^{-1} Z

  // "holds: rank 2 = 2" or "fails: rank 2 < 3".
  std::string summary() const;
};

LikqReport check_likq(const AbsNormalPoint& p, double rank_tol = kDefaultRankTol);

struct RankStabilityReport {
  std::size_t required = 0;  // |alpha|
  std::vector<std::pair<Signature, std::size_t>> ranks;
  bool all_full = true;
};

// Rank of P_alpha (I - L Sigma - M)^{-1} Z for every sigma >= sigma_bar
// (entries -1, 0, 1 on alpha). Throws CapExceeded when 3^|alpha| > cap, and
// NumericalError if the outcome disagrees with check_likq.
RankStabilityReport check_rank_stability(const AbsNormalPoint& p,
                                         double rank_tol = kDefaultRankTol,
                                         std::size_t cap = kDefaultEnumerationCap);

enum class Likq { Holds, Fails, Unknown };
const char* likq_name(Likq l);

struct GradientEntry {
  Signature signature;
  Eigen::VectorXd gradient;
  std::size_t count = 1;  // samples merged into this entry (sampling only)
};

struct GradientSet {
  Eigen::VectorXd anchor;
  std::vector<GradientEntry> gradients;
  Likq likq = Likq::Unknown;
  std::string label;

  std::size_t n() const { return static_cast<std::size_t>(anchor.size()); }
};

// grad_sigma over every definite successor of sigma_bar. When LIKQ fails the
// set is labelled as a candidate set.
GradientSet limiting_gradients(const AbsNormalPoint& p, std::size_t cap = kDefaultEnumerationCap,
                               double rank_tol = kDefaultRankTol);

// d_sigma = (P_alpha (I - L Sigma - M)^{-1} Z)^+ P_alpha sigma via SVD.
Eigen::VectorXd essential_direction(const AbsNormalPoint& p, const Signature& sigma,
                                    double rank_tol = kDefaultRankTol);

// Evaluates sign(z[x_bar + eps d_sigma]) on the tape and compares it with
// sigma. Throws PreconditionError when LIKQ does not hold at p.
bool verify_essential_direction(const AbsNormalPoint& p, const Tape& tape, const Signature& sigma,
                                double eps, double rank_tol = kDefaultRankTol);

struct HullResult {
  bool inside = false;
  double residual = 0.0;          // L1 infeasibility of the phase-one LP
  Eigen::VectorXd coefficients;   // convex weights, when inside
  Eigen::VectorXd normal;         // unit normal, when outside
  double offset = 0.0;            // normal . g_i <= offset for every member
  double margin = 0.0;            // normal . g - max_i normal . g_i
};

HullResult hull_membership(const GradientSet& gset, const Eigen::VectorXd& g, double tol = 1e-9);

std::string to_json(const GradientSet& gset);
// Header sigma_1..sigma_s,g_1..g_n; one row per gradient.
std::string to_csv(const GradientSet& gset);

}  // namespace absnf
