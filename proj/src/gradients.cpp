#include "absnf/gradients.hpp"

#include <cmath>
#include <limits>

#include "absnf/errors.hpp"
#include "absnf/lp.hpp"

namespace absnf {

XiChoice XiChoice::make(const Signature& sigma_bar, Eigen::VectorXd xi) {
  if (static_cast<std::size_t>(xi.size()) != sigma_bar.size()) {
    throw ValidationError("xi has length " + std::to_string(xi.size()) + ", expected " +
                          std::to_string(sigma_bar.size()));
  }
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    if (!(std::abs(xi[i]) <= 1.0)) throw ValidationError("xi entries must lie in [-1, 1]");
    const int sb = sigma_bar[static_cast<std::size_t>(i)];
    if (sb != 0 && xi[i] != sb) {
      throw ValidationError("xi_" + std::to_string(i) + " = " + std::to_string(xi[i]) +
                            " differs from the signature " + std::to_string(sb) +
                            " at an inactive switch");
    }
  }
  return XiChoice(std::move(xi));
}

XiChoice XiChoice::at_kinks(const Signature& sigma_bar, double value) {
  if (!(std::abs(value) <= 1.0)) throw ValidationError("kink policy must lie in [-1, 1]");
  Eigen::VectorXd xi = sigma_bar.as_vector();
  for (std::size_t i : sigma_bar.active()) xi[static_cast<Eigen::Index>(i)] = value;
  return XiChoice(std::move(xi));
}

Eigen::VectorXd switching_adjoint(const AbsNormalPoint& p, const Eigen::VectorXd& weights) {
  const Eigen::Index s = p.z.size();
  if (weights.size() != s) throw ValidationError("weight vector length mismatch");
  Eigen::VectorXd y(s);
  for (Eigen::Index k = s - 1; k >= 0; --k) {
    double acc = weights[k] * p.b[k] + p.d[k];
    for (Eigen::Index j = k + 1; j < s; ++j) {
      acc += (p.M(j, k) + p.L(j, k) * weights[k]) * y[j];
    }
    y[k] = acc;
  }
  return y;
}

Eigen::MatrixXd switching_jacobian(const AbsNormalPoint& p, const Eigen::VectorXd& weights) {
  const Eigen::Index s = p.z.size();
  if (weights.size() != s) throw ValidationError("weight vector length mismatch");
  Eigen::MatrixXd X = p.Z;
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double c = p.L(i, j) * weights[j] + p.M(i, j);
      if (c != 0.0) X.row(i) += c * X.row(j);
    }
  }
  return X;
}

Eigen::VectorXd grad_sigma(const AbsNormalPoint& p, const Signature& sigma) {
  if (!precedes(p.sigma, sigma)) {
    throw ValidationError("signature " + sigma.str() + " does not succeed " + p.sigma.str());
  }
  return p.a + p.Z.transpose() * switching_adjoint(p, sigma.as_vector());
}

Eigen::VectorXd grad_xi(const AbsNormalPoint& p, const XiChoice& xi) {
  if (xi.size() != p.s()) throw ValidationError("xi length does not match the switch count");
  const Eigen::VectorXd& v = xi.values();
  for (std::size_t i = 0; i < p.s(); ++i) {
    const int sb = p.sigma[i];
    if (sb != 0 && v[static_cast<Eigen::Index>(i)] != sb) {
      throw ValidationError("xi inconsistent with the signature at inactive switch " +
                            std::to_string(i));
    }
  }
  return p.a + p.Z.transpose() * switching_adjoint(p, v);
}

std::vector<BetaTerm> beta_coefficients(const Signature& sigma_bar, const XiChoice& xi,
                                        std::size_t cap) {
  if (xi.size() != sigma_bar.size()) throw ValidationError("xi length mismatch");
  const auto alpha = sigma_bar.active();
  std::vector<BetaTerm> out;
  for (auto& sig : definite_successors(sigma_bar, cap)) {
    double beta = 1.0;
    for (std::size_t i : alpha) beta *= (sig[i] * xi.values()[static_cast<Eigen::Index>(i)] + 1.0) / 2.0;
    out.push_back({std::move(sig), beta});
  }
  return out;
}

std::size_t numerical_rank(const Eigen::MatrixXd& m, double rank_tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  if (!(smax > 0.0)) return 0;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > rank_tol * smax) ++r;
  }
  return r;
}

namespace {

Eigen::MatrixXd active_rows(const Eigen::MatrixXd& X, const std::vector<std::size_t>& alpha) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(alpha.size()), X.cols());
  for (std::size_t r = 0; r < alpha.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(alpha[r]));
  }
  return out;
}

}  // namespace

std::string LikqReport::summary() const {
  if (holds) return "holds: rank " + std::to_string(rank) + " = " + std::to_string(active);
  return "fails: rank " + std::to_string(rank) + " < " + std::to_string(active);
}

LikqReport check_likq(const AbsNormalPoint& p, double rank_tol) {
  LikqReport rep;
  rep.active = p.alpha.size();
  rep.matrix = active_rows(switching_jacobian(p, p.sigma.as_vector()), p.alpha);
  if (rep.matrix.rows() > 0 && rep.matrix.cols() > 0) {
    rep.singular_values = Eigen::JacobiSVD<Eigen::MatrixXd>(rep.matrix).singularValues();
  } else {
    rep.singular_values = Eigen::VectorXd(0);
  }
  rep.rank = numerical_rank(rep.matrix, rank_tol);
  rep.holds = rep.rank == rep.active;
  return rep;
}

RankStabilityReport check_rank_stability(const AbsNormalPoint& p, double rank_tol,
                                         std::size_t cap) {
  const auto& alpha = p.alpha;
  std::size_t count = 1;
  for (std::size_t r = 0; r < alpha.size(); ++r) {
    if (count > cap / 3) throw CapExceeded("3^" + std::to_string(alpha.size()) + " signatures exceed the cap " + std::to_string(cap));
    count *= 3;
  }
  if (count > cap) throw CapExceeded("signature count exceeds the cap " + std::to_string(cap));

  RankStabilityReport rep;
  rep.required = alpha.size();
  for (std::size_t code = 0; code < count; ++code) {
    Signature sig = p.sigma;
    std::size_t c = code;
    for (std::size_t r = alpha.size(); r-- > 0;) {
      sig.set(alpha[r], static_cast<int>(c % 3) - 1);
      c /= 3;
    }
    const std::size_t rank =
        numerical_rank(active_rows(switching_jacobian(p, sig.as_vector()), alpha), rank_tol);
    if (rank != rep.required) rep.all_full = false;
    rep.ranks.emplace_back(std::move(sig), rank);
  }
  if (check_likq(p, rank_tol).holds != rep.all_full) {
    throw NumericalError("rank stability disagrees with the LIKQ check at the anchor");
  }
  return rep;
}

const char* likq_name(Likq l) {
  switch (l) {
    case Likq::Holds: return "holds";
    case Likq::Fails: return "fails";
    default: return "unknown";
  }
}

GradientSet limiting_gradients(const AbsNormalPoint& p, std::size_t cap, double rank_tol) {
  GradientSet set;
  set.anchor = p.x;
  for (auto& sig : definite_successors(p.sigma, cap)) {
    Eigen::VectorXd g = grad_sigma(p, sig);
    set.gradients.push_back({std::move(sig), std::move(g), 1});
  }
  if (check_likq(p, rank_tol).holds) {
    set.likq = Likq::Holds;
    set.label = "limiting gradients";
  } else {
    set.likq = Likq::Fails;
    set.label = "candidate set, may contain spurious gradients";
  }
  return set;
}

Eigen::VectorXd essential_direction(const AbsNormalPoint& p, const Signature& sigma,
                                    double rank_tol) {
  if (!sigma.definite() || !precedes(p.sigma, sigma)) {
    throw ValidationError("essential direction needs a definite successor of " + p.sigma.str());
  }
  const Eigen::MatrixXd B = active_rows(switching_jacobian(p, sigma.as_vector()), p.alpha);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(p.alpha.size()));
  for (std::size_t r = 0; r < p.alpha.size(); ++r) rhs[static_cast<Eigen::Index>(r)] = sigma[p.alpha[r]];
  if (B.rows() == 0) return Eigen::VectorXd::Zero(p.x.size());

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = rank_tol * (sv.size() ? sv[0] : 0.0);
  Eigen::VectorXd coeff = svd.matrixU().transpose() * rhs;
  for (Eigen::Index i = 0; i < sv.size(); ++i) coeff[i] = sv[i] > cutoff ? coeff[i] / sv[i] : 0.0;
  return svd.matrixV() * coeff;
}

bool verify_essential_direction(const AbsNormalPoint& p, const Tape& tape, const Signature& sigma,
                                double eps, double rank_tol) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (!check_likq(p, rank_tol).holds) throw PreconditionError("LIKQ does not hold at the anchor");
  const Eigen::VectorXd x = p.x + eps * essential_direction(p, sigma, rank_tol);
  const EvalTrace tr =
      forward_eval(tape, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  return Signature::of(tr.z) == sigma;
}

HullResult hull_membership(const GradientSet& gset, const Eigen::VectorXd& g, double tol) {
  if (gset.gradients.empty()) throw ValidationError("hull of an empty gradient set");
  const Eigen::Index n = g.size();
  const auto m = static_cast<Eigen::Index>(gset.gradients.size());
  Eigen::MatrixXd A(n + 1, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& gj = gset.gradients[static_cast<std::size_t>(j)].gradient;
    if (gj.size() != n) throw ValidationError("gradient dimension mismatch");
    A.col(j).head(n) = gj;
    A(n, j) = 1.0;
  }
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = g;
  rhs[n] = 1.0;

  const FeasibilityResult lp = solve_feasibility(A, rhs, tol);
  HullResult res;
  res.inside = lp.feasible;
  res.residual = lp.infeasibility;
  if (res.inside) {
    res.coefficients = lp.x;
    return res;
  }
  // Farkas multipliers (w, y0): y0 + w.g_i <= 0 < y0 + w.g.
  Eigen::VectorXd w = lp.dual.head(n);
  const double norm = w.norm();
  if (!(norm > 0.0)) throw NumericalError("degenerate separation certificate");
  res.normal = w / norm;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : gset.gradients) best = std::max(best, res.normal.dot(e.gradient));
  res.offset = best;
  res.margin = res.normal.dot(g) - best;
  if (!(res.margin > 0.0)) throw NumericalError("separation certificate does not separate");
  return res;
}

}  // namespace absnf
