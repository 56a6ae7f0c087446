#include <gtest/gtest.h>

#include <map>

#include "absnf/errors.hpp"
#include "absnf/gradients.hpp"
#include "absnf/oracle.hpp"
#include "absnf/presets.hpp"
#include "absnf/problems.hpp"
#include "absnf/random.hpp"
#include "absnf/verify.hpp"

using namespace absnf;

namespace {

const std::vector<double> kOrigin{0.0, 0.0};

AbsNormalPoint phimu_point(double mu) { return extract(phimu_tape(mu), kOrigin); }

Eigen::Vector2d phimu_formula(const Signature& s, double mu) {
  return {s[0] - s[1], s[1] - mu * s[2]};
}

GradientSet from_vectors(const std::vector<Eigen::Vector2d>& gs) {
  GradientSet set;
  set.anchor = Eigen::Vector2d::Zero();
  for (const auto& g : gs) set.gradients.push_back({Signature{}, g, 1});
  return set;
}

}  // namespace

TEST(GradSigma, PhiMuPieces) {
  const AbsNormalPoint p = phimu_point(1.0);
  EXPECT_EQ(grad_sigma(p, Signature{1, -1, 1}), Eigen::Vector2d(2.0, -2.0));
  EXPECT_EQ(grad_sigma(p, Signature{1, 1, 1}), Eigen::Vector2d(0.0, 0.0));
  for (double mu : {1.0, 0.0, -1.0, 0.5}) {
    const AbsNormalPoint q = phimu_point(mu);
    for (const Signature& s : definite_successors(q.sigma)) {
      EXPECT_EQ(grad_sigma(q, s), phimu_formula(s, mu)) << s.str();
    }
  }
}

TEST(GradSigma, RejectsNonSuccessors) {
  const AbsNormalPoint p = extract(phimu_tape(1.0), std::vector<double>{0.5, 0.25});
  EXPECT_THROW(grad_sigma(p, Signature{-1, -1, -1}), ValidationError);
}

TEST(GradSigma, SmoothPointMatchesFiniteDifferences) {
  const Tape t = phimu_tape(1.0);
  const std::vector<double> x{0.3, 0.1};
  const AbsNormalPoint p = extract(t, x);
  EXPECT_LE((grad_sigma(p, p.sigma) - fd_gradient(t, x)).norm(), 1e-6);
}

TEST(GradXi, SymmetricCancellation) {
  for (double mu : {1.0, 0.0, -1.0}) {
    const AbsNormalPoint p = phimu_point(mu);
    EXPECT_TRUE(grad_xi(p, XiChoice::make(p.sigma, Eigen::Vector3d::Zero())).isZero(0.0));
  }
}

TEST(GradXi, DefiniteXiIsGradSigma) {
  const AbsNormalPoint p = phimu_point(-1.0);
  for (const Signature& s : definite_successors(p.sigma)) {
    EXPECT_EQ(grad_xi(p, XiChoice::make(p.sigma, s.as_vector())), grad_sigma(p, s));
  }
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const AbsNormalPoint q = random_abs_normal_point(rng, {});
    for (const Signature& s : definite_successors(q.sigma)) {
      EXPECT_EQ(grad_xi(q, XiChoice::make(q.sigma, s.as_vector())), grad_sigma(q, s));
    }
  }
}

TEST(GradXi, RejectsInconsistentXi) {
  const AbsNormalPoint p = extract(phimu_tape(1.0), std::vector<double>{0.5, 0.25});
  EXPECT_THROW(XiChoice::make(p.sigma, Eigen::Vector3d(0.0, -1.0, -1.0)), ValidationError);
  EXPECT_THROW(XiChoice::make(phimu_point(1.0).sigma, Eigen::Vector3d(0.0, 1.5, 0.0)), ValidationError);
  EXPECT_THROW(XiChoice::at_kinks(p.sigma, -2.0), ValidationError);
}

TEST(Beta, UniformAtZero) {
  const Signature sb{0, 0, 0};
  const auto terms = beta_coefficients(sb, XiChoice::make(sb, Eigen::Vector3d::Zero()));
  ASSERT_EQ(terms.size(), 8u);
  for (const auto& t : terms) EXPECT_EQ(t.beta, 0.125);
}

TEST(Beta, DegenerateVertex) {
  const Signature sb{0};
  const auto terms = beta_coefficients(sb, XiChoice::make(sb, Eigen::VectorXd::Ones(1)));
  ASSERT_EQ(terms.size(), 2u);
  EXPECT_EQ(terms[0].sigma, Signature({-1}));
  EXPECT_EQ(terms[0].beta, 0.0);
  EXPECT_EQ(terms[1].beta, 1.0);
}

TEST(Beta, ProductFormula) {
  const Signature sb{0, 0};
  const auto terms = beta_coefficients(sb, XiChoice::make(sb, Eigen::Vector2d(0.5, -0.5)));
  std::map<Signature, double> beta;
  for (const auto& t : terms) beta[t.sigma] = t.beta;
  EXPECT_EQ(beta.at(Signature({1, 1})), 0.1875);
  EXPECT_EQ(beta.at(Signature({1, -1})), 0.5625);
  EXPECT_EQ(beta.at(Signature({-1, 1})), 0.0625);
  EXPECT_EQ(beta.at(Signature({-1, -1})), 0.1875);
}

TEST(ConvexCombination, RandomInstances) {
  const SuiteReport r = verify_convex_combination(60, 2);
  EXPECT_TRUE(r.passed) << r.summary();
  EXPECT_EQ(r.instances, 60u);
}

TEST(Likq, PhiMuFails) {
  const LikqReport r = check_likq(phimu_point(1.0));
  EXPECT_FALSE(r.holds);
  EXPECT_EQ(r.rank, 2u);
  EXPECT_EQ(r.active, 3u);
  EXPECT_EQ(r.summary(), "fails: rank 2 < 3");
  EXPECT_EQ(r.matrix, phimu_point(1.0).Z);
  EXPECT_EQ(r.singular_values.size(), 2);
}

TEST(Likq, AbsAtZeroHolds) {
  TapeBuilder tb(1);
  const Tape t = tb.build(tb.abs(tb.input(0)));
  const LikqReport r = check_likq(extract(t, std::vector<double>{0.0}));
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.matrix, Eigen::MatrixXd::Ones(1, 1));
  const RankStabilityReport rs = check_rank_stability(extract(t, std::vector<double>{0.0}));
  ASSERT_EQ(rs.ranks.size(), 3u);
  for (const auto& [sigma, rank] : rs.ranks) EXPECT_EQ(rank, 1u);
}

TEST(Likq, VacuousWithoutKinks) {
  const LikqReport r = check_likq(extract(phimu_tape(1.0), std::vector<double>{0.5, 0.25}));
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.active, 0u);
}

TEST(RankStability, PhiMuIsSignatureIndependent) {
  const RankStabilityReport r = check_rank_stability(phimu_point(-1.0));
  EXPECT_EQ(r.required, 3u);
  ASSERT_EQ(r.ranks.size(), 27u);
  for (const auto& [sigma, rank] : r.ranks) EXPECT_EQ(rank, 2u);
  EXPECT_FALSE(r.all_full);
  EXPECT_THROW(check_rank_stability(phimu_point(-1.0), kDefaultRankTol, 26), CapExceeded);
}

TEST(RankStability, RandomLikqInstances) {
  const SuiteReport r = verify_rank_stability(10, 4);
  EXPECT_TRUE(r.passed) << r.summary();
}

TEST(Limiting, PhiMuCandidates) {
  for (double mu : {1.0, 0.0, -1.0}) {
    const GradientSet g = limiting_gradients(phimu_point(mu));
    ASSERT_EQ(g.gradients.size(), 8u);
    EXPECT_EQ(g.likq, Likq::Fails);
    EXPECT_EQ(g.label, "candidate set, may contain spurious gradients");
    for (const auto& e : g.gradients) {
      EXPECT_LE((e.gradient - phimu_formula(e.signature, mu)).norm(), 1e-12);
    }
  }
}

TEST(Limiting, AbsAtZero) {
  TapeBuilder tb(1);
  const Tape t = tb.build(tb.abs(tb.input(0)));
  const GradientSet g = limiting_gradients(extract(t, std::vector<double>{0.0}));
  ASSERT_EQ(g.gradients.size(), 2u);
  EXPECT_EQ(g.gradients[0].gradient, -Eigen::VectorXd::Ones(1));
  EXPECT_EQ(g.gradients[1].gradient, Eigen::VectorXd::Ones(1));
  EXPECT_EQ(g.likq, Likq::Holds);
}

TEST(Limiting, SmoothPointSingleton) {
  const Tape t = phimu_tape(-1.0);
  const std::vector<double> x{0.4, -0.3};
  const GradientSet g = limiting_gradients(extract(t, x));
  ASSERT_EQ(g.gradients.size(), 1u);
  EXPECT_LE((g.gradients[0].gradient - fd_gradient(t, x)).norm(), 1e-6);
}

TEST(EssentialDirection, SeparableKinks) {
  TapeBuilder tb(2);
  const Tape t = tb.build(tb.add(tb.abs(tb.input(0)), tb.abs(tb.input(1))));
  const AbsNormalPoint p = extract(t, kOrigin);
  EXPECT_TRUE(verify_essential_direction(p, t, Signature{1, -1}, 1e-3));
  for (const Signature& s : definite_successors(p.sigma)) {
    EXPECT_TRUE(verify_essential_direction(p, t, s, 1e-3));
  }
}

TEST(EssentialDirection, NeedsLikq) {
  const Tape t = phimu_tape(-1.0);
  EXPECT_THROW(verify_essential_direction(extract(t, kOrigin), t, Signature{1, 1, 1}, 1e-3),
               PreconditionError);
}

TEST(EssentialDirection, KinkedRandomTapes) {
  Rng rng(31);
  int checked = 0;
  while (checked < 10) {
    const KinkedTape kt = random_kinked_tape(rng, {});
    const AbsNormalPoint p = extract(kt.tape, kt.anchor, 1e-10);
    if (!check_likq(p).holds) continue;
    for (const Signature& s : definite_successors(p.sigma)) {
      bool ok = false;
      for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) ok = ok || verify_essential_direction(p, kt.tape, s, eps);
      EXPECT_TRUE(ok) << s.str();
    }
    ++checked;
  }
}

TEST(Hull, SpuriousPointsOutsideForNegativeMu) {
  const GradientSet g = from_vectors({{-2, 0}, {-2, 2}, {2, 0}, {2, -2}, {0, 0}});
  for (const Eigen::Vector2d q : {Eigen::Vector2d(0, 2), Eigen::Vector2d(0, -2)}) {
    const HullResult h = hull_membership(g, q);
    EXPECT_FALSE(h.inside);
    EXPECT_GT(h.margin, 0.0);
    EXPECT_NEAR(h.normal.norm(), 1.0, 1e-12);
    EXPECT_GT(h.normal.dot(q), h.offset);
    for (const auto& e : g.gradients) EXPECT_LE(h.normal.dot(e.gradient), h.offset + 1e-9);
  }
}

TEST(Hull, MembersAreInside) {
  const GradientSet g = from_vectors({{-2, 0}, {-2, 2}, {2, 0}, {2, -2}, {0, 0}});
  for (std::size_t i = 0; i < g.gradients.size(); ++i) {
    const HullResult h = hull_membership(g, g.gradients[i].gradient);
    EXPECT_TRUE(h.inside);
    Eigen::Vector2d combo = Eigen::Vector2d::Zero();
    for (std::size_t k = 0; k < g.gradients.size(); ++k) {
      combo += h.coefficients[static_cast<Eigen::Index>(k)] * g.gradients[k].gradient;
    }
    EXPECT_LE((combo - g.gradients[i].gradient).norm(), 1e-9);
    EXPECT_NEAR(h.coefficients.sum(), 1.0, 1e-12);
  }
}

TEST(Hull, HexagonContainsOrigin) {
  const GradientSet g = from_vectors({{0, 2}, {-2, 2}, {-2, 0}, {0, -2}, {2, -2}, {2, 0}});
  const HullResult h = hull_membership(g, Eigen::Vector2d::Zero());
  EXPECT_TRUE(h.inside);
  EXPECT_GE(h.coefficients.minCoeff(), -1e-12);
  EXPECT_FALSE(hull_membership(g, Eigen::Vector2d(2.5, 0)).inside);
}

TEST(NumericalRank, Basics) {
  EXPECT_EQ(numerical_rank(Eigen::MatrixXd::Identity(3, 3)), 3u);
  EXPECT_EQ(numerical_rank(Eigen::MatrixXd::Zero(2, 2)), 0u);
  Eigen::MatrixXd m(2, 2);
  m << 1, 1, 1, 1 + 1e-13;
  EXPECT_EQ(numerical_rank(m), 1u);
}

TEST(Serialization, CsvColumns) {
  const GradientSet g = limiting_gradients(phimu_point(1.0));
  const std::string csv = to_csv(g);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sigma_1,sigma_2,sigma_3,g_1,g_2");
  EXPECT_NE(csv.find("-1,-1,-1,0,0\n"), std::string::npos);
  EXPECT_NE(to_json(g).find("\"likq\": \"fails\""), std::string::npos);
}

TEST(Presets, ToolTable) {
  const std::vector<std::pair<std::string, double>> expected = {
      {"jax", 1.0}, {"tensorflow", 0.0}, {"pytorch", 0.0}, {"reversediff", 1.0}, {"adolc", 0.0}, {"codipack", 0.0}};
  ASSERT_EQ(tool_presets().size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(tool_presets()[i].tool, expected[i].first);
    EXPECT_EQ(tool_presets()[i].kink_value, expected[i].second);
  }
  EXPECT_FALSE(preset_kink_value("theano").has_value());
}
