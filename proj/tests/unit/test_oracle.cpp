#include <gtest/gtest.h>

#include "absnf/errors.hpp"
#include "absnf/oracle.hpp"
#include "absnf/problems.hpp"

using namespace absnf;

namespace {

const std::vector<double> kOrigin{0.0, 0.0};

Tape abs_x1() {
  TapeBuilder tb(1);
  return tb.build(tb.abs(tb.input(0)));
}

double distance_to(const GradientSet& set, const Eigen::VectorXd& g) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : set.gradients) best = std::min(best, (e.gradient - g).norm());
  return best;
}

SamplingPlan anchored() {
  SamplingPlan plan;
  plan.at_anchor = true;
  return plan;
}

}  // namespace

TEST(FiniteDifferences, AbsAwayFromKink) {
  const Eigen::VectorXd g = fd_gradient(abs_x1(), std::vector<double>{2.0});
  EXPECT_NEAR(g[0], 1.0, 1e-10);
}

TEST(FiniteDifferences, DetectsKinkCrossing) {
  EXPECT_THROW(fd_gradient(abs_x1(), std::vector<double>{1e-6}), KinkCrossingError);
  EXPECT_THROW(fd_gradient(abs_x1(), std::vector<double>{0.0}), KinkCrossingError);
  EXPECT_THROW(fd_gradient(abs_x1(), std::vector<double>{1.0}, 0.0), ValidationError);
}

TEST(FiniteDifferences, AgreesWithGradSigma) {
  const Tape t = phimu_tape(1.0);
  const std::vector<double> x{0.3, 0.1};
  const AbsNormalPoint p = extract(t, x);
  EXPECT_LE((fd_gradient(t, x) - grad_sigma(p, p.sigma)).norm(), 1e-6);
}

TEST(Sampling, PhiMuNegativeMu) {
  const BouligandSample s = sample_bouligand(phimu_tape(-1.0), kOrigin, anchored());
  std::vector<Eigen::Vector2d> expected = {{-2, 0}, {-2, 2}, {2, 0}, {2, -2}, {0, 0}};
  EXPECT_EQ(s.set.gradients.size(), expected.size());
  for (const auto& g : expected) EXPECT_LE(distance_to(s.set, g), s.cluster_tol);
  EXPECT_GT(distance_to(s.set, Eigen::Vector2d(0, 2)), 10 * s.cluster_tol);
  EXPECT_GT(distance_to(s.set, Eigen::Vector2d(0, -2)), 10 * s.cluster_tol);
  EXPECT_EQ(s.samples.size() + s.rejected, 4096u);
}

TEST(Sampling, SpuriousCandidatesNeverSampled) {
  // For mu = 1 the candidates (0, 1 - mu) and (0, mu - 1) sit inside the
  // hexagon and are not limits; for mu = 0 they are genuine.
  for (double mu : {1.0, -1.0}) {
    const BouligandSample s = sample_bouligand(phimu_tape(mu), kOrigin, anchored());
    EXPECT_GT(distance_to(s.set, Eigen::Vector2d(0, 1 - mu)), 10 * s.cluster_tol) << mu;
    EXPECT_GT(distance_to(s.set, Eigen::Vector2d(0, mu - 1)), 10 * s.cluster_tol) << mu;
  }
  const BouligandSample s0 = sample_bouligand(phimu_tape(0.0), kOrigin, anchored());
  EXPECT_LE(distance_to(s0.set, Eigen::Vector2d(0, 1)), s0.cluster_tol);
  EXPECT_LE(distance_to(s0.set, Eigen::Vector2d(0, -1)), s0.cluster_tol);
}

TEST(Sampling, HexagonForPositiveMu) {
  const BouligandSample s = sample_bouligand(phimu_tape(1.0), kOrigin, anchored());
  EXPECT_EQ(s.set.gradients.size(), 6u);
}

TEST(Sampling, AbsAtZero) {
  SamplingPlan plan;
  plan.count = 256;
  const BouligandSample s = sample_bouligand(abs_x1(), std::vector<double>{0.0}, plan);
  ASSERT_EQ(s.set.gradients.size(), 2u);
  EXPECT_LE(distance_to(s.set, Eigen::VectorXd::Ones(1)), 1e-12);
  EXPECT_LE(distance_to(s.set, -Eigen::VectorXd::Ones(1)), 1e-12);
}

TEST(Sampling, SmoothPointIsOneCluster) {
  const Tape t = phimu_tape(-1.0);
  const std::vector<double> x{0.4, -0.3};
  SamplingPlan plan;
  plan.count = 512;
  plan.radius = 1e-4;
  const BouligandSample s = sample_bouligand(t, x, plan);
  ASSERT_EQ(s.set.gradients.size(), 1u);
  EXPECT_LE((s.set.gradients[0].gradient - fd_gradient(t, x)).norm(), 1e-3);
}

TEST(Sampling, DeterministicPerSeed) {
  SamplingPlan plan;
  plan.count = 300;
  plan.seed = 42;
  const Tape t = phimu_tape(-1.0);
  const BouligandSample a = sample_bouligand(t, kOrigin, plan);
  const BouligandSample b = sample_bouligand(t, kOrigin, plan);
  EXPECT_EQ(to_json(a.set), to_json(b.set));
  EXPECT_EQ(samples_to_csv(a), samples_to_csv(b));
  plan.seed = 43;
  EXPECT_NE(samples_to_csv(sample_bouligand(t, kOrigin, plan)), samples_to_csv(a));
}

TEST(Sampling, PlanValidation) {
  SamplingPlan plan;
  plan.radius = 0.0;
  EXPECT_THROW(sample_bouligand(abs_x1(), std::vector<double>{0.0}, plan), ValidationError);
  plan = {};
  plan.count = 0;
  EXPECT_THROW(validate(plan), ValidationError);
  plan = {};
  plan.cluster_tol = -1.0;
  EXPECT_THROW(validate(plan), ValidationError);
}
