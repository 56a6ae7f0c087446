#include <gtest/gtest.h>

#include "absnf/absnormal.hpp"
#include "absnf/errors.hpp"
#include "absnf/gradients.hpp"
#include "absnf/oracle.hpp"
#include "absnf/problems.hpp"
#include "absnf/random.hpp"

using namespace absnf;

namespace {

Tape abs_x1() {
  TapeBuilder tb(1);
  return tb.build(tb.abs(tb.input(0)));
}

bool strictly_lower(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i; j < m.cols(); ++j)
      if (m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

TEST(Extract, PhiMuAtOrigin) {
  for (double mu : {1.0, 0.0, -1.0}) {
    const AbsNormalPoint p = extract(phimu_tape(mu), std::vector<double>{0.0, 0.0});
    EXPECT_EQ(p.z, Eigen::Vector3d::Zero());
    EXPECT_EQ(p.sigma, Signature({0, 0, 0}));
    EXPECT_EQ(p.alpha, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_TRUE(p.L.isZero(0.0));
    EXPECT_TRUE(p.M.isZero(0.0));
    Eigen::MatrixXd Z(3, 2);
    Z << 1, 0, -1, 1, 0, -1;
    EXPECT_EQ(p.Z, Z);
    EXPECT_EQ(p.b, Eigen::Vector3d(1.0, 1.0, mu));
    EXPECT_TRUE(p.a.isZero(0.0));
    EXPECT_TRUE(p.d.isZero(0.0));
  }
}

TEST(Extract, AbsX1) {
  const AbsNormalPoint p = extract(abs_x1(), std::vector<double>{2.0});
  EXPECT_EQ(p.sigma, Signature({1}));
  EXPECT_EQ(p.a, Eigen::VectorXd::Zero(1));
  EXPECT_EQ(p.b, Eigen::VectorXd::Ones(1));
  EXPECT_EQ(p.d, Eigen::VectorXd::Zero(1));
  EXPECT_EQ(p.Z, Eigen::MatrixXd::Ones(1, 1));
  EXPECT_EQ(p.value, 2.0);
}

TEST(Extract, NestedAbsReadsTheAbsOutput) {
  // |x1 + |x1||: z1 = x1, z2 = x1 + |z1|
  TapeBuilder tb(1);
  const auto x = tb.input(0);
  const Tape t = tb.build(tb.abs(tb.add(x, tb.abs(x))));
  const AbsNormalPoint p = extract(t, std::vector<double>{1.0});
  EXPECT_EQ(p.z, Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(p.Z, Eigen::MatrixXd::Ones(2, 1));
  Eigen::Matrix2d L;
  L << 0, 0, 1, 0;
  EXPECT_EQ(p.L, L);
  EXPECT_TRUE(p.M.isZero(0.0));
  EXPECT_EQ(p.b, Eigen::Vector2d(0.0, 1.0));
}

TEST(Extract, ReluConsumerSplitsIntoLAndM) {
  // z1 = x1 + x2, z2 = (z1 + |z1|) / 2 - x2, phi = |z2|
  TapeBuilder tb(2);
  const auto x1 = tb.input(0);
  const auto x2 = tb.input(1);
  const auto z1 = tb.add(x1, x2);
  const auto relu = tb.mul(tb.constant(0.5), tb.add(z1, tb.abs(z1)));
  const Tape t = tb.build(tb.abs(tb.sub(relu, x2)));
  const AbsNormalPoint p = extract(t, std::vector<double>{0.5, 0.25});
  Eigen::Matrix2d Z;
  Z << 1, 1, 0, -1;
  EXPECT_EQ(p.Z, Z);
  EXPECT_EQ(p.L(1, 0), 0.5);
  EXPECT_EQ(p.M(1, 0), 0.5);
  EXPECT_EQ(p.b, Eigen::Vector2d(0.0, 1.0));
}

TEST(Extract, InputReadIsNotASwitchUse) {
  // |x1| + |x2 - x1|: the second row reads x1 directly, which is an x-use.
  const AbsNormalPoint p = extract(phimu_tape(0.0), std::vector<double>{0.3, 0.1});
  EXPECT_EQ(p.Z(1, 0), -1.0);
  EXPECT_EQ(p.M(1, 0), 0.0);
  EXPECT_EQ(p.L(1, 0), 0.0);
}

TEST(Extract, KinkTolerance) {
  const AbsNormalPoint p = extract(abs_x1(), std::vector<double>{1e-13});
  EXPECT_EQ(p.sigma, Signature({0}));
  const AbsNormalPoint q = extract(abs_x1(), std::vector<double>{1e-13}, 0.0);
  EXPECT_EQ(q.sigma, Signature({1}));
}

TEST(Extract, TriangularOnRandomTapes) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Tape t = random_tape(rng, {3, 20, 5});
    std::vector<double> x(t.n_inputs());
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const AbsNormalPoint p = extract(t, x);
    EXPECT_TRUE(strictly_lower(p.L));
    EXPECT_TRUE(strictly_lower(p.M));
    EXPECT_NO_THROW(validate(p));
  }
}

TEST(Extract, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  int checked = 0;
  while (checked < 100) {
    const Tape t = random_tape(rng, {});
    std::vector<double> x(t.n_inputs());
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const AbsNormalPoint p = extract(t, x);
    if (!p.alpha.empty()) continue;
    Eigen::VectorXd fd;
    try {
      fd = fd_gradient(t, x);
    } catch (const KinkCrossingError&) {
      continue;
    }
    const Eigen::VectorXd sb = p.sigma.as_vector();
    const Eigen::VectorXd g = p.a + p.Z.transpose() * switching_adjoint(p, sb);
    EXPECT_LE((g - fd).norm(), 1e-6 * (1.0 + fd.norm()));
    ++checked;
  }
}

TEST(Extract, FixedSignatureReproducesTheSwitches) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Tape t = random_tape(rng, {});
    std::vector<double> x(t.n_inputs());
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const EvalTrace tr = forward_eval(t, x);
    const Eigen::VectorXd sigma = Signature::of(tr.z).as_vector();
    const EvalTrace fixed = forward_eval(t, x, std::span<const double>(sigma.data(), sigma.size()));
    EXPECT_EQ(tr.z, fixed.z);
    EXPECT_EQ(tr.result(t), fixed.result(t));
  }
}

TEST(Signature, Precedence) {
  EXPECT_TRUE(precedes(Signature{0, 0, 0}, Signature{1, -1, 1}));
  EXPECT_FALSE(precedes(Signature{1, 0}, Signature{-1, 1}));
  EXPECT_TRUE(precedes(Signature{1, 0}, Signature{1, 0}));
  EXPECT_THROW(precedes(Signature{1, 0}, Signature{1}), ValidationError);
}

TEST(Signature, PrecedenceIsAPartialOrder) {
  Rng rng(13);
  auto draw = [&] {
    std::vector<int> e(4);
    for (int& v : e) v = static_cast<int>(rng.index(0, 2)) - 1;
    return Signature(e);
  };
  for (int trial = 0; trial < 2000; ++trial) {
    const Signature a = draw(), b = draw(), c = draw();
    EXPECT_TRUE(precedes(a, a));
    if (precedes(a, b) && precedes(b, a)) EXPECT_EQ(a, b);
    if (precedes(a, b) && precedes(b, c)) EXPECT_TRUE(precedes(a, c));
  }
}

TEST(Signature, DefiniteSuccessors) {
  const auto all = definite_successors(Signature{0, 0, 0});
  ASSERT_EQ(all.size(), 8u);
  EXPECT_EQ(all.front(), Signature({-1, -1, -1}));
  EXPECT_EQ(all[1], Signature({-1, -1, 1}));
  EXPECT_EQ(all.back(), Signature({1, 1, 1}));
  const auto one = definite_successors(Signature{1, -1});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.front(), Signature({1, -1}));
  EXPECT_THROW(definite_successors(Signature{0}, 1), CapExceeded);
  EXPECT_THROW(Signature({2}), ValidationError);
}

TEST(Extract, JsonIsRowMajor) {
  const std::string j = point_to_json(extract(phimu_tape(1.0), std::vector<double>{0.0, 0.0}));
  EXPECT_NE(j.find(R"("Z":[[1.0,0.0],[-1.0,1.0],[0.0,-1.0]])"), std::string::npos);
}
