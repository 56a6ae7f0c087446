#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absnf/gradients.hpp"
#include "absnf/tape.hpp"

namespace absnf {

// Central differences per coordinate. Throws KinkCrossingError when a switch
// is within kink_tol of zero at x, or when the signature at x + h e_k or
// x - h e_k differs from the one at x.
Eigen::VectorXd fd_gradient(const Tape& tape, std::span<const double> x, double h = 1e-5,
                            double kink_tol = kDefaultKinkTol);

struct SamplingPlan {
  double radius = 1e-3;
  std::size_t count = 4096;
  std::uint64_t seed = 1;
  double kink_tol = kDefaultKinkTol;
  // Single-linkage merge radius. Unset: 1e-3 * (1 + max gradient norm).
  std::optional<double> cluster_tol;
  // Evaluate grad phi_sigma at the anchor instead of at the sample.
  bool at_anchor = false;
};

void validate(const SamplingPlan& plan);

struct SampleRecord {
  Eigen::VectorXd x;
  Signature sigma;
  Eigen::VectorXd gradient;
};

struct BouligandSample {
  GradientSet set;  // cluster centers, likq = Unknown
  std::vector<SampleRecord> samples;  // differentiable samples, in draw order
  std::size_t rejected = 0;           // samples with a switch inside kink_tol
  double cluster_tol = 0.0;           // effective merge radius
};

// Draws points uniformly from the ball B_r(x_bar), keeps the ones with a
// definite signature, takes grad phi_sigma there and clusters the results.
// Deterministic for a given seed.
BouligandSample sample_bouligand(const Tape& tape, std::span<const double> x_bar,
                                 const SamplingPlan& plan);

// CSV dump: x_1..x_n,sigma_1..sigma_s,g_1..g_n per differentiable sample.
std::string samples_to_csv(const BouligandSample& sample);

}  // namespace absnf
