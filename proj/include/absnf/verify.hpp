#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "absnf/random.hpp"
#include "absnf/relunet.hpp"

namespace absnf {

// Batch instance for the network identity checks.
struct NetInstance {
  ReluNetSpec spec;
  Dataset data;
  Eigen::VectorXd params;
  std::vector<std::size_t> batch;
};

struct RandomNetOptions {
  std::size_t max_hidden_layers = 3;
  std::size_t max_width = 8;
  std::size_t max_switches = 24;
  std::size_t max_samples = 4;
  // Every sample gets at least one exactly vanishing hidden pre-activation.
  // Weights, biases and inputs are dyadic so the zeros survive rounding.
  bool kinked = true;
  // Every other pre-activation satisfies |z| >= margin.
  double margin = 1e-2;
};

NetInstance random_net_instance(Rng& rng, const RandomNetOptions& opt);

struct SuiteReport {
  std::string name;
  std::size_t instances = 0;
  bool passed = true;
  // worst observed value per metric, with the bound it is held to
  struct Metric {
    std::string name;
    double worst = 0.0;
    double bound = 0.0;
    bool upper = true;  // worst <= bound; otherwise worst >= bound
  };
  std::vector<Metric> metrics;
  std::vector<std::string> failures;

  void record(const std::string& metric, double value);
  std::string summary() const;
};

// Each suite draws its instances from the seed and returns worst-case metrics.

// sum_sigma beta grad phi_sigma against grad phi_xi, plus the beta moments.
SuiteReport verify_convex_combination(std::size_t instances, std::uint64_t seed);
// Full row rank for every sigma >= sigma_bar (zeros included) where LIKQ holds.
SuiteReport verify_rank_stability(std::size_t instances, std::uint64_t seed);
// Batch gradient against the gamma-weighted tau sum, the direction
// certificate and sign attainment at eps = 1e-4, on kinked networks.
SuiteReport verify_batch_decomposition(std::size_t instances, std::uint64_t seed);
// LIKQ at every sample of random networks.
SuiteReport verify_net_likq(std::size_t instances, std::uint64_t seed);
// Analytic gradients at kink-free points against central differences.
SuiteReport verify_smooth_tapes(std::size_t instances, std::uint64_t seed);
SuiteReport verify_smooth_nets(std::size_t instances, std::uint64_t seed);

}  // namespace absnf
