#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "absnf/absnormal.hpp"
#include "absnf/tape.hpp"

namespace absnf {

// Seeded generator with platform-independent transforms, so sampled points
// and random instances are reproducible bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [lo, hi].
  std::size_t index(std::size_t lo, std::size_t hi);
  int sign() { return (engine_() >> 63) ? 1 : -1; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct RandomInstanceOptions {
  std::size_t n = 6;
  std::size_t s = 10;
  std::size_t active = 4;   // |alpha|, at most s
  double coupling = 0.3;    // magnitude of L and M entries
  double density = 0.5;     // probability that a strictly-lower entry is nonzero
};

// Synthetic abs-normal point: random a, b, d, Z, strictly lower L, M and a
// signature with exactly `active` zeros at random positions.
AbsNormalPoint random_abs_normal_point(Rng& rng, const RandomInstanceOptions& opt);

struct RandomTapeOptions {
  std::size_t n_inputs = 3;
  std::size_t n_ops = 16;
  std::size_t n_abs = 4;
};

// Random straight-line program over the full op set. Guarded ops are wrapped
// so they stay in their domain (div by 1 + v^2, log of 1 + v^2), and the
// output mixes every abs node so all switches matter.
Tape random_tape(Rng& rng, const RandomTapeOptions& opt);

struct KinkedTapeOptions {
  std::size_t n_inputs = 3;
  std::size_t n_active = 2;    // switches that vanish at the anchor
  std::size_t n_inactive = 2;  // switches bounded away from zero at the anchor
  bool nested = true;          // let later switches read earlier |z| and z
};

struct KinkedTape {
  Tape tape;
  std::vector<double> anchor;
};

// Tape whose first `n_active` switches vanish exactly at a random anchor,
// with smooth nonlinear terms and optional nesting. LIKQ is generic but not
// guaranteed; callers filter with check_likq.
KinkedTape random_kinked_tape(Rng& rng, const KinkedTapeOptions& opt);

}  // namespace absnf
