#pragma once

#include <Eigen/Dense>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absnf/tape.hpp"

namespace absnf {

inline constexpr double kDefaultKinkTol = 1e-12;
inline constexpr std::size_t kDefaultEnumerationCap = std::size_t{1} << 20;

// Vector in {-1, 0, 1}^s.
class Signature {
 public:
  Signature() = default;
  explicit Signature(std::vector<int> entries);
  Signature(std::initializer_list<int> entries) : Signature(std::vector<int>(entries)) {}

  // sign(z_i), with |z_i| <= kink_tol mapped to 0.
  static Signature of(std::span<const double> z, double kink_tol = 0.0);

  std::size_t size() const { return entries_.size(); }
  int operator[](std::size_t i) const { return entries_[i]; }
  void set(std::size_t i, int value);

  bool definite() const;
  // Sorted indices with entry 0.
  std::vector<std::size_t> active() const;
  Eigen::VectorXd as_vector() const;
  std::vector<int> entries() const { return {entries_.begin(), entries_.end()}; }
  std::string str() const;

  auto operator<=>(const Signature&) const = default;

 private:
  std::vector<std::int8_t> entries_;
};

// sigma >= sigma_bar: sigma agrees with sigma_bar wherever sigma_bar is nonzero.
bool precedes(const Signature& sigma_bar, const Signature& sigma);

// All definite sigma >= sigma_bar. The first active index is the most
// significant position, and -1 comes before +1. Throws CapExceeded when
// 2^|alpha| > cap.
std::vector<Signature> definite_successors(const Signature& sigma_bar,
                                           std::size_t cap = kDefaultEnumerationCap);

// Point-local abs-normal data phi(x) = f(x, |z|, z), z = c(x, |z|, z).
struct AbsNormalPoint {
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  Signature sigma;
  std::vector<std::size_t> alpha;
  double value = 0.0;  // phi(x)
  Eigen::VectorXd a;   // grad_x f
  Eigen::VectorXd b;   // grad_|z| f
  Eigen::VectorXd d;   // grad_z f
  Eigen::MatrixXd Z;   // D_x c, s x n
  Eigen::MatrixXd L;   // D_|z| c, strictly lower
  Eigen::MatrixXd M;   // D_z c, strictly lower

  std::size_t n() const { return static_cast<std::size_t>(x.size()); }
  std::size_t s() const { return static_cast<std::size_t>(z.size()); }
};

// Throws NumericalError unless dimensions agree, L and M are strictly lower
// triangular, and sigma/alpha are consistent.
void validate(const AbsNormalPoint& p);

// Builds the point data from one forward sweep and s + 1 reverse sweeps.
// Reading the output of an abs node is a |z|-use; reading the (non-input)
// argument node of an earlier abs node is a z-use.
AbsNormalPoint extract(const Tape& tape, std::span<const double> x,
                       double kink_tol = kDefaultKinkTol);

// Assembles a point from raw data and classifies sigma from z.
AbsNormalPoint make_point(Eigen::VectorXd x, Eigen::VectorXd z, Eigen::VectorXd a,
                          Eigen::VectorXd b, Eigen::VectorXd d, Eigen::MatrixXd Z,
                          Eigen::MatrixXd L, Eigen::MatrixXd M,
                          double kink_tol = kDefaultKinkTol);

// Row-major JSON object with every field.
std::string point_to_json(const AbsNormalPoint& p);

}  // namespace absnf
