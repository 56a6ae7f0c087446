#include "absnf/absnormal.hpp"

#include <cmath>

#include "absnf/errors.hpp"
#include "json.hpp"

namespace absnf {

Signature::Signature(std::vector<int> entries) {
  entries_.reserve(entries.size());
  for (int e : entries) {
    if (e < -1 || e > 1) throw ValidationError("signature entries must be -1, 0 or 1");
    entries_.push_back(static_cast<std::int8_t>(e));
  }
}

Signature Signature::of(std::span<const double> z, double kink_tol) {
  std::vector<int> e(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (std::abs(z[i]) <= kink_tol) {
      e[i] = 0;
    } else {
      e[i] = z[i] > 0 ? 1 : -1;
    }
  }
  return Signature(std::move(e));
}

void Signature::set(std::size_t i, int value) {
  if (value < -1 || value > 1) throw ValidationError("signature entries must be -1, 0 or 1");
  entries_.at(i) = static_cast<std::int8_t>(value);
}

bool Signature::definite() const {
  for (auto e : entries_) {
    if (e == 0) return false;
  }
  return true;
}

std::vector<std::size_t> Signature::active() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i] == 0) out.push_back(i);
  }
  return out;
}

Eigen::VectorXd Signature::as_vector() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(entries_.size()));
  for (std::size_t i = 0; i < entries_.size(); ++i) v[static_cast<Eigen::Index>(i)] = entries_[i];
  return v;
}

std::string Signature::str() const {
  std::string out = "(";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(static_cast<int>(entries_[i]));
  }
  return out + ")";
}

bool precedes(const Signature& sigma_bar, const Signature& sigma) {
  if (sigma_bar.size() != sigma.size()) {
    throw ValidationError("signature length mismatch: " + std::to_string(sigma_bar.size()) +
                          " vs " + std::to_string(sigma.size()));
  }
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] * sigma_bar[i] < sigma_bar[i] * sigma_bar[i]) return false;
  }
  return true;
}

std::vector<Signature> definite_successors(const Signature& sigma_bar, std::size_t cap) {
  const auto alpha = sigma_bar.active();
  if (alpha.size() >= 63 || (std::size_t{1} << alpha.size()) > cap) {
    throw CapExceeded("2^" + std::to_string(alpha.size()) +
                      " definite signatures exceed the enumeration cap " + std::to_string(cap) +
                      "; use sampling instead");
  }
  const std::size_t count = std::size_t{1} << alpha.size();
  std::vector<Signature> out;
  out.reserve(count);
  for (std::size_t code = 0; code < count; ++code) {
    Signature sig = sigma_bar;
    for (std::size_t r = 0; r < alpha.size(); ++r) {
      const std::size_t bit = alpha.size() - 1 - r;
      sig.set(alpha[r], ((code >> bit) & 1u) ? 1 : -1);
    }
    out.push_back(std::move(sig));
  }
  return out;
}

void validate(const AbsNormalPoint& p) {
  const auto n = static_cast<Eigen::Index>(p.n());
  const auto s = static_cast<Eigen::Index>(p.s());
  if (p.a.size() != n || p.b.size() != s || p.d.size() != s || p.Z.rows() != s ||
      p.Z.cols() != n || p.L.rows() != s || p.L.cols() != s || p.M.rows() != s ||
      p.M.cols() != s || p.sigma.size() != p.s()) {
    throw NumericalError("abs-normal point has inconsistent dimensions");
  }
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i; j < s; ++j) {
      if (p.L(i, j) != 0.0 || p.M(i, j) != 0.0) {
        throw NumericalError("L and M must be strictly lower triangular");
      }
    }
  }
  if (p.alpha != p.sigma.active()) throw NumericalError("active set inconsistent with signature");
}

namespace {

struct SweepResult {
  std::vector<double> dx, dy, dw;
};

// Reverse sweep from `seed`. Abs outputs and z-use argument nodes of
// switches below `limit` are treated as independent leaves.
SweepResult partial_sweep(const Tape& tape, const EvalTrace& tr, std::size_t seed,
                          std::size_t limit, bool seed_free, std::vector<double>& bar) {
  const std::size_t s = tape.n_switches();
  SweepResult r{std::vector<double>(tape.n_inputs(), 0.0), std::vector<double>(s, 0.0),
                std::vector<double>(s, 0.0)};
  std::fill(bar.begin(), bar.end(), 0.0);
  bar[seed] = 1.0;
  for (std::size_t k = seed + 1; k-- > 0;) {
    const double w = bar[k];
    if (w == 0.0) continue;
    const std::size_t abs_j = tape.switch_of_abs(k);
    if (abs_j != kNoIndex) {
      r.dy[abs_j] += w;
      continue;
    }
    if (k != seed || !seed_free) {
      const std::size_t arg_j = tape.switch_of_arg(k);
      if (arg_j != kNoIndex && arg_j < limit) {
        r.dw[arg_j] += w;
        continue;
      }
    }
    const Node& nd = tape.node(k);
    const std::size_t ia = nd.args[0];
    const std::size_t ib = nd.args[1];
    const double a = ia != kNoIndex ? tr.values[ia] : 0.0;
    const double b = ib != kNoIndex ? tr.values[ib] : 0.0;
    switch (nd.op) {
      case Op::Input: r.dx[static_cast<std::size_t>(nd.value)] += w; break;
      case Op::Const: break;
      case Op::Add: bar[ia] += w; bar[ib] += w; break;
      case Op::Sub: bar[ia] += w; bar[ib] -= w; break;
      case Op::Mul: bar[ia] += w * b; bar[ib] += w * a; break;
      case Op::Div: bar[ia] += w / b; bar[ib] -= w * a / (b * b); break;
      case Op::Neg: bar[ia] -= w; break;
      case Op::Sin: bar[ia] += w * std::cos(a); break;
      case Op::Cos: bar[ia] -= w * std::sin(a); break;
      case Op::Exp: bar[ia] += w * tr.values[k]; break;
      case Op::Log: bar[ia] += w / a; break;
      case Op::Sqr: bar[ia] += 2.0 * w * a; break;
      case Op::Abs: break;  // handled above
    }
  }
  return r;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

AbsNormalPoint make_point(Eigen::VectorXd x, Eigen::VectorXd z, Eigen::VectorXd a,
                          Eigen::VectorXd b, Eigen::VectorXd d, Eigen::MatrixXd Z,
                          Eigen::MatrixXd L, Eigen::MatrixXd M, double kink_tol) {
  if (!(kink_tol >= 0.0)) throw ValidationError("kink tolerance must be non-negative");
  AbsNormalPoint p;
  p.sigma = Signature::of(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())),
                          kink_tol);
  p.alpha = p.sigma.active();
  p.x = std::move(x);
  p.z = std::move(z);
  p.a = std::move(a);
  p.b = std::move(b);
  p.d = std::move(d);
  p.Z = std::move(Z);
  p.L = std::move(L);
  p.M = std::move(M);
  validate(p);
  return p;
}

AbsNormalPoint extract(const Tape& tape, std::span<const double> x, double kink_tol) {
  const EvalTrace tr = forward_eval(tape, x);
  const std::size_t s = tape.n_switches();
  const auto n = static_cast<Eigen::Index>(tape.n_inputs());
  const auto ss = static_cast<Eigen::Index>(s);

  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(ss, n);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(ss, ss);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ss, ss);
  std::vector<double> bar(tape.size());
  for (std::size_t i = 0; i < s; ++i) {
    const auto row = partial_sweep(tape, tr, tape.switch_arg(i), i, true, bar);
    const auto ri = static_cast<Eigen::Index>(i);
    Z.row(ri) = to_eigen(row.dx).transpose();
    L.row(ri) = to_eigen(row.dy).transpose();
    M.row(ri) = to_eigen(row.dw).transpose();
  }
  const auto f = partial_sweep(tape, tr, tape.output(), s, false, bar);

  AbsNormalPoint p = make_point(Eigen::Map<const Eigen::VectorXd>(x.data(), n), to_eigen(tr.z),
                                to_eigen(f.dx), to_eigen(f.dy), to_eigen(f.dw), std::move(Z),
                                std::move(L), std::move(M), kink_tol);
  p.value = tr.result(tape);
  return p;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string point_to_json(const AbsNormalPoint& p) {
  nlohmann::json j;
  j["x"] = vec_json(p.x);
  j["value"] = p.value;
  j["z"] = vec_json(p.z);
  j["sigma"] = p.sigma.entries();
  j["alpha"] = p.alpha;
  j["a"] = vec_json(p.a);
  j["b"] = vec_json(p.b);
  j["d"] = vec_json(p.d);
  j["Z"] = mat_json(p.Z);
  j["L"] = mat_json(p.L);
  j["M"] = mat_json(p.M);
  return j.dump();
}

}  // namespace absnf
