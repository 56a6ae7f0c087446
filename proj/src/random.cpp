#include "absnf/random.hpp"

#include <algorithm>
#include <cmath>

#include "absnf/errors.hpp"

namespace absnf {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  while (u == 0.0) u = uniform();
  const double v = uniform();
  const double r = std::sqrt(-2.0 * std::log(u));
  const double t = 2.0 * 3.14159265358979323846 * v;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::size_t Rng::index(std::size_t lo, std::size_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::size_t>(engine_() % span);
}

AbsNormalPoint random_abs_normal_point(Rng& rng, const RandomInstanceOptions& opt) {
  if (opt.active > opt.s) throw ValidationError("more active switches than switches");
  const auto n = static_cast<Eigen::Index>(opt.n);
  const auto s = static_cast<Eigen::Index>(opt.s);
  auto fill = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
  };
  Eigen::VectorXd a = fill(n, 1);
  Eigen::VectorXd b = fill(s, 1);
  Eigen::VectorXd d = fill(s, 1);
  Eigen::MatrixXd Z = fill(s, n);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(s, s);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(s, s);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (rng.uniform() < opt.density) L(i, j) = opt.coupling * rng.uniform(-1.0, 1.0);
      if (rng.uniform() < opt.density) M(i, j) = opt.coupling * rng.uniform(-1.0, 1.0);
    }
  }
  std::vector<std::size_t> order(opt.s);
  for (std::size_t i = 0; i < opt.s; ++i) order[i] = i;
  for (std::size_t i = opt.s; i > 1; --i) std::swap(order[i - 1], order[rng.index(0, i - 1)]);
  Eigen::VectorXd z(s);
  for (std::size_t r = 0; r < opt.s; ++r) {
    const auto i = static_cast<Eigen::Index>(order[r]);
    z[i] = r < opt.active ? 0.0 : rng.sign() * rng.uniform(0.5, 2.0);
  }
  return make_point(Eigen::VectorXd::Zero(n), std::move(z), std::move(a), std::move(b),
                    std::move(d), std::move(Z), std::move(L), std::move(M));
}

namespace {

bool tame(const Tape& tape, Rng& rng) {
  std::vector<double> x(tape.n_inputs());
  for (int trial = 0; trial < 4; ++trial) {
    for (double& v : x) v = rng.uniform(-1.5, 1.5);
    try {
      const EvalTrace tr = forward_eval(tape, x);
      for (double v : tr.values) {
        if (std::abs(v) > 1e4) return false;
      }
    } catch (const DomainError&) {
      return false;
    }
  }
  return true;
}

Tape try_random_tape(Rng& rng, const RandomTapeOptions& opt) {
  TapeBuilder tb(opt.n_inputs);
  std::vector<std::size_t> pool;
  for (std::size_t k = 0; k < opt.n_inputs; ++k) pool.push_back(tb.input(k));
  std::vector<std::size_t> abs_nodes;
  // Abs nodes sit at evenly spread op slots.
  std::vector<char> abs_slot(opt.n_ops, 0);
  for (std::size_t i = 0; i < opt.n_abs && opt.n_ops > 0; ++i) {
    abs_slot[std::min(opt.n_ops - 1, (i + 1) * opt.n_ops / (opt.n_abs + 1))] = 1;
  }
  auto pick = [&] { return pool[rng.index(pool.size() > 6 ? pool.size() - 6 : 0, pool.size() - 1)]; };
  auto any = [&] { return pool[rng.index(0, pool.size() - 1)]; };
  for (std::size_t step = 0; step < opt.n_ops; ++step) {
    std::size_t node;
    if (abs_slot[step]) {
      const std::size_t arg = tb.add(pick(), tb.constant(rng.uniform(-0.5, 0.5)));
      node = tb.abs(arg);
      abs_nodes.push_back(node);
      if (rng.uniform() < 0.5) {
        // relu-style consumer reading both |z| and z
        node = tb.mul(tb.constant(0.5), tb.add(arg, node));
      }
    } else {
      switch (rng.index(0, 9)) {
        case 0: node = tb.add(pick(), any()); break;
        case 1: node = tb.sub(pick(), any()); break;
        case 2: node = tb.mul(pick(), any()); break;
        case 3: node = tb.unary(Op::Neg, pick()); break;
        case 4: node = tb.unary(Op::Sin, pick()); break;
        case 5: node = tb.unary(Op::Cos, pick()); break;
        case 6: node = tb.unary(Op::Exp, tb.unary(Op::Sin, pick())); break;
        case 7: {
          const std::size_t den = tb.add(tb.constant(1.0), tb.unary(Op::Sqr, any()));
          node = tb.binary(Op::Div, pick(), den);
          break;
        }
        case 8:
          node = tb.unary(Op::Log, tb.add(tb.constant(1.0), tb.unary(Op::Sqr, pick())));
          break;
        default:
          node = tb.mul(tb.constant(rng.uniform(-2.0, 2.0)), pick());
          break;
      }
    }
    pool.push_back(node);
  }
  std::size_t out = pool.back();
  for (std::size_t k : abs_nodes) out = tb.add(out, tb.mul(tb.constant(rng.uniform(0.5, 1.5)), k));
  return tb.build(out);
}

}  // namespace

Tape random_tape(Rng& rng, const RandomTapeOptions& opt) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Tape t = try_random_tape(rng, opt);
    if (tame(t, rng)) return t;
  }
  throw NumericalError("could not generate a well-scaled random tape");
}

KinkedTape random_kinked_tape(Rng& rng, const KinkedTapeOptions& opt) {
  const std::size_t n = opt.n_inputs;
  std::vector<double> anchor(n);
  for (double& v : anchor) v = rng.uniform(-1.0, 1.0);

  TapeBuilder tb(n);
  std::vector<std::size_t> inputs;
  for (std::size_t k = 0; k < n; ++k) inputs.push_back(tb.input(k));

  auto value_at_anchor = [&](std::size_t node) {
    return forward_eval(tb.build(node), anchor).values[node];
  };

  const std::size_t s = opt.n_active + opt.n_inactive;
  std::vector<char> is_active(s, 0);
  for (std::size_t i = 0; i < opt.n_active; ++i) is_active[i] = 1;
  for (std::size_t i = s; i > 1; --i) std::swap(is_active[i - 1], is_active[rng.index(0, i - 1)]);

  std::vector<std::size_t> args, abs_nodes;
  for (std::size_t i = 0; i < s; ++i) {
    std::size_t expr = tb.mul(tb.constant(rng.uniform(-1.0, 1.0)), inputs[0]);
    for (std::size_t k = 1; k < n; ++k) {
      expr = tb.add(expr, tb.mul(tb.constant(rng.uniform(-1.0, 1.0)), inputs[k]));
    }
    // smooth curvature
    const std::size_t k1 = rng.index(0, n - 1);
    const std::size_t k2 = rng.index(0, n - 1);
    expr = tb.add(expr, tb.mul(tb.constant(rng.uniform(-0.5, 0.5)),
                               tb.mul(tb.unary(Op::Sin, inputs[k1]), inputs[k2])));
    if (opt.nested && i > 0 && rng.uniform() < 0.7) {
      const std::size_t j = rng.index(0, i - 1);
      expr = tb.add(expr, tb.mul(tb.constant(rng.uniform(-0.5, 0.5)), abs_nodes[j]));
      expr = tb.add(expr, tb.mul(tb.constant(rng.uniform(-0.5, 0.5)), args[j]));
    }
    const double v = value_at_anchor(expr);
    const double target = is_active[i] ? 0.0 : rng.sign() * rng.uniform(0.5, 1.5);
    const std::size_t arg = tb.sub(expr, tb.constant(v - target));
    args.push_back(arg);
    abs_nodes.push_back(tb.abs(arg));
  }

  std::size_t out = tb.mul(tb.unary(Op::Cos, inputs[0]), tb.constant(rng.uniform(-1.0, 1.0)));
  for (std::size_t k = 1; k < n; ++k) {
    out = tb.add(out, tb.mul(tb.constant(rng.uniform(-1.0, 1.0)), inputs[k]));
  }
  for (std::size_t i = 0; i < s; ++i) {
    out = tb.add(out, tb.mul(tb.constant(rng.sign() * rng.uniform(0.5, 1.5)), abs_nodes[i]));
    if (rng.uniform() < 0.5) {
      out = tb.add(out, tb.mul(tb.constant(rng.uniform(-0.5, 0.5)), args[i]));
    }
  }
  return {tb.build(out), std::move(anchor)};
}

}  // namespace absnf
