#include "absnf/tape.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "absnf/errors.hpp"

namespace absnf {

namespace {

constexpr std::array<std::pair<Op, std::string_view>, 13> kOpNames = {{
    {Op::Input, "input"},
    {Op::Const, "const"},
    {Op::Add, "add"},
    {Op::Sub, "sub"},
    {Op::Mul, "mul"},
    {Op::Div, "div"},
    {Op::Neg, "neg"},
    {Op::Sin, "sin"},
    {Op::Cos, "cos"},
    {Op::Exp, "exp"},
    {Op::Log, "log"},
    {Op::Sqr, "sqr"},
    {Op::Abs, "abs"},
}};

}  // namespace

std::string_view op_name(Op op) {
  for (const auto& [o, name] : kOpNames) {
    if (o == op) return name;
  }
  return "?";
}

std::optional<Op> op_from_name(std::string_view name) {
  for (const auto& [o, n] : kOpNames) {
    if (n == name) return o;
  }
  return std::nullopt;
}

std::size_t op_arity(Op op) {
  switch (op) {
    case Op::Input:
    case Op::Const:
      return 0;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return 2;
    default:
      return 1;
  }
}

Tape::Tape(std::size_t n_inputs, std::vector<Node> nodes, std::size_t output)
    : n_inputs_(n_inputs), nodes_(std::move(nodes)), output_(output) {
  if (nodes_.empty()) throw ParseError("tape has no nodes");
  if (output_ >= nodes_.size()) {
    throw ParseError("output index " + std::to_string(output_) + " out of range");
  }
  switch_of_abs_.assign(nodes_.size(), kNoIndex);
  switch_of_arg_.assign(nodes_.size(), kNoIndex);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const Node& nd = nodes_[k];
    const std::size_t arity = op_arity(nd.op);
    for (std::size_t a = 0; a < 2; ++a) {
      const std::size_t arg = nd.args[a];
      if (a < arity) {
        if (arg == kNoIndex) throw ParseError("missing argument for " + std::string(op_name(nd.op)), k);
        if (arg >= k) {
          throw ParseError("references node " + std::to_string(arg) + " which is not earlier", k);
        }
      } else if (arg != kNoIndex) {
        throw ParseError("too many arguments for " + std::string(op_name(nd.op)), k);
      }
    }
    if (nd.op == Op::Input) {
      if (!(nd.value >= 0.0) || nd.value != std::floor(nd.value) ||
          nd.value >= static_cast<double>(n_inputs_)) {
        throw ParseError("input position out of range", k);
      }
    }
    if (nd.op == Op::Const && !std::isfinite(nd.value)) throw ParseError("non-finite constant", k);
    if (nd.op == Op::Abs) {
      const std::size_t i = abs_nodes_.size();
      abs_nodes_.push_back(k);
      switch_of_abs_[k] = i;
      const std::size_t arg = nd.args[0];
      if (nodes_[arg].op != Op::Input && switch_of_arg_[arg] == kNoIndex) switch_of_arg_[arg] = i;
    }
  }
}

Tape Tape::with_constant(std::string_view name, double value) const {
  std::vector<Node> nodes = nodes_;
  bool found = false;
  for (auto& nd : nodes) {
    if (nd.op == Op::Const && nd.name == name) {
      nd.value = value;
      found = true;
    }
  }
  if (!found) throw ValidationError("tape has no constant named '" + std::string(name) + "'");
  return Tape(n_inputs_, std::move(nodes), output_);
}

std::size_t TapeBuilder::input(std::size_t k) {
  Node nd;
  nd.op = Op::Input;
  nd.value = static_cast<double>(k);
  nodes_.push_back(nd);
  return nodes_.size() - 1;
}

std::size_t TapeBuilder::constant(double value, std::string name) {
  Node nd;
  nd.op = Op::Const;
  nd.value = value;
  nd.name = std::move(name);
  nodes_.push_back(std::move(nd));
  return nodes_.size() - 1;
}

std::size_t TapeBuilder::unary(Op op, std::size_t a) {
  Node nd;
  nd.op = op;
  nd.args[0] = a;
  nodes_.push_back(nd);
  return nodes_.size() - 1;
}

std::size_t TapeBuilder::binary(Op op, std::size_t a, std::size_t b) {
  Node nd;
  nd.op = op;
  nd.args[0] = a;
  nd.args[1] = b;
  nodes_.push_back(nd);
  return nodes_.size() - 1;
}

Tape TapeBuilder::build(std::size_t output) const { return Tape(n_inputs_, nodes_, output); }

EvalTrace forward_eval(const Tape& tape, std::span<const double> x,
                       std::optional<std::span<const double>> xi) {
  const std::size_t s = tape.n_switches();
  if (x.size() != tape.n_inputs()) {
    throw ValidationError("expected " + std::to_string(tape.n_inputs()) + " inputs, got " +
                          std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("non-finite input");
  }
  if (xi) {
    if (xi->size() != s) {
      throw ValidationError("xi has length " + std::to_string(xi->size()) + ", expected " +
                            std::to_string(s));
    }
    for (double v : *xi) {
      if (!(std::abs(v) <= 1.0)) throw ValidationError("xi entries must lie in [-1, 1]");
    }
  }

  EvalTrace tr;
  tr.values.resize(tape.size());
  tr.z.resize(s);
  tr.abs_values.resize(s);
  for (std::size_t k = 0; k < tape.size(); ++k) {
    const Node& nd = tape.node(k);
    const double a = nd.args[0] != kNoIndex ? tr.values[nd.args[0]] : 0.0;
    const double b = nd.args[1] != kNoIndex ? tr.values[nd.args[1]] : 0.0;
    double v = 0.0;
    switch (nd.op) {
      case Op::Input: v = x[static_cast<std::size_t>(nd.value)]; break;
      case Op::Const: v = nd.value; break;
      case Op::Add: v = a + b; break;
      case Op::Sub: v = a - b; break;
      case Op::Mul: v = a * b; break;
      case Op::Div:
        if (b == 0.0) throw DomainError("division by zero", k);
        v = a / b;
        break;
      case Op::Neg: v = -a; break;
      case Op::Sin: v = std::sin(a); break;
      case Op::Cos: v = std::cos(a); break;
      case Op::Exp: v = std::exp(a); break;
      case Op::Log:
        if (!(a > 0.0)) throw DomainError("log of non-positive value", k);
        v = std::log(a);
        break;
      case Op::Sqr: v = a * a; break;
      case Op::Abs: {
        const std::size_t i = tape.switch_of_abs(k);
        tr.z[i] = a;
        v = xi ? (*xi)[i] * a : std::abs(a);
        tr.abs_values[i] = v;
        break;
      }
    }
    if (!std::isfinite(v)) throw DomainError("non-finite result", k);
    tr.values[k] = v;
  }
  return tr;
}

std::vector<double> reverse_gradient(const Tape& tape, const EvalTrace& trace,
                                     std::span<const double> abs_slopes) {
  if (abs_slopes.size() != tape.n_switches()) throw ValidationError("abs slope count mismatch");
  std::vector<double> bar(tape.size(), 0.0);
  std::vector<double> grad(tape.n_inputs(), 0.0);
  bar[tape.output()] = 1.0;
  for (std::size_t k = tape.output() + 1; k-- > 0;) {
    const double w = bar[k];
    if (w == 0.0) continue;
    const Node& nd = tape.node(k);
    const std::size_t ia = nd.args[0];
    const std::size_t ib = nd.args[1];
    const double a = ia != kNoIndex ? trace.values[ia] : 0.0;
    const double b = ib != kNoIndex ? trace.values[ib] : 0.0;
    switch (nd.op) {
      case Op::Input: grad[static_cast<std::size_t>(nd.value)] += w; break;
      case Op::Const: break;
      case Op::Add: bar[ia] += w; bar[ib] += w; break;
      case Op::Sub: bar[ia] += w; bar[ib] -= w; break;
      case Op::Mul: bar[ia] += w * b; bar[ib] += w * a; break;
      case Op::Div: bar[ia] += w / b; bar[ib] -= w * a / (b * b); break;
      case Op::Neg: bar[ia] -= w; break;
      case Op::Sin: bar[ia] += w * std::cos(a); break;
      case Op::Cos: bar[ia] -= w * std::sin(a); break;
      case Op::Exp: bar[ia] += w * trace.values[k]; break;
      case Op::Log: bar[ia] += w / a; break;
      case Op::Sqr: bar[ia] += 2.0 * w * a; break;
      case Op::Abs: bar[ia] += w * abs_slopes[tape.switch_of_abs(k)]; break;
    }
  }
  return grad;
}

StructureReport structural_check(const Tape& tape) {
  const std::size_t s = tape.n_switches();
  StructureReport rep;
  rep.n_switches = s;
  rep.depends_on.resize(s);
  std::vector<std::size_t> chain(s, 1);
  std::vector<char> reach(tape.size());
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t seed = tape.switch_arg(i);
    std::fill(reach.begin(), reach.end(), 0);
    reach[seed] = 1;
    std::vector<std::size_t> deps;
    for (std::size_t k = seed + 1; k-- > 0;) {
      if (!reach[k]) continue;
      if (k != seed) {
        std::size_t j = tape.switch_of_abs(k);
        if (j == kNoIndex) {
          j = tape.switch_of_arg(k);
          if (j != kNoIndex && j >= i) j = kNoIndex;
        }
        if (j != kNoIndex) {
          if (j >= i) throw NumericalError("switch " + std::to_string(i) + " reads later switch");
          deps.push_back(j);
          continue;
        }
      }
      const Node& nd = tape.node(k);
      for (std::size_t a = 0; a < op_arity(nd.op); ++a) reach[nd.args[a]] = 1;
    }
    std::sort(deps.begin(), deps.end());
    deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
    for (std::size_t j : deps) chain[i] = std::max(chain[i], chain[j] + 1);
    rep.depends_on[i] = std::move(deps);
  }
  for (std::size_t i = 0; i < s; ++i) rep.depth = std::max(rep.depth, chain[i]);
  return rep;
}

}  // namespace absnf
