#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace absnf {

enum class Op { Input, Const, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp, Log, Sqr, Abs };

std::string_view op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);
std::size_t op_arity(Op op);

inline constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

struct Node {
  Op op = Op::Const;
  std::size_t args[2] = {kNoIndex, kNoIndex};
  // Constant value for `Const`, input position for `Input`.
  double value = 0.0;
  // Optional label; a named constant can be overridden after parsing.
  std::string name;
};

// Straight-line program for a scalar abs-smooth function. Every node refers
// to strictly earlier nodes only. Each `Abs` node introduces one switching
// variable; switching indices follow the tape order of the abs nodes.
class Tape {
 public:
  // Validates the node list; throws ParseError naming the first bad node.
  Tape(std::size_t n_inputs, std::vector<Node> nodes, std::size_t output);

  std::size_t n_inputs() const { return n_inputs_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t output() const { return output_; }
  const Node& node(std::size_t k) const { return nodes_[k]; }
  std::span<const Node> nodes() const { return nodes_; }

  // Number of switching variables s.
  std::size_t n_switches() const { return abs_nodes_.size(); }
  // Tape position of the abs node of switch i.
  std::size_t abs_node(std::size_t i) const { return abs_nodes_[i]; }
  // Tape position of the node whose value is z_i.
  std::size_t switch_arg(std::size_t i) const { return nodes_[abs_nodes_[i]].args[0]; }
  // Switch index of an abs node, or kNoIndex.
  std::size_t switch_of_abs(std::size_t k) const { return switch_of_abs_[k]; }
  // Lowest switch index whose argument is node k, or kNoIndex. Input nodes
  // are never reported: reading an input is always an x-use.
  std::size_t switch_of_arg(std::size_t k) const { return switch_of_arg_[k]; }

  // Copy of this tape with every constant named `name` set to `value`.
  // Throws ValidationError when no such constant exists.
  Tape with_constant(std::string_view name, double value) const;

 private:
  std::size_t n_inputs_;
  std::vector<Node> nodes_;
  std::size_t output_;
  std::vector<std::size_t> abs_nodes_;
  std::vector<std::size_t> switch_of_abs_;
  std::vector<std::size_t> switch_of_arg_;
};

// Incremental construction helper; `build` runs the Tape validation.
class TapeBuilder {
 public:
  explicit TapeBuilder(std::size_t n_inputs) : n_inputs_(n_inputs) {}

  std::size_t input(std::size_t k);
  std::size_t constant(double value, std::string name = {});
  std::size_t unary(Op op, std::size_t a);
  std::size_t binary(Op op, std::size_t a, std::size_t b);

  std::size_t add(std::size_t a, std::size_t b) { return binary(Op::Add, a, b); }
  std::size_t sub(std::size_t a, std::size_t b) { return binary(Op::Sub, a, b); }
  std::size_t mul(std::size_t a, std::size_t b) { return binary(Op::Mul, a, b); }
  std::size_t abs(std::size_t a) { return unary(Op::Abs, a); }

  std::size_t size() const { return nodes_.size(); }
  std::size_t n_inputs() const { return n_inputs_; }
  Tape build(std::size_t output) const;

 private:
  std::size_t n_inputs_;
  std::vector<Node> nodes_;
};

struct EvalTrace {
  std::vector<double> values;      // one per node
  std::vector<double> z;           // abs arguments, switching order
  std::vector<double> abs_values;  // |z_i|, or xi_i * z_i under a fixed xi

  double result(const Tape& tape) const { return values[tape.output()]; }
};

// Forward sweep. Without `xi` this realizes the unique solution z[x] of the
// switching equation; with `xi` every abs node returns xi_i * z_i instead.
// Throws DomainError for div by zero or log of a non-positive value.
EvalTrace forward_eval(const Tape& tape, std::span<const double> x,
                       std::optional<std::span<const double>> xi = std::nullopt);

// Plain backward-mode sweep over a trace, using `abs_slopes[i]` as the
// derivative of the i-th abs node. This is what an AD tool does with a
// fixed choice of d|.|(0). Returns the gradient with respect to x.
std::vector<double> reverse_gradient(const Tape& tape, const EvalTrace& trace,
                                     std::span<const double> abs_slopes);

struct StructureReport {
  std::size_t n_switches = 0;
  // For each switch i, the sorted switches j < i that c_i reads through
  // |z_j| or z_j.
  std::vector<std::vector<std::size_t>> depends_on;
  // Length of the longest dependency chain (1 when no switch depends on
  // another, 0 for s = 0).
  std::size_t depth = 0;
};

// Audits the strict lower triangularity of the switching dependencies.
StructureReport structural_check(const Tape& tape);

// JSON problem format:
//   {"n_inputs": n, "nodes": [{"op": "...", "args": [...], "value": v}], "output": k}
Tape parse_tape(std::string_view document);
std::string tape_to_json(const Tape& tape);

}  // namespace absnf
