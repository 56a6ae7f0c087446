#include "absnf/problems.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "absnf/errors.hpp"

namespace absnf {

Tape phimu_tape(double mu) {
  TapeBuilder tb(2);
  const auto x1 = tb.input(0);
  const auto x2 = tb.input(1);
  const auto a1 = tb.abs(x1);
  const auto a2 = tb.abs(tb.sub(x2, x1));
  const auto inner = tb.sub(tb.sub(tb.constant(1.0), tb.unary(Op::Cos, x1)), tb.unary(Op::Sin, x2));
  const auto a3 = tb.abs(inner);
  const auto out = tb.add(tb.add(a1, a2), tb.mul(tb.constant(mu, "mu"), a3));
  return tb.build(out);
}

Tape load_problem(std::string_view spec) {
  if (spec == "builtin:phimu") return phimu_tape(1.0);
  if (spec.starts_with("builtin:")) throw ValidationError("unknown builtin problem '" + std::string(spec) + "'");
  std::ifstream in{std::string(spec)};
  if (!in) throw ValidationError("cannot open problem file '" + std::string(spec) + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_tape(buf.str());
}

}  // namespace absnf
