#include <string>

#include "absnf/errors.hpp"
#include "absnf/tape.hpp"
#include "json.hpp"

namespace absnf {

using nlohmann::json;

Tape parse_tape(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("problem document must be a JSON object");
  if (!doc.contains("n_inputs") || !doc["n_inputs"].is_number_unsigned()) {
    throw ParseError("missing or invalid 'n_inputs'");
  }
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw ParseError("missing 'nodes' array");
  if (!doc.contains("output") || !doc["output"].is_number_unsigned()) {
    throw ParseError("missing or invalid 'output'");
  }
  const auto n_inputs = doc["n_inputs"].get<std::size_t>();
  std::vector<Node> nodes;
  std::size_t inputs_seen = 0;
  const auto& jnodes = doc["nodes"];
  for (std::size_t k = 0; k < jnodes.size(); ++k) {
    const auto& jn = jnodes[k];
    if (!jn.is_object() || !jn.contains("op") || !jn["op"].is_string()) {
      throw ParseError("node needs a string 'op'", k);
    }
    const auto op_str = jn["op"].get<std::string>();
    const auto op = op_from_name(op_str);
    if (!op) throw ParseError("unknown op '" + op_str + "'", k);
    Node nd;
    nd.op = *op;
    std::vector<long long> args;
    if (jn.contains("args")) {
      if (!jn["args"].is_array()) throw ParseError("'args' must be an array", k);
      for (const auto& a : jn["args"]) {
        if (!a.is_number_integer()) throw ParseError("argument indices must be integers", k);
        args.push_back(a.get<long long>());
      }
    }
    if (args.size() != op_arity(nd.op)) {
      throw ParseError("op '" + op_str + "' takes " + std::to_string(op_arity(nd.op)) +
                           " argument(s), got " + std::to_string(args.size()),
                       k);
    }
    for (std::size_t a = 0; a < args.size(); ++a) {
      if (args[a] < 0) throw ParseError("negative argument index", k);
      if (static_cast<std::size_t>(args[a]) >= k) {
        throw ParseError("forward reference to node " + std::to_string(args[a]), k);
      }
      nd.args[a] = static_cast<std::size_t>(args[a]);
    }
    if (jn.contains("value")) {
      if (!jn["value"].is_number()) throw ParseError("'value' must be a number", k);
      nd.value = jn["value"].get<double>();
    } else if (nd.op == Op::Const) {
      throw ParseError("const node needs a 'value'", k);
    } else if (nd.op == Op::Input) {
      nd.value = static_cast<double>(inputs_seen);
    }
    if (nd.op == Op::Input) ++inputs_seen;
    if (jn.contains("name")) {
      if (!jn["name"].is_string()) throw ParseError("'name' must be a string", k);
      nd.name = jn["name"].get<std::string>();
    }
    nodes.push_back(std::move(nd));
  }
  return Tape(n_inputs, std::move(nodes), doc["output"].get<std::size_t>());
}

std::string tape_to_json(const Tape& tape) {
  json nodes = json::array();
  for (const Node& nd : tape.nodes()) {
    json jn;
    jn["op"] = std::string(op_name(nd.op));
    json args = json::array();
    for (std::size_t a = 0; a < op_arity(nd.op); ++a) args.push_back(nd.args[a]);
    jn["args"] = args;
    if (nd.op == Op::Input) jn["value"] = static_cast<std::size_t>(nd.value);
    if (nd.op == Op::Const) jn["value"] = nd.value;
    if (!nd.name.empty()) jn["name"] = nd.name;
    nodes.push_back(std::move(jn));
  }
  json doc;
  doc["n_inputs"] = tape.n_inputs();
  doc["nodes"] = std::move(nodes);
  doc["output"] = tape.output();
  return doc.dump();
}

}  // namespace absnf
