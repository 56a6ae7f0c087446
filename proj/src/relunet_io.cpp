#include <sstream>

#include "absnf/errors.hpp"
#include "absnf/format.hpp"
#include "absnf/relunet.hpp"
#include "json.hpp"

namespace absnf {

using nlohmann::json;

namespace {

json parse_object(std::string_view document, const char* what) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(std::string(what) + " document must be a JSON object");
  return doc;
}

Eigen::VectorXd to_vector(const json& j, const std::string& where) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw ParseError(where + " must be a number array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ParseError(where + " must be a number array");
    v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return v;
}

}  // namespace

NetDocument parse_net(std::string_view document) {
  const json doc = parse_object(document, "network");
  NetDocument out;
  if (!doc.contains("layer_dims") || !doc["layer_dims"].is_array()) {
    throw ParseError("missing 'layer_dims' array");
  }
  for (const auto& w : doc["layer_dims"]) {
    if (!w.is_number_unsigned()) throw ParseError("'layer_dims' entries must be positive integers");
    out.spec.layer_dims.push_back(w.get<std::size_t>());
  }
  const std::string head = doc.value("head", "identity");
  if (head == "identity") {
    out.spec.head = Head::Identity;
  } else if (head == "softmax") {
    out.spec.head = Head::Softmax;
  } else {
    throw ParseError("unknown head '" + head + "'");
  }
  const std::string loss = doc.value("loss", out.spec.head == Head::Softmax ? "cross_entropy" : "squared");
  if (loss == "squared") {
    out.spec.loss = Loss::Squared;
  } else if (loss == "cross_entropy") {
    out.spec.loss = Loss::CrossEntropy;
  } else {
    throw ParseError("unknown loss '" + loss + "'");
  }
  validate(out.spec);

  const bool has_w = doc.contains("weights");
  const bool has_b = doc.contains("biases");
  if (has_w != has_b) throw ParseError("'weights' and 'biases' must be given together");
  if (!has_w) return out;

  const auto& spec = out.spec;
  const std::size_t layers = spec.layer_dims.size() - 1;
  const auto& jw = doc["weights"];
  const auto& jb = doc["biases"];
  if (!jw.is_array() || jw.size() != layers || !jb.is_array() || jb.size() != layers) {
    throw ValidationError("'weights' and 'biases' need one entry per layer (" +
                          std::to_string(layers) + ")");
  }
  Eigen::VectorXd params(static_cast<Eigen::Index>(spec.n_params()));
  for (std::size_t t = 1; t <= layers; ++t) {
    const auto& m = jw[t - 1];
    const std::size_t rows = spec.layer_dims[t];
    const std::size_t cols = spec.layer_dims[t - 1];
    const std::string where = "weights[" + std::to_string(t - 1) + "]";
    if (!m.is_array() || m.size() != rows) {
      throw ValidationError(where + " must have " + std::to_string(rows) + " rows");
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const Eigen::VectorXd row = to_vector(m[r], where);
      if (static_cast<std::size_t>(row.size()) != cols) {
        throw ValidationError(where + " rows must have " + std::to_string(cols) + " entries");
      }
      params.segment(static_cast<Eigen::Index>(spec.weight_offset(t) + r * cols),
                     static_cast<Eigen::Index>(cols)) = row;
    }
    const Eigen::VectorXd bv = to_vector(jb[t - 1], "biases[" + std::to_string(t - 1) + "]");
    if (static_cast<std::size_t>(bv.size()) != rows) {
      throw ValidationError("biases[" + std::to_string(t - 1) + "] must have " +
                            std::to_string(rows) + " entries");
    }
    params.segment(static_cast<Eigen::Index>(spec.bias_offset(t)), static_cast<Eigen::Index>(rows)) = bv;
  }
  out.params = std::move(params);
  return out;
}

std::string net_to_json(const ReluNetSpec& spec, const Eigen::VectorXd& params) {
  validate(spec);
  if (static_cast<std::size_t>(params.size()) != spec.n_params()) {
    throw ValidationError("parameter vector does not match the network");
  }
  json doc;
  doc["layer_dims"] = spec.layer_dims;
  doc["head"] = spec.head == Head::Identity ? "identity" : "softmax";
  doc["loss"] = spec.loss == Loss::Squared ? "squared" : "cross_entropy";
  json weights = json::array();
  json biases = json::array();
  for (std::size_t t = 1; t < spec.layer_dims.size(); ++t) {
    const std::size_t rows = spec.layer_dims[t];
    const std::size_t cols = spec.layer_dims[t - 1];
    json m = json::array();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* p = params.data() + spec.weight_offset(t) + r * cols;
      m.push_back(std::vector<double>(p, p + cols));
    }
    weights.push_back(std::move(m));
    const double* p = params.data() + spec.bias_offset(t);
    biases.push_back(std::vector<double>(p, p + rows));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  return doc.dump(2) + "\n";
}

Dataset parse_dataset(std::string_view document) {
  const json doc = parse_object(document, "dataset");
  if (!doc.contains("inputs") || !doc["inputs"].is_array() || !doc.contains("labels") ||
      !doc["labels"].is_array()) {
    throw ParseError("dataset needs 'inputs' and 'labels' arrays");
  }
  Dataset data;
  for (std::size_t j = 0; j < doc["inputs"].size(); ++j) {
    data.inputs.push_back(to_vector(doc["inputs"][j], "inputs[" + std::to_string(j) + "]"));
  }
  for (std::size_t j = 0; j < doc["labels"].size(); ++j) {
    data.labels.push_back(to_vector(doc["labels"][j], "labels[" + std::to_string(j) + "]"));
  }
  return data;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "iteration,loss,grad_norm\n";
  for (const auto& r : traj.rows) {
    out << r.iteration << ',' << format_number(r.loss) << ',' << format_number(r.grad_norm) << '\n';
  }
  return out.str();
}

}  // namespace absnf
