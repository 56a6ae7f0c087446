#include <sstream>

#include "absnf/format.hpp"
#include "absnf/gradients.hpp"
#include "json.hpp"

namespace absnf {

namespace {

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string to_json(const GradientSet& gset) {
  nlohmann::json j;
  j["anchor"] = as_std(gset.anchor);
  j["likq"] = likq_name(gset.likq);
  j["label"] = gset.label;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : gset.gradients) {
    nlohmann::json r;
    r["signature"] = e.signature.entries();
    r["gradient"] = as_std(e.gradient);
    r["count"] = e.count;
    rows.push_back(std::move(r));
  }
  j["gradients"] = std::move(rows);
  return j.dump(2);
}

std::string to_csv(const GradientSet& gset) {
  std::ostringstream out;
  const std::size_t s = gset.gradients.empty() ? 0 : gset.gradients.front().signature.size();
  bool first = true;
  auto sep = [&] {
    if (!first) out << ',';
    first = false;
  };
  for (std::size_t i = 0; i < s; ++i) {
    sep();
    out << "sigma_" << i + 1;
  }
  for (std::size_t i = 0; i < gset.n(); ++i) {
    sep();
    out << "g_" << i + 1;
  }
  out << '\n';
  for (const auto& e : gset.gradients) {
    first = true;
    for (std::size_t i = 0; i < e.signature.size(); ++i) {
      sep();
      out << e.signature[i];
    }
    for (Eigen::Index i = 0; i < e.gradient.size(); ++i) {
      sep();
      out << format_number(e.gradient[i]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace absnf
