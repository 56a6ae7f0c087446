#include "absnf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "absnf/errors.hpp"
#include "absnf/format.hpp"
#include "absnf/random.hpp"

namespace absnf {

namespace {

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

Eigen::VectorXd fd_gradient(const Tape& tape, std::span<const double> x, double h,
                            double kink_tol) {
  if (!(h > 0.0)) throw ValidationError("step h must be positive");
  const EvalTrace center = forward_eval(tape, x);
  const Signature sigma = Signature::of(center.z, kink_tol);
  if (!sigma.definite()) throw KinkCrossingError("a switch vanishes at the stencil center");
  std::vector<double> xp(x.begin(), x.end());
  Eigen::VectorXd g(static_cast<Eigen::Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) {
    xp[k] = x[k] + h;
    const EvalTrace fp = forward_eval(tape, xp);
    xp[k] = x[k] - h;
    const EvalTrace fm = forward_eval(tape, xp);
    xp[k] = x[k];
    if (Signature::of(fp.z, kink_tol) != sigma || Signature::of(fm.z, kink_tol) != sigma) {
      throw KinkCrossingError("stencil along coordinate " + std::to_string(k) +
                              " crosses a kink; shrink h");
    }
    g[static_cast<Eigen::Index>(k)] = (fp.result(tape) - fm.result(tape)) / (2.0 * h);
  }
  return g;
}

void validate(const SamplingPlan& plan) {
  if (!(plan.radius > 0.0)) throw ValidationError("sampling radius must be positive");
  if (plan.count < 1) throw ValidationError("sample count must be at least 1");
  if (!(plan.kink_tol >= 0.0)) throw ValidationError("kink tolerance must be non-negative");
  if (plan.cluster_tol && !(*plan.cluster_tol > 0.0)) {
    throw ValidationError("cluster tolerance must be positive");
  }
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

BouligandSample sample_bouligand(const Tape& tape, std::span<const double> x_bar,
                                 const SamplingPlan& plan) {
  validate(plan);
  const std::size_t n = tape.n_inputs();
  if (x_bar.size() != n) throw ValidationError("anchor dimension mismatch");

  const AbsNormalPoint anchor = extract(tape, x_bar, plan.kink_tol);
  Rng rng(plan.seed);
  BouligandSample out;
  std::map<Signature, Eigen::VectorXd> anchor_cache;

  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (std::size_t draw = 0; draw < plan.count; ++draw) {
    // Uniform in the ball: Gaussian direction, radius r * U^(1/n).
    double norm = 0.0;
    do {
      for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = rng.normal();
      norm = x.norm();
    } while (norm == 0.0);
    const double rho = plan.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = x_bar[static_cast<std::size_t>(k)] + rho * x[k] / norm;

    const EvalTrace tr = forward_eval(tape, view(x));
    Signature sigma = Signature::of(tr.z, plan.kink_tol);
    if (!sigma.definite()) {
      ++out.rejected;
      continue;
    }
    Eigen::VectorXd g;
    if (plan.at_anchor) {
      auto it = anchor_cache.find(sigma);
      if (it == anchor_cache.end()) {
        Eigen::VectorXd ga;
        if (precedes(anchor.sigma, sigma)) {
          ga = grad_sigma(anchor, sigma);
        } else {
          // Radius too large for sigma >= sigma_bar: differentiate phi_sigma
          // directly along its own fixed-signature trace at the anchor.
          const Eigen::VectorXd w = sigma.as_vector();
          const EvalTrace fixed = forward_eval(tape, x_bar, view(w));
          const auto gr = reverse_gradient(tape, fixed, view(w));
          ga = Eigen::Map<const Eigen::VectorXd>(gr.data(), static_cast<Eigen::Index>(gr.size()));
        }
        it = anchor_cache.emplace(sigma, std::move(ga)).first;
      }
      g = it->second;
    } else {
      g = grad_sigma(extract(tape, view(x), plan.kink_tol), sigma);
    }
    out.samples.push_back({x, std::move(sigma), std::move(g)});
  }
  if (out.samples.empty()) {
    throw NumericalError("no differentiable samples; enlarge the radius or lower kink_tol");
  }

  double max_norm = 0.0;
  for (const auto& r : out.samples) max_norm = std::max(max_norm, r.gradient.norm());
  out.cluster_tol = plan.cluster_tol.value_or(1e-3 * (1.0 + max_norm));

  // Single linkage over the distinct gradient vectors.
  std::vector<std::size_t> rep_of(out.samples.size());
  std::vector<std::size_t> reps;
  {
    std::map<std::vector<double>, std::size_t> seen;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
      const auto& g = out.samples[i].gradient;
      std::vector<double> key(g.data(), g.data() + g.size());
      auto [it, inserted] = seen.emplace(std::move(key), reps.size());
      if (inserted) reps.push_back(i);
      rep_of[i] = it->second;
    }
  }
  DisjointSets ds(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      if ((out.samples[reps[i]].gradient - out.samples[reps[j]].gradient).norm() <= out.cluster_tol) {
        ds.unite(i, j);
      }
    }
  }

  // Clusters in order of their first sample.
  std::map<std::size_t, std::size_t> cluster_index;
  struct Acc {
    Eigen::VectorXd sum;
    std::size_t count = 0;
    std::map<Signature, std::size_t> votes;
  };
  std::vector<Acc> acc;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const std::size_t root = ds.find(rep_of[i]);
    auto [it, inserted] = cluster_index.emplace(root, acc.size());
    if (inserted) acc.push_back({Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)), 0, {}});
    Acc& a = acc[it->second];
    a.sum += out.samples[i].gradient;
    ++a.count;
    ++a.votes[out.samples[i].sigma];
  }
  out.set.anchor = Eigen::Map<const Eigen::VectorXd>(x_bar.data(), static_cast<Eigen::Index>(n));
  out.set.likq = Likq::Unknown;
  out.set.label = "sampled cluster centers";
  for (auto& a : acc) {
    // most frequent member signature, ties to the smallest
    auto best = a.votes.begin();
    for (auto it = a.votes.begin(); it != a.votes.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    out.set.gradients.push_back({best->first, a.sum / static_cast<double>(a.count), a.count});
  }
  return out;
}

std::string samples_to_csv(const BouligandSample& sample) {
  std::ostringstream out;
  if (sample.samples.empty()) return {};
  const auto n = sample.samples.front().x.size();
  const auto s = sample.samples.front().sigma.size();
  for (Eigen::Index k = 0; k < n; ++k) out << (k ? "," : "") << "x_" << k + 1;
  for (std::size_t i = 0; i < s; ++i) out << ",sigma_" << i + 1;
  for (Eigen::Index k = 0; k < n; ++k) out << ",g_" << k + 1;
  out << '\n';
  for (const auto& r : sample.samples) {
    for (Eigen::Index k = 0; k < n; ++k) out << (k ? "," : "") << format_number(r.x[k]);
    for (std::size_t i = 0; i < s; ++i) out << ',' << r.sigma[i];
    for (Eigen::Index k = 0; k < n; ++k) out << ',' << format_number(r.gradient[k]);
    out << '\n';
  }
  return out.str();
}

}  // namespace absnf
