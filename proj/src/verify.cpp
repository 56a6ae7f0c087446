#include "absnf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "absnf/errors.hpp"
#include "absnf/format.hpp"
#include "absnf/gradients.hpp"
#include "absnf/oracle.hpp"

namespace absnf {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t k) { return static_cast<Index>(k); }

double dyadic(Rng& rng, int steps, double unit) {
  return unit * static_cast<double>(static_cast<long>(rng.index(0, 2 * steps)) - steps);
}

// Hidden pre-activations of one sample, layer by layer.
Eigen::VectorXd hidden_z(const ReluNetSpec& spec, const Dataset& data, std::size_t j,
                         const Eigen::VectorXd& params) {
  return build_absnormal(spec, data, j, params, 0.0).z;
}

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

double random_policy(Rng& rng) {
  switch (rng.index(0, 4)) {
    case 0: return 0.0;
    case 1: return 1.0;
    case 2: return -1.0;
    default: return rng.uniform(-1.0, 1.0);
  }
}

SuiteReport::Metric& metric(SuiteReport& r, const std::string& name, double bound, bool upper = true) {
  for (auto& m : r.metrics) {
    if (m.name == name) return m;
  }
  r.metrics.push_back({name, upper ? 0.0 : std::numeric_limits<double>::infinity(), bound, upper});
  return r.metrics.back();
}

}  // namespace

void SuiteReport::record(const std::string& name, double value) {
  auto it = std::find_if(metrics.begin(), metrics.end(), [&](const Metric& m) { return m.name == name; });
  if (it == metrics.end()) throw ValidationError("unknown metric " + name);
  it->worst = it->upper ? std::max(it->worst, value) : std::min(it->worst, value);
  const bool ok = it->upper ? value <= it->bound : value >= it->bound;
  if (!ok || std::isnan(value)) {
    passed = false;
    if (failures.size() < 10) {
      failures.push_back("instance " + std::to_string(instances) + ": " + name + " = " +
                         format_number(value));
    }
  }
}

std::string SuiteReport::summary() const {
  std::ostringstream out;
  out << name << ": " << (passed ? "pass" : "FAIL") << " (" << instances << " instances)";
  for (const auto& m : metrics) {
    out << ' ' << m.name << '=' << format_number(m.worst) << (m.upper ? "<=" : ">=")
        << format_number(m.bound);
  }
  return out.str();
}

NetInstance random_net_instance(Rng& rng, const RandomNetOptions& opt) {
  if (opt.max_hidden_layers < 1 || opt.max_width < 1 || opt.max_samples < 1) {
    throw ValidationError("random network options must allow at least one layer, unit and sample");
  }
  for (int attempt = 0; attempt < 10000; ++attempt) {
    NetInstance inst;
    auto& spec = inst.spec;
    const std::size_t T = rng.index(1, opt.max_hidden_layers);
    spec.layer_dims.push_back(rng.index(1, 3));
    std::size_t s = 0;
    for (std::size_t t = 1; t <= T; ++t) {
      spec.layer_dims.push_back(rng.index(1, opt.max_width));
      s += spec.layer_dims.back();
    }
    if (s > opt.max_switches) continue;
    const std::size_t M = rng.index(1, 3);
    spec.layer_dims.push_back(M);
    if (M >= 2 && rng.uniform() < 0.5) {
      spec.head = Head::Softmax;
      spec.loss = Loss::CrossEntropy;
    }
    const std::size_t J = rng.index(1, opt.max_samples);
    const std::size_t N0 = spec.layer_dims[0];
    const std::size_t N1 = spec.layer_dims[1];

    auto& params = inst.params;
    params.resize(idx(spec.n_params()));
    for (Index k = 0; k < params.size(); ++k) {
      params[k] = opt.kinked ? dyadic(rng, 4, 0.25) : rng.uniform(-1.0, 1.0);
    }
    for (std::size_t j = 0; j < J; ++j) {
      Eigen::VectorXd u(idx(N0));
      for (Index c = 0; c < u.size(); ++c) u[c] = opt.kinked ? dyadic(rng, 4, 0.5) : rng.uniform(-2.0, 2.0);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(idx(M));
      if (spec.loss == Loss::CrossEntropy) {
        v[idx(rng.index(0, M - 1))] = 1.0;
      } else {
        for (Index m = 0; m < v.size(); ++m) v[m] = dyadic(rng, 4, 0.5);
      }
      inst.data.inputs.push_back(std::move(u));
      inst.data.labels.push_back(std::move(v));
      inst.batch.push_back(j);
    }

    if (opt.kinked) {
      // Sample j kinks at first-layer unit r_j: W1[r_j, 0] = 1 and u_0 solves z = 0.
      std::vector<std::size_t> target(J);
      for (std::size_t j = 0; j < J; ++j) {
        target[j] = rng.index(0, N1 - 1);
        params[idx(spec.weight_offset(1) + target[j] * N0)] = 1.0;
      }
      for (std::size_t j = 0; j < J; ++j) {
        const std::size_t r = target[j];
        double rest = params[idx(spec.bias_offset(1) + r)];
        for (std::size_t c = 1; c < N0; ++c) {
          rest += params[idx(spec.weight_offset(1) + r * N0 + c)] * inst.data.inputs[j][idx(c)];
        }
        inst.data.inputs[j][0] = -rest;
      }
      // Occasionally a second-layer unit of sample 0 vanishes too, via its bias.
      if (T >= 2 && rng.uniform() < 0.5) {
        const Eigen::VectorXd z = hidden_z(spec, inst.data, 0, params);
        const std::size_t r = rng.index(0, spec.layer_dims[2] - 1);
        double acc = 0.0;
        for (std::size_t c = 0; c < N1; ++c) {
          const double zc = z[idx(c)];
          acc += params[idx(spec.weight_offset(2) + r * N1 + c)] * 0.5 * (zc + std::abs(zc));
        }
        params[idx(spec.bias_offset(2) + r)] = -acc;
      }
    }

    bool ok = true;
    for (std::size_t j = 0; j < J && ok; ++j) {
      const Eigen::VectorXd z = hidden_z(spec, inst.data, j, params);
      bool kink = false;
      for (Index k = 0; k < z.size(); ++k) {
        if (z[k] == 0.0 && opt.kinked) {
          kink = true;
        } else if (std::abs(z[k]) < opt.margin) {
          ok = false;
        }
      }
      if (opt.kinked && !kink) ok = false;
    }
    if (ok) return inst;
  }
  throw NumericalError("could not generate a random network instance");
}

SuiteReport verify_convex_combination(std::size_t instances, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "convex_combination";
  metric(rep, "combination_rel_err", 1e-10);
  metric(rep, "beta_sum_err", 1e-12);
  metric(rep, "beta_moment_err", 1e-12);
  metric(rep, "beta_min", 0.0, false);
  Rng rng(seed);
  for (std::size_t inst = 0; inst < instances; ++inst) {
    RandomInstanceOptions o;
    o.n = rng.index(1, 8);
    o.s = rng.index(1, 20);
    o.active = rng.index(1, std::min<std::size_t>(10, o.s));
    o.coupling = rng.uniform(0.0, 1.0);
    const AbsNormalPoint p = random_abs_normal_point(rng, o);
    Eigen::VectorXd xi = p.sigma.as_vector();
    for (std::size_t k : p.alpha) xi[idx(k)] = random_policy(rng);
    const XiChoice choice = XiChoice::make(p.sigma, xi);
    const Eigen::VectorXd g = grad_xi(p, choice);

    Eigen::VectorXd combo = Eigen::VectorXd::Zero(g.size());
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(xi.size());
    double sum = 0.0, beta_min = 1.0;
    for (const auto& term : beta_coefficients(p.sigma, choice)) {
      combo += term.beta * grad_sigma(p, term.sigma);
      moment += term.beta * term.sigma.as_vector();
      sum += term.beta;
      beta_min = std::min(beta_min, term.beta);
    }
    rep.record("combination_rel_err", (combo - g).norm() / (1.0 + g.norm()));
    rep.record("beta_sum_err", std::abs(sum - 1.0));
    rep.record("beta_moment_err", (moment - xi).cwiseAbs().maxCoeff());
    rep.record("beta_min", beta_min);
    ++rep.instances;
  }
  return rep;
}

SuiteReport verify_rank_stability(std::size_t instances, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "rank_stability";
  metric(rep, "rank_deficit", 0.0);
  Rng rng(seed);
  while (rep.instances < instances) {
    RandomInstanceOptions o;
    o.active = rng.index(1, 8);
    o.s = o.active + rng.index(0, 6);
    o.n = o.active + rng.index(0, 4);
    o.coupling = rng.uniform(0.0, 1.0);
    const AbsNormalPoint p = random_abs_normal_point(rng, o);
    if (!check_likq(p).holds) continue;
    const RankStabilityReport r = check_rank_stability(p);
    std::size_t deficit = 0;
    for (const auto& [sigma, rank] : r.ranks) deficit = std::max(deficit, r.required - rank);
    rep.record("rank_deficit", static_cast<double>(deficit));
    ++rep.instances;
  }
  return rep;
}

SuiteReport verify_batch_decomposition(std::size_t instances, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "batch_decomposition";
  metric(rep, "decomposition_rel_err", 1e-10);
  metric(rep, "certificate_min", 1.0 - 1e-9, false);
  metric(rep, "sign_mismatches", 0.0);
  metric(rep, "min_active_per_sample", 1.0, false);
  Rng rng(seed);
  RandomNetOptions opt;
  opt.max_switches = 12;
  opt.max_width = 6;
  constexpr double eps = 1e-4;
  for (std::size_t inst = 0; inst < instances; ++inst) {
    const NetInstance net = random_net_instance(rng, opt);
    const std::size_t s = net.spec.n_switches();
    Eigen::VectorXd zeta(idx(s));
    for (Index k = 0; k < zeta.size(); ++k) zeta[k] = random_policy(rng);
    const BatchContext ctx = BatchContext::make(net.spec, net.data, net.batch, net.params, zeta);
    const Eigen::VectorXd g = batch_gradient(ctx);
    std::size_t min_active = s;
    for (const auto& p : ctx.points()) min_active = std::min(min_active, p.alpha.size());
    rep.record("min_active_per_sample", static_cast<double>(min_active));

    const double J = static_cast<double>(ctx.points().size());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(g.size());
    double worst_cert = std::numeric_limits<double>::infinity();
    std::size_t mismatches = 0;
    for (const Signature& tau : definite_successors(Signature(std::vector<int>(s, 0)))) {
      double gamma = 1.0;
      for (std::size_t i = 0; i < s; ++i) gamma *= (tau[i] * zeta[idx(i)] + 1.0) / 2.0;
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(g.size());
      std::vector<Signature> targets;
      for (const auto& p : ctx.points()) {
        targets.push_back(sample_sigma(p.sigma, tau));
        mean += grad_sigma(p, targets.back());
      }
      sum += gamma * mean / J;

      const TauDirection dir = tau_direction(ctx, tau);
      worst_cert = std::min(worst_cert, dir.min_certificate);
      const Eigen::VectorXd moved = net.params + eps * dir.d;
      for (std::size_t j = 0; j < net.batch.size(); ++j) {
        const Eigen::VectorXd z = hidden_z(net.spec, net.data, net.batch[j], moved);
        if (Signature::of(view(z)) != targets[j]) ++mismatches;
      }
    }
    rep.record("decomposition_rel_err", (sum - g).norm() / (1.0 + g.norm()));
    rep.record("certificate_min", worst_cert);
    rep.record("sign_mismatches", static_cast<double>(mismatches));
    ++rep.instances;
  }
  return rep;
}

SuiteReport verify_net_likq(std::size_t instances, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "net_likq";
  metric(rep, "likq_failures", 0.0);
  Rng rng(seed);
  RandomNetOptions opt;
  for (std::size_t inst = 0; inst < instances; ++inst) {
    opt.kinked = rng.uniform() < 0.5;
    const NetInstance net = random_net_instance(rng, opt);
    std::size_t failures = 0;
    for (std::size_t j : net.batch) {
      if (!check_likq(build_absnormal(net.spec, net.data, j, net.params)).holds) ++failures;
    }
    rep.record("likq_failures", static_cast<double>(failures));
    ++rep.instances;
  }
  return rep;
}

SuiteReport verify_smooth_tapes(std::size_t instances, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "smooth_tapes";
  metric(rep, "fd_rel_err", 1e-5);
  Rng rng(seed);
  while (rep.instances < instances) {
    RandomTapeOptions o;
    o.n_inputs = rng.index(1, 5);
    o.n_ops = rng.index(6, 24);
    o.n_abs = rng.index(1, 5);
    const Tape tape = random_tape(rng, o);
    for (int attempt = 0; attempt < 20; ++attempt) {
      std::vector<double> x(tape.n_inputs());
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      try {
        const AbsNormalPoint p = extract(tape, x);
        if (!p.alpha.empty()) continue;
        const Eigen::VectorXd fd = fd_gradient(tape, x);
        rep.record("fd_rel_err", (grad_sigma(p, p.sigma) - fd).norm() / (1.0 + fd.norm()));
        ++rep.instances;
        break;
      } catch (const KinkCrossingError&) {
      }
    }
  }
  return rep;
}

SuiteReport verify_smooth_nets(std::size_t instances, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "smooth_nets";
  metric(rep, "fd_rel_err", 1e-5);
  metric(rep, "tape_rel_err", 1e-10);
  Rng rng(seed);
  RandomNetOptions opt;
  opt.kinked = false;
  opt.max_width = 5;
  opt.max_switches = 12;
  for (std::size_t inst = 0; inst < instances; ++inst) {
    const NetInstance net = random_net_instance(rng, opt);
    const std::size_t s = net.spec.n_switches();
    const BatchContext ctx = BatchContext::make(net.spec, net.data, net.batch, net.params,
                                                Eigen::VectorXd::Zero(idx(s)));
    const Eigen::VectorXd g = batch_gradient(ctx);
    const Tape tape = to_tape(net.spec, net.data, net.batch, net.params);
    const Eigen::VectorXd fd = fd_gradient(tape, view(net.params));
    const AbsNormalPoint p = extract(tape, view(net.params));
    const Eigen::VectorXd gt = grad_sigma(p, p.sigma);
    rep.record("fd_rel_err", (g - fd).norm() / (1.0 + fd.norm()));
    rep.record("tape_rel_err", (g - gt).norm() / (1.0 + gt.norm()));
    ++rep.instances;
  }
  return rep;
}

}  // namespace absnf
