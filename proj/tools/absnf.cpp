#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absnf/errors.hpp"
#include "absnf/format.hpp"
#include "absnf/gradients.hpp"
#include "absnf/oracle.hpp"
#include "absnf/presets.hpp"
#include "absnf/problems.hpp"
#include "absnf/relunet.hpp"
#include "absnf/verify.hpp"
#include "json.hpp"

using namespace absnf;
using nlohmann::json;

namespace {

struct Common {
  std::string problem = "builtin:phimu";
  std::optional<double> mu;
  std::vector<double> x;
  double kink_tol = kDefaultKinkTol;
  std::string format = "text";
  std::string output;
};

void add_common(CLI::App* sub, Common& c, std::vector<std::string> formats) {
  sub->add_option("--problem", c.problem, "problem JSON file or builtin:phimu")->capture_default_str();
  sub->add_option("--mu", c.mu, "override the constant named mu");
  sub->add_option("--x", c.x, "evaluation point, comma separated (default: origin)")->delimiter(',');
  sub->add_option("--kink-tol", c.kink_tol, "|z_i| at or below this counts as a kink")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c.format = formats.front();
  sub->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember(formats))
      ->capture_default_str();
  sub->add_option("--output", c.output, "write the result here instead of stdout");
}

Tape load(const Common& c) {
  Tape t = load_problem(c.problem);
  if (c.mu) t = t.with_constant("mu", *c.mu);
  return t;
}

std::vector<double> anchor(const Common& c, const Tape& t) {
  if (c.x.empty()) return std::vector<double>(t.n_inputs(), 0.0);
  if (c.x.size() != t.n_inputs()) {
    throw ValidationError("--x has " + std::to_string(c.x.size()) + " entries, the problem has " +
                          std::to_string(t.n_inputs()) + " inputs");
  }
  return c.x;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <class Range>
std::string join(const Range& values) {
  std::string out;
  bool first = true;
  for (const auto& v : values) {
    if (!first) out += ',';
    first = false;
    out += format_number(static_cast<double>(v));
  }
  return out;
}

std::string join(const Eigen::VectorXd& v) {
  return join(std::vector<double>(v.data(), v.data() + v.size()));
}

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- eval

struct EvalArgs {
  Common c;
  std::vector<double> xi;
  bool point = false;
};

void run_eval(const EvalArgs& a) {
  const Tape tape = load(a.c);
  const auto x = anchor(a.c, tape);
  if (a.point) {
    emit(point_to_json(extract(tape, x, a.c.kink_tol)) + "\n", a.c.output);
    return;
  }
  std::optional<std::span<const double>> xi;
  if (!a.xi.empty()) {
    if (a.xi.size() != tape.n_switches()) throw ValidationError("--xi needs one entry per switch");
    xi = std::span<const double>(a.xi);
  }
  const EvalTrace tr = forward_eval(tape, x, xi);
  const Signature sigma = Signature::of(tr.z, a.c.kink_tol);
  if (a.c.format == "json") {
    json j;
    j["phi"] = tr.result(tape);
    j["z"] = tr.z;
    j["sigma"] = sigma.entries();
    emit(dump(j), a.c.output);
  } else {
    emit("phi = " + format_number(tr.result(tape)) + "\nz = " + join(tr.z) + "\nsigma = " +
             join(sigma.entries()) + "\n",
         a.c.output);
  }
}

// ---- grad

struct GradArgs {
  Common c;
  std::vector<double> xi;
  std::string preset;
  std::optional<double> kink_value;
};

void run_grad(const GradArgs& a) {
  const Tape tape = load(a.c);
  const auto x = anchor(a.c, tape);
  const AbsNormalPoint p = extract(tape, x, a.c.kink_tol);
  std::optional<XiChoice> choice;
  if (!a.xi.empty()) {
    choice = XiChoice::make(p.sigma, Eigen::Map<const Eigen::VectorXd>(a.xi.data(), static_cast<Eigen::Index>(a.xi.size())));
  } else if (!a.preset.empty()) {
    const auto v = preset_kink_value(a.preset);
    if (!v) throw ValidationError("unknown preset '" + a.preset + "'");
    choice = XiChoice::at_kinks(p.sigma, *v);
  } else {
    choice = XiChoice::at_kinks(p.sigma, a.kink_value.value_or(0.0));
  }
  const Eigen::VectorXd g = grad_xi(p, *choice);
  if (a.c.format == "json") {
    json j;
    j["gradient"] = as_std(g);
    j["xi"] = as_std(choice->values());
    j["sigma"] = p.sigma.entries();
    emit(dump(j), a.c.output);
  } else {
    emit(join(g) + "\n", a.c.output);
  }
}

// ---- likq

struct LikqArgs {
  Common c;
  double rank_tol = kDefaultRankTol;
  std::size_t cap = kDefaultEnumerationCap;
};

void run_likq(const LikqArgs& a) {
  const Tape tape = load(a.c);
  const AbsNormalPoint p = extract(tape, anchor(a.c, tape), a.c.kink_tol);
  const LikqReport r = check_likq(p, a.rank_tol);
  std::optional<RankStabilityReport> rs;
  try {
    rs = check_rank_stability(p, a.rank_tol, a.cap);
  } catch (const CapExceeded&) {
  }
  if (a.c.format == "json") {
    json j;
    j["likq"] = r.holds ? "holds" : "fails";
    j["rank"] = r.rank;
    j["active"] = r.active;
    j["singular_values"] = as_std(r.singular_values);
    json rows = json::array();
    for (Eigen::Index i = 0; i < r.matrix.rows(); ++i) rows.push_back(as_std(r.matrix.row(i).transpose()));
    j["matrix"] = std::move(rows);
    if (rs) {
      json ranks = json::array();
      for (const auto& [sigma, rank] : rs->ranks) ranks.push_back({{"signature", sigma.entries()}, {"rank", rank}});
      j["rank_stability"] = {{"required", rs->required}, {"all_full", rs->all_full}, {"ranks", ranks}};
    } else {
      j["rank_stability"] = nullptr;
    }
    emit(dump(j), a.c.output);
    return;
  }
  std::string out = r.summary() + "\n";
  out += "singular_values: " + join(r.singular_values) + "\n";
  if (rs) {
    std::size_t lo = rs->required, hi = 0;
    for (const auto& [sigma, rank] : rs->ranks) {
      lo = std::min(lo, rank);
      hi = std::max(hi, rank);
    }
    if (rs->ranks.empty()) lo = 0;
    out += "rank_stability: " + std::to_string(rs->ranks.size()) + " signatures, ranks " +
           std::to_string(lo) + ".." + std::to_string(hi) + ", all full: " + (rs->all_full ? "yes" : "no") + "\n";
  } else {
    out += "rank_stability: skipped, 3^" + std::to_string(p.alpha.size()) + " signatures exceed the cap\n";
  }
  emit(out, a.c.output);
}

// ---- limiting

struct LimitingArgs {
  Common c;
  double rank_tol = kDefaultRankTol;
  std::size_t cap = kDefaultEnumerationCap;
};

void run_limiting(const LimitingArgs& a) {
  const Tape tape = load(a.c);
  const AbsNormalPoint p = extract(tape, anchor(a.c, tape), a.c.kink_tol);
  const GradientSet g = limiting_gradients(p, a.cap, a.rank_tol);
  emit(a.c.format == "csv" ? to_csv(g) : to_json(g) + "\n", a.c.output);
}

// ---- sample

struct SampleArgs {
  Common c;
  SamplingPlan plan;
  std::string dump_path;
};

void run_sample(SampleArgs a) {
  const Tape tape = load(a.c);
  a.plan.kink_tol = a.c.kink_tol;
  const BouligandSample s = sample_bouligand(tape, anchor(a.c, tape), a.plan);
  if (!a.dump_path.empty()) emit(samples_to_csv(s), a.dump_path);
  emit(a.c.format == "csv" ? to_csv(s.set) : to_json(s.set) + "\n", a.c.output);
}

// ---- verify

struct VerifyArgs {
  std::string suite = "all";
  std::optional<std::size_t> instances;
  std::uint64_t seed = 1;
  std::string output;
};

int run_verify(const VerifyArgs& a) {
  struct Entry {
    const char* name;
    std::size_t instances;
    SuiteReport (*run)(std::size_t, std::uint64_t);
  };
  const std::vector<Entry> table = {
      {"convex", 200, verify_convex_combination},
      {"rank", 50, verify_rank_stability},
      {"batch", 20, verify_batch_decomposition},
      {"likq", 100, verify_net_likq},
      {"smooth", 100, verify_smooth_tapes},
      {"smooth-nets", 20, verify_smooth_nets},
  };
  std::string out;
  bool ok = true;
  for (const auto& e : table) {
    if (a.suite != "all" && a.suite != e.name) continue;
    const SuiteReport r = e.run(a.instances.value_or(e.instances), a.seed);
    ok = ok && r.passed;
    out += r.summary() + "\n";
    for (const auto& f : r.failures) out += "  " + f + "\n";
  }
  emit(out, a.output);
  return ok ? 0 : 2;
}

// ---- train

struct TrainArgs {
  std::string net;
  std::string data;
  TrainOptions opt;
  double zeta = 0.0;
  std::optional<std::uint64_t> init_seed;
  std::string checkpoint;
  std::string output;
};

void run_train(TrainArgs a) {
  const NetDocument doc = parse_net(read_file(a.net));
  const Dataset data = parse_dataset(read_file(a.data));
  validate(data, doc.spec);
  const Eigen::VectorXd params = doc.params ? *doc.params : initial_params(doc.spec, a.init_seed.value_or(a.opt.seed));
  a.opt.zeta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(doc.spec.n_switches()), a.zeta);
  const Trajectory traj = sgd_train(doc.spec, data, params, a.opt);
  if (!a.checkpoint.empty()) emit(net_to_json(doc.spec, traj.params), a.checkpoint);
  emit(trajectory_to_csv(traj), a.output);
}

// ---- figure

struct FigureArgs {
  Common c;
  std::string kind = "gradients";
  SamplingPlan plan;
  std::size_t grid = 41;
  double extent = 1.0;
};

void run_figure(FigureArgs a) {
  const Tape tape = load(a.c);
  const auto x = anchor(a.c, tape);
  std::ostringstream out;
  if (a.kind == "levels") {
    if (tape.n_inputs() != 2) throw ValidationError("level data needs a problem with two inputs");
    if (a.grid < 2) throw ValidationError("--grid must be at least 2");
    out << "x_1,x_2,phi\n";
    std::vector<double> pt(2);
    for (std::size_t i = 0; i < a.grid; ++i) {
      for (std::size_t k = 0; k < a.grid; ++k) {
        pt[0] = x[0] - a.extent + 2.0 * a.extent * static_cast<double>(i) / static_cast<double>(a.grid - 1);
        pt[1] = x[1] - a.extent + 2.0 * a.extent * static_cast<double>(k) / static_cast<double>(a.grid - 1);
        out << format_number(pt[0]) << ',' << format_number(pt[1]) << ','
            << format_number(forward_eval(tape, pt).result(tape)) << '\n';
      }
    }
    emit(out.str(), a.c.output);
    return;
  }
  const AbsNormalPoint p = extract(tape, x, a.c.kink_tol);
  const GradientSet cand = limiting_gradients(p);
  a.plan.kink_tol = a.c.kink_tol;
  a.plan.at_anchor = true;
  const BouligandSample s = sample_bouligand(tape, x, a.plan);
  for (std::size_t i = 0; i < p.s(); ++i) out << "sigma_" << i + 1 << ',';
  for (std::size_t k = 0; k < p.n(); ++k) out << "g_" << k + 1 << ',';
  out << "sampled\n";
  for (const auto& e : cand.gradients) {
    bool sampled = false;
    for (const auto& cl : s.set.gradients) {
      if ((cl.gradient - e.gradient).norm() <= s.cluster_tol) sampled = true;
    }
    out << join(e.signature.entries()) << ',' << join(e.gradient) << ',' << (sampled ? 1 : 0) << '\n';
  }
  emit(out.str(), a.c.output);
}

void report(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abs-normal form toolkit: generalized gradients, LIKQ, ReLU-net batch gradients"};
  app.require_subcommand(1);

  EvalArgs eval;
  auto* s_eval = app.add_subcommand("eval", "phi(x), z and sigma");
  add_common(s_eval, eval.c, {"text", "json"});
  s_eval->add_option("--xi", eval.xi, "fixed slopes for every abs node")->delimiter(',')->check(CLI::Range(-1.0, 1.0));
  s_eval->add_flag("--point", eval.point, "print the full abs-normal point as JSON");

  GradArgs grad;
  auto* s_grad = app.add_subcommand("grad", "gradient with a fixed choice of d|.|(0)");
  add_common(s_grad, grad.c, {"text", "json"});
  auto* o_xi = s_grad->add_option("--xi", grad.xi, "xi per switch")->delimiter(',')->check(CLI::Range(-1.0, 1.0));
  std::vector<std::string> names;
  for (const auto& p : tool_presets()) names.emplace_back(p.tool);
  auto* o_preset = s_grad->add_option("--preset", grad.preset, "AD tool convention")->check(CLI::IsMember(names));
  auto* o_kink = s_grad->add_option("--kink-value", grad.kink_value, "xi at every kink (default 0)")
                     ->check(CLI::Range(-1.0, 1.0));
  o_xi->excludes(o_preset)->excludes(o_kink);
  o_preset->excludes(o_kink);

  LikqArgs likq;
  auto* s_likq = app.add_subcommand("likq", "LIKQ test and rank stability");
  add_common(s_likq, likq.c, {"text", "json"});
  s_likq->add_option("--rank-tol", likq.rank_tol)->check(CLI::PositiveNumber)->capture_default_str();
  s_likq->add_option("--cap", likq.cap, "enumeration cap")->check(CLI::PositiveNumber)->capture_default_str();

  LimitingArgs lim;
  auto* s_lim = app.add_subcommand("limiting", "enumerate grad phi_sigma over the definite successors");
  add_common(s_lim, lim.c, {"json", "csv"});
  s_lim->add_option("--rank-tol", lim.rank_tol)->check(CLI::PositiveNumber)->capture_default_str();
  s_lim->add_option("--cap", lim.cap, "enumeration cap")->check(CLI::PositiveNumber)->capture_default_str();

  SampleArgs smp;
  auto* s_smp = app.add_subcommand("sample", "sample gradients near x and cluster them");
  add_common(s_smp, smp.c, {"json", "csv"});
  s_smp->add_option("--radius", smp.plan.radius)->check(CLI::PositiveNumber)->capture_default_str();
  s_smp->add_option("--samples", smp.plan.count)->check(CLI::PositiveNumber)->capture_default_str();
  s_smp->add_option("--seed", smp.plan.seed)->capture_default_str();
  s_smp->add_option("--cluster-tol", smp.plan.cluster_tol)->check(CLI::PositiveNumber);
  s_smp->add_flag("--at-anchor", smp.plan.at_anchor, "evaluate each piece gradient at x itself");
  s_smp->add_option("--dump", smp.dump_path, "per-sample CSV (x, sigma, gradient)");

  VerifyArgs ver;
  auto* s_ver = app.add_subcommand("verify", "run the identity suites");
  s_ver->add_option("--suite", ver.suite)
      ->check(CLI::IsMember({"all", "convex", "rank", "batch", "likq", "smooth", "smooth-nets"}))
      ->capture_default_str();
  s_ver->add_option("--instances", ver.instances, "instances per suite")->check(CLI::PositiveNumber);
  s_ver->add_option("--seed", ver.seed)->capture_default_str();
  s_ver->add_option("--output", ver.output);

  TrainArgs tr;
  auto* s_tr = app.add_subcommand("train", "stochastic generalized gradient descent on a ReLU net");
  s_tr->add_option("--net", tr.net, "network JSON")->required();
  s_tr->add_option("--data", tr.data, "dataset JSON")->required();
  s_tr->add_option("--iterations", tr.opt.iterations)->capture_default_str();
  s_tr->add_option("--step", tr.opt.schedule.initial)->check(CLI::NonNegativeNumber)->capture_default_str();
  s_tr->add_option("--decay", tr.opt.schedule.decay, "step_k = step / (1 + decay k)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  s_tr->add_option("--batch-size", tr.opt.batch_size, "0 for the full dataset")->capture_default_str();
  s_tr->add_option("--zeta", tr.zeta, "xi at every kink, shared by all samples")
      ->check(CLI::Range(-1.0, 1.0))
      ->capture_default_str();
  s_tr->add_option("--seed", tr.opt.seed, "batch shuffling and default initialization")->capture_default_str();
  s_tr->add_option("--init-seed", tr.init_seed, "initialization seed when the net has no weights");
  s_tr->add_option("--checkpoint", tr.checkpoint, "write the trained network here");
  s_tr->add_option("--output", tr.output, "trajectory CSV (default stdout)");

  FigureArgs fig;
  auto* s_fig = app.add_subcommand("figure", "CSV data for gradient-set and level-set plots");
  add_common(s_fig, fig.c, {"csv"});
  s_fig->add_option("--kind", fig.kind)->check(CLI::IsMember({"gradients", "levels"}))->capture_default_str();
  s_fig->add_option("--radius", fig.plan.radius)->check(CLI::PositiveNumber)->capture_default_str();
  s_fig->add_option("--samples", fig.plan.count)->check(CLI::PositiveNumber)->capture_default_str();
  s_fig->add_option("--seed", fig.plan.seed)->capture_default_str();
  s_fig->add_option("--grid", fig.grid, "points per axis for levels")->capture_default_str();
  s_fig->add_option("--extent", fig.extent, "half width of the level grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report("usage", e.what());
    return 1;
  }

  try {
    if (s_eval->parsed()) run_eval(eval);
    if (s_grad->parsed()) run_grad(grad);
    if (s_likq->parsed()) run_likq(likq);
    if (s_lim->parsed()) run_limiting(lim);
    if (s_smp->parsed()) run_sample(smp);
    if (s_ver->parsed()) return run_verify(ver);
    if (s_tr->parsed()) run_train(tr);
    if (s_fig->parsed()) run_figure(fig);
  } catch (const ValidationError& e) {
    report(e.kind(), e.what());
    return 1;
  } catch (const Error& e) {
    report(e.kind(), e.what());
    return 2;
  } catch (const std::exception& e) {
    report("internal", e.what());
    return 2;
  }
  return 0;
}
