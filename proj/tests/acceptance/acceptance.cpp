#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "absnf/gradients.hpp"
#include "absnf/oracle.hpp"
#include "absnf/problems.hpp"
#include "absnf/random.hpp"
#include "absnf/relunet.hpp"
#include "absnf/verify.hpp"

using namespace absnf;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

const std::vector<double> kOrigin{0.0, 0.0};

SamplingPlan anchored() {
  SamplingPlan plan;
  plan.at_anchor = true;
  return plan;
}

double distance_to(const GradientSet& set, const Eigen::VectorXd& g) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : set.gradients) best = std::min(best, (e.gradient - g).norm());
  return best;
}

Outcome from_suites(std::initializer_list<SuiteReport> reports) {
  Outcome o;
  for (const auto& r : reports) {
    o.ok = o.ok && r.passed;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += r.summary();
  }
  return o;
}

Outcome worked_example() {
  Outcome o;
  double worst = 0.0;
  for (double mu : {1.0, 0.0, -1.0}) {
    const GradientSet set = limiting_gradients(extract(phimu_tape(mu), kOrigin));
    if (set.gradients.size() != 8) o.ok = false;
    for (const auto& e : set.gradients) {
      const Eigen::Vector2d f(e.signature[0] - e.signature[1], e.signature[1] - mu * e.signature[2]);
      worst = std::max(worst, (e.gradient - f).lpNorm<Eigen::Infinity>());
    }
  }
  o.ok = o.ok && worst <= 1e-12;

  const BouligandSample neg = sample_bouligand(phimu_tape(-1.0), kOrigin, anchored());
  const bool up_out = !hull_membership(neg.set, Eigen::Vector2d(0, 2)).inside;
  const bool down_out = !hull_membership(neg.set, Eigen::Vector2d(0, -2)).inside;
  const BouligandSample pos = sample_bouligand(phimu_tape(1.0), kOrigin, anchored());
  const bool zero_in = hull_membership(pos.set, Eigen::Vector2d::Zero()).inside;
  o.ok = o.ok && up_out && down_out && zero_in;

  std::ostringstream ss;
  ss << "formula error " << worst << ", mu=-1: " << neg.set.gradients.size()
     << " sampled gradients, (0,2) " << (up_out ? "outside" : "inside") << ", (0,-2) "
     << (down_out ? "outside" : "inside") << "; mu=1: (0,0) " << (zero_in ? "inside" : "outside");
  o.detail = ss.str();
  return o;
}

Outcome likq_anchors() {
  Outcome o;
  std::string summaries;
  for (double mu : {1.0, 0.0, -1.0}) {
    const LikqReport r = check_likq(extract(phimu_tape(mu), kOrigin));
    o.ok = o.ok && !r.holds && r.rank == 2 && r.active == 3;
    if (mu == 1.0) summaries = r.summary();
  }
  const SuiteReport nets = verify_net_likq(100, 1);
  o.ok = o.ok && nets.passed;
  o.detail = "phi_mu " + summaries + "; " + nets.summary();
  return o;
}

Outcome sampling_vs_enumeration() {
  Outcome o;
  Rng rng(5);
  std::size_t tapes = 0, attempts = 0, mismatches = 0, max_active = 0;
  while (tapes < 20 && attempts < 2000) {
    ++attempts;
    KinkedTapeOptions opt;
    opt.n_inputs = 4;
    opt.n_active = rng.index(1, 4);
    opt.n_inactive = rng.index(0, 3);
    const KinkedTape kt = random_kinked_tape(rng, opt);
    const AbsNormalPoint p = extract(kt.tape, kt.anchor);
    if (p.alpha.size() != opt.n_active) continue;
    const LikqReport likq = check_likq(p);
    if (!likq.holds) continue;
    const Eigen::VectorXd& sv = likq.singular_values;
    if (sv.minCoeff() < 0.25 * sv.maxCoeff()) continue;
    ++tapes;
    max_active = std::max(max_active, p.alpha.size());

    const GradientSet enumerated = limiting_gradients(p);
    const BouligandSample s = sample_bouligand(kt.tape, kt.anchor, anchored());
    bool match = true;
    for (const auto& e : enumerated.gradients) match = match && distance_to(s.set, e.gradient) <= s.cluster_tol;
    for (const auto& c : s.set.gradients) match = match && distance_to(enumerated, c.gradient) <= s.cluster_tol;
    if (!match) ++mismatches;
  }
  o.ok = tapes == 20 && mismatches == 0;

  const BouligandSample neg = sample_bouligand(phimu_tape(-1.0), kOrigin, anchored());
  const double spurious = std::min(distance_to(neg.set, Eigen::Vector2d(0, 2)),
                                   distance_to(neg.set, Eigen::Vector2d(0, -2)));
  o.ok = o.ok && spurious > 10 * neg.cluster_tol;

  std::ostringstream ss;
  ss << tapes << " tapes (|alpha| <= " << max_active << "), " << mismatches
     << " mismatches; phi_mu spurious distance " << spurious << " vs 10*tol " << 10 * neg.cluster_tol;
  o.detail = ss.str();
  return o;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome training() {
  const NetDocument net = parse_net(slurp(ABSNF_DATA_DIR "/net_1_1_1.json"));
  const Dataset data = parse_dataset(slurp(ABSNF_DATA_DIR "/separable_1d.json"));
  TrainOptions opt;
  opt.iterations = 200;
  opt.schedule.initial = 0.05;
  opt.seed = 4;
  const Trajectory tr = sgd_train(net.spec, data, initial_params(net.spec, 4), opt);
  const double first = tr.rows.front().loss, last = tr.rows.back().loss;
  const double reduction = 1.0 - last / first;
  std::ostringstream ss;
  ss << "loss " << first << " -> " << last << ", reduction " << 100.0 * reduction << "%";
  return {reduction >= 0.9, ss.str()};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "worked example", 1.0, worked_example},
      {2, "LIKQ anchors", 10.0, likq_anchors},
      {3, "convex combination", 30.0, [] { return from_suites({verify_convex_combination(200, 1)}); }},
      {4, "rank stability", 30.0, [] { return from_suites({verify_rank_stability(50, 1)}); }},
      {5, "sampling vs enumeration", 60.0, sampling_vs_enumeration},
      {6, "batch decomposition", 60.0, [] { return from_suites({verify_batch_decomposition(20, 1)}); }},
      {7, "smooth oracle", 30.0,
       [] { return from_suites({verify_smooth_tapes(100, 1), verify_smooth_nets(20, 1)}); }},
      {8, "training", 10.0, training},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.ok && secs < c.budget_s;
    if (!ok) ++failed;
    std::printf("%s criterion %d (%s): %s [%.3fs / %.0fs]\n", ok ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s);
  }
  return failed == 0 ? 0 : 1;
}
