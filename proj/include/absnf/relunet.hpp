#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absnf/absnormal.hpp"
#include "absnf/gradients.hpp"
#include "absnf/tape.hpp"

namespace absnf {

enum class Head { Identity, Softmax };
enum class Loss { Squared, CrossEntropy };

// Dense ReLU network N_0 -> N_1 -> ... -> N_{T+1}. Hidden pre-activations
// z^(t) = W^(t) u^(t-1) + b^(t) are the switching variables, with
// relu(z) = (z + |z|) / 2. Parameters are flattened as all weights
// (layer-major, each matrix row-major) followed by all biases (layer-major).
struct ReluNetSpec {
  std::vector<std::size_t> layer_dims;
  Head head = Head::Identity;
  Loss loss = Loss::Squared;

  std::size_t hidden_layers() const { return layer_dims.size() - 2; }
  std::size_t n_switches() const;
  std::size_t n_params() const;
  // t = 1..T+1
  std::size_t weight_offset(std::size_t t) const;
  std::size_t bias_offset(std::size_t t) const;
  // t = 1..T: index of the first switch of hidden layer t.
  std::size_t switch_offset(std::size_t t) const;
};

// Requires T >= 1, positive widths, and one of the two supported
// head/loss pairs: identity + squared error or softmax + cross-entropy.
void validate(const ReluNetSpec& spec);

struct Dataset {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> labels;

  std::size_t size() const { return inputs.size(); }
};

void validate(const Dataset& data, const ReluNetSpec& spec);

// Weights and biases uniform(-0.5, 0.5) / sqrt(fan_in).
Eigen::VectorXd initial_params(const ReluNetSpec& spec, std::uint64_t seed);

// Direct forward pass (no abs-normal machinery).
double sample_loss(const ReluNetSpec& spec, const Dataset& data, std::size_t j,
                   const Eigen::VectorXd& params);
double batch_loss(const ReluNetSpec& spec, const Dataset& data,
                  const std::vector<std::size_t>& batch, const Eigen::VectorXd& params);

// Abs-normal data of the j-th sample loss over parameter space:
// Z = [D_W c | I_s], L = M = block-subdiagonal(W^(2)/2, ..., W^(T)/2).
AbsNormalPoint build_absnormal(const ReluNetSpec& spec, const Dataset& data, std::size_t j,
                               const Eigen::VectorXd& params,
                               double kink_tol = kDefaultKinkTol);

// Z^+ = [0; I_s] on the hidden-bias coordinates. Throws ValidationError for
// an empty list and NumericalError if some Z^[j] Z^+ != I.
Eigen::MatrixXd shared_right_inverse(const ReluNetSpec& spec,
                                     const std::vector<AbsNormalPoint>& points);

// Batch loss (1/|J|) sum_j loss_j as a single tape over the parameters.
// Switches are ordered sample-major, then as in build_absnormal.
Tape to_tape(const ReluNetSpec& spec, const Dataset& data, const std::vector<std::size_t>& batch,
             const Eigen::VectorXd& params);

// One a-priori kink policy zeta in [-1, 1]^s shared by every sample.
class BatchContext {
 public:
  static BatchContext make(const ReluNetSpec& spec, const Dataset& data,
                           std::vector<std::size_t> batch, const Eigen::VectorXd& params,
                           Eigen::VectorXd zeta, double kink_tol = kDefaultKinkTol);

  const std::vector<std::size_t>& batch() const { return batch_; }
  const std::vector<AbsNormalPoint>& points() const { return points_; }
  const Eigen::VectorXd& zeta() const { return zeta_; }
  const Eigen::MatrixXd& right_inverse() const { return right_inverse_; }
  std::size_t n_switches() const { return static_cast<std::size_t>(zeta_.size()); }

 private:
  std::vector<std::size_t> batch_;
  std::vector<AbsNormalPoint> points_;
  Eigen::VectorXd zeta_;
  Eigen::MatrixXd right_inverse_;
};

// xi^[j]_zeta: zeta at the sample's active switches, sigma_bar^[j] elsewhere.
XiChoice sample_xi(const AbsNormalPoint& p, const Eigen::VectorXd& zeta);
// sigma^[j]_tau: tau at the sample's active switches, sigma_bar^[j] elsewhere.
Signature sample_sigma(const Signature& sigma_bar, const Signature& tau);

// (1/|J|) sum_j grad phi^[j]_{xi^[j]_zeta}.
Eigen::VectorXd batch_gradient(const BatchContext& ctx);

struct TauDirection {
  Eigen::VectorXd v;
  Eigen::VectorXd d;  // Z^+ v
  // min over samples j and switches k of tau_k (Dz^[j] d)_k
  double min_certificate = 0.0;
};

// Builds v by the forward recursion
//   v_k = tau_k (1 + max_j sum_{l<k} |M_kl + L_kl sigma_l| |((I - M - L Sigma)^{-1} v)_l|)
// and d = Z^+ v. Throws NumericalError if some tau_k (Dz d)_k < 1 - 1e-9.
TauDirection tau_direction(const BatchContext& ctx, const Signature& tau);

struct StepSchedule {
  double initial = 0.05;
  double decay = 0.0;  // step_k = initial / (1 + decay * k)
  double at(std::size_t k) const { return initial / (1.0 + decay * static_cast<double>(k)); }
};

struct TrainOptions {
  std::size_t iterations = 200;
  StepSchedule schedule;
  std::size_t batch_size = 0;  // 0: full dataset every iteration
  Eigen::VectorXd zeta;        // empty: zeta = 0
  std::uint64_t seed = 1;      // shuffling
  double kink_tol = kDefaultKinkTol;
  double divergence_limit = 1e12;
};

struct TrajectoryRow {
  std::size_t iteration = 0;
  double loss = 0.0;       // full training loss at the iterate
  double grad_norm = 0.0;  // norm of the batch gradient taken there
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;  // iterations + 1 rows; the last is the final iterate
  Eigen::VectorXd params;
};

// params_{k+1} = params_k - step_k * batch_gradient. Throws NumericalError
// when the loss exceeds the divergence limit or stops being finite.
Trajectory sgd_train(const ReluNetSpec& spec, const Dataset& data, Eigen::VectorXd params,
                     const TrainOptions& options);

// JSON I/O. A network document carries layer_dims, head, loss and
// optionally "weights" (per layer, list of rows) and "biases".
struct NetDocument {
  ReluNetSpec spec;
  std::optional<Eigen::VectorXd> params;
};
NetDocument parse_net(std::string_view document);
std::string net_to_json(const ReluNetSpec& spec, const Eigen::VectorXd& params);
// {"inputs": [[...], ...], "labels": [[...], ...]}
Dataset parse_dataset(std::string_view document);
// iteration,loss,grad_norm
std::string trajectory_to_csv(const Trajectory& traj);

}  // namespace absnf
