#include "absnf/relunet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absnf/errors.hpp"
#include "absnf/random.hpp"

namespace absnf {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t k) { return static_cast<Index>(k); }

struct Forward {
  std::vector<Eigen::VectorXd> u;  // u[0] input, u[t] hidden activations
  std::vector<Eigen::VectorXd> z;  // z[t - 1] pre-activation of hidden layer t
  Eigen::VectorXd out;             // W^(T+1) u^(T) + b^(T+1)
};

Eigen::MatrixXd weight_matrix(const ReluNetSpec& spec, const Eigen::VectorXd& params,
                              std::size_t t) {
  const auto rows = idx(spec.layer_dims[t]);
  const auto cols = idx(spec.layer_dims[t - 1]);
  Eigen::MatrixXd w(rows, cols);
  const double* p = params.data() + spec.weight_offset(t);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) w(r, c) = p[r * cols + c];
  return w;
}

Eigen::VectorXd bias(const ReluNetSpec& spec, const Eigen::VectorXd& params, std::size_t t) {
  return params.segment(idx(spec.bias_offset(t)), idx(spec.layer_dims[t]));
}

Forward forward(const ReluNetSpec& spec, const Eigen::VectorXd& input,
                const Eigen::VectorXd& params) {
  const std::size_t T = spec.hidden_layers();
  Forward fw;
  fw.u.push_back(input);
  for (std::size_t t = 1; t <= T; ++t) {
    Eigen::VectorXd z = weight_matrix(spec, params, t) * fw.u.back() + bias(spec, params, t);
    fw.u.push_back(0.5 * (z + z.cwiseAbs()));
    fw.z.push_back(std::move(z));
  }
  fw.out = weight_matrix(spec, params, T + 1) * fw.u.back() + bias(spec, params, T + 1);
  return fw;
}

double log_sum_exp(const Eigen::VectorXd& y) {
  const double m = y.maxCoeff();
  return m + std::log((y.array() - m).exp().sum());
}

double loss_value(const ReluNetSpec& spec, const Eigen::VectorXd& out, const Eigen::VectorXd& v) {
  if (spec.loss == Loss::Squared) return 0.5 * (out - v).squaredNorm();
  return log_sum_exp(out) * v.sum() - v.dot(out);
}

// d loss / d out
Eigen::VectorXd loss_slope(const ReluNetSpec& spec, const Eigen::VectorXd& out,
                           const Eigen::VectorXd& v) {
  if (spec.loss == Loss::Squared) return out - v;
  const Eigen::VectorXd p = (out.array() - log_sum_exp(out)).exp().matrix();
  return p * v.sum() - v;
}

void check_params(const ReluNetSpec& spec, const Eigen::VectorXd& params) {
  if (static_cast<std::size_t>(params.size()) != spec.n_params()) {
    throw ValidationError("parameter vector has length " + std::to_string(params.size()) +
                          ", expected " + std::to_string(spec.n_params()));
  }
  if (!params.allFinite()) throw ValidationError("parameters must be finite");
}

void check_sample(const ReluNetSpec& spec, const Dataset& data, std::size_t j) {
  if (j >= data.size() || j >= data.labels.size()) {
    throw ValidationError("sample index " + std::to_string(j) + " out of range");
  }
  if (static_cast<std::size_t>(data.inputs[j].size()) != spec.layer_dims.front() ||
      static_cast<std::size_t>(data.labels[j].size()) != spec.layer_dims.back()) {
    throw ValidationError("sample " + std::to_string(j) + " does not match the layer widths");
  }
}

}  // namespace

std::size_t ReluNetSpec::n_switches() const {
  std::size_t s = 0;
  for (std::size_t t = 1; t + 1 < layer_dims.size(); ++t) s += layer_dims[t];
  return s;
}

std::size_t ReluNetSpec::n_params() const {
  std::size_t n = 0;
  for (std::size_t t = 1; t < layer_dims.size(); ++t) n += layer_dims[t] * (layer_dims[t - 1] + 1);
  return n;
}

std::size_t ReluNetSpec::weight_offset(std::size_t t) const {
  std::size_t off = 0;
  for (std::size_t l = 1; l < t; ++l) off += layer_dims[l] * layer_dims[l - 1];
  return off;
}

std::size_t ReluNetSpec::bias_offset(std::size_t t) const {
  std::size_t off = weight_offset(layer_dims.size());
  for (std::size_t l = 1; l < t; ++l) off += layer_dims[l];
  return off;
}

std::size_t ReluNetSpec::switch_offset(std::size_t t) const {
  std::size_t off = 0;
  for (std::size_t l = 1; l < t; ++l) off += layer_dims[l];
  return off;
}

void validate(const ReluNetSpec& spec) {
  if (spec.layer_dims.size() < 3) {
    throw ValidationError("a network needs an input, at least one hidden and an output layer");
  }
  for (std::size_t w : spec.layer_dims) {
    if (w == 0) throw ValidationError("layer widths must be positive");
  }
  const bool ok = (spec.head == Head::Identity && spec.loss == Loss::Squared) ||
                  (spec.head == Head::Softmax && spec.loss == Loss::CrossEntropy);
  if (!ok) {
    throw ValidationError("supported head/loss pairs: identity + squared, softmax + cross_entropy");
  }
}

void validate(const Dataset& data, const ReluNetSpec& spec) {
  if (data.size() == 0) throw ValidationError("dataset is empty");
  if (data.labels.size() != data.inputs.size()) {
    throw ValidationError("dataset has " + std::to_string(data.inputs.size()) + " inputs but " +
                          std::to_string(data.labels.size()) + " labels");
  }
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (static_cast<std::size_t>(data.inputs[j].size()) != spec.layer_dims.front() ||
        static_cast<std::size_t>(data.labels[j].size()) != spec.layer_dims.back()) {
      throw ValidationError("sample " + std::to_string(j) + " does not match the layer widths");
    }
    if (!data.inputs[j].allFinite() || !data.labels[j].allFinite()) {
      throw ValidationError("sample " + std::to_string(j) + " is not finite");
    }
  }
}

Eigen::VectorXd initial_params(const ReluNetSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  Eigen::VectorXd params(idx(spec.n_params()));
  for (std::size_t t = 1; t < spec.layer_dims.size(); ++t) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.layer_dims[t - 1]));
    const std::size_t count = spec.layer_dims[t] * spec.layer_dims[t - 1];
    for (std::size_t k = 0; k < count; ++k) {
      params[idx(spec.weight_offset(t) + k)] = scale * rng.uniform(-0.5, 0.5);
    }
    for (std::size_t k = 0; k < spec.layer_dims[t]; ++k) {
      params[idx(spec.bias_offset(t) + k)] = scale * rng.uniform(-0.5, 0.5);
    }
  }
  return params;
}

double sample_loss(const ReluNetSpec& spec, const Dataset& data, std::size_t j,
                   const Eigen::VectorXd& params) {
  validate(spec);
  check_sample(spec, data, j);
  check_params(spec, params);
  return loss_value(spec, forward(spec, data.inputs[j], params).out, data.labels[j]);
}

double batch_loss(const ReluNetSpec& spec, const Dataset& data,
                  const std::vector<std::size_t>& batch, const Eigen::VectorXd& params) {
  if (batch.empty()) throw ValidationError("batch is empty");
  double sum = 0.0;
  for (std::size_t j : batch) sum += sample_loss(spec, data, j, params);
  return sum / static_cast<double>(batch.size());
}

AbsNormalPoint build_absnormal(const ReluNetSpec& spec, const Dataset& data, std::size_t j,
                               const Eigen::VectorXd& params, double kink_tol) {
  validate(spec);
  check_sample(spec, data, j);
  check_params(spec, params);
  const std::size_t T = spec.hidden_layers();
  const Index n = idx(spec.n_params());
  const Index s = idx(spec.n_switches());
  const Forward fw = forward(spec, data.inputs[j], params);
  const Eigen::VectorXd g = loss_slope(spec, fw.out, data.labels[j]);

  Eigen::VectorXd z(s);
  for (std::size_t t = 1; t <= T; ++t) z.segment(idx(spec.switch_offset(t)), fw.z[t - 1].size()) = fw.z[t - 1];

  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  {
    const std::size_t t = T + 1;
    const Index rows = idx(spec.layer_dims[t]);
    const Index cols = idx(spec.layer_dims[t - 1]);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) a[idx(spec.weight_offset(t)) + r * cols + c] = g[r] * fw.u[T][c];
      a[idx(spec.bias_offset(t)) + r] = g[r];
    }
  }

  Eigen::VectorXd b = Eigen::VectorXd::Zero(s);
  b.segment(idx(spec.switch_offset(T)), idx(spec.layer_dims[T])) =
      0.5 * weight_matrix(spec, params, T + 1).transpose() * g;
  Eigen::VectorXd d = b;

  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(s, n);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(s, s);
  for (std::size_t t = 1; t <= T; ++t) {
    const Index rows = idx(spec.layer_dims[t]);
    const Index cols = idx(spec.layer_dims[t - 1]);
    const Index row0 = idx(spec.switch_offset(t));
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) Z(row0 + r, idx(spec.weight_offset(t)) + r * cols + c) = fw.u[t - 1][c];
      Z(row0 + r, idx(spec.bias_offset(t)) + r) = 1.0;
    }
    if (t >= 2) {
      L.block(row0, idx(spec.switch_offset(t - 1)), rows, cols) = 0.5 * weight_matrix(spec, params, t);
    }
  }
  Eigen::MatrixXd M = L;
  AbsNormalPoint p = make_point(params, std::move(z), std::move(a), std::move(b), std::move(d),
                                std::move(Z), std::move(L), std::move(M), kink_tol);
  p.value = loss_value(spec, fw.out, data.labels[j]);
  return p;
}

Eigen::MatrixXd shared_right_inverse(const ReluNetSpec& spec,
                                     const std::vector<AbsNormalPoint>& points) {
  if (points.empty()) throw ValidationError("shared right inverse needs at least one sample");
  const Index n = idx(spec.n_params());
  const Index s = idx(spec.n_switches());
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, s);
  for (std::size_t t = 1; t <= spec.hidden_layers(); ++t) {
    for (std::size_t r = 0; r < spec.layer_dims[t]; ++r) {
      R(idx(spec.bias_offset(t) + r), idx(spec.switch_offset(t) + r)) = 1.0;
    }
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(s, s);
  for (std::size_t j = 0; j < points.size(); ++j) {
    const auto& p = points[j];
    if (p.Z.rows() != s || p.Z.cols() != n) {
      throw ValidationError("sample " + std::to_string(j) + " was built for a different network");
    }
    if (p.Z * R != I) {
      throw NumericalError("Z R != I for sample " + std::to_string(j));
    }
  }
  return R;
}

Tape to_tape(const ReluNetSpec& spec, const Dataset& data, const std::vector<std::size_t>& batch,
             const Eigen::VectorXd& params) {
  validate(spec);
  validate(data, spec);
  check_params(spec, params);
  if (batch.empty()) throw ValidationError("batch is empty");
  const std::size_t T = spec.hidden_layers();
  TapeBuilder tb(spec.n_params());
  std::vector<std::size_t> x;
  for (std::size_t k = 0; k < spec.n_params(); ++k) x.push_back(tb.input(k));
  const std::size_t half = tb.constant(0.5);

  std::size_t total = kNoIndex;
  for (std::size_t j : batch) {
    check_sample(spec, data, j);
    std::vector<std::size_t> u;
    for (Index c = 0; c < data.inputs[j].size(); ++c) u.push_back(tb.constant(data.inputs[j][c]));
    std::vector<std::size_t> out;
    for (std::size_t t = 1; t <= T + 1; ++t) {
      const std::size_t cols = spec.layer_dims[t - 1];
      std::vector<std::size_t> next;
      for (std::size_t r = 0; r < spec.layer_dims[t]; ++r) {
        std::size_t acc = tb.mul(x[spec.weight_offset(t) + r * cols], u[0]);
        for (std::size_t c = 1; c < cols; ++c) {
          acc = tb.add(acc, tb.mul(x[spec.weight_offset(t) + r * cols + c], u[c]));
        }
        acc = tb.add(acc, x[spec.bias_offset(t) + r]);
        if (t <= T) {
          next.push_back(tb.mul(half, tb.add(acc, tb.abs(acc))));
        } else {
          next.push_back(acc);
        }
      }
      if (t <= T) {
        u = std::move(next);
      } else {
        out = std::move(next);
      }
    }
    const Eigen::VectorXd& v = data.labels[j];
    std::size_t loss;
    if (spec.loss == Loss::Squared) {
      loss = tb.unary(Op::Sqr, tb.sub(out[0], tb.constant(v[0])));
      for (std::size_t m = 1; m < out.size(); ++m) {
        loss = tb.add(loss, tb.unary(Op::Sqr, tb.sub(out[m], tb.constant(v[idx(m)]))));
      }
      loss = tb.mul(half, loss);
    } else {
      std::size_t sum_exp = tb.unary(Op::Exp, out[0]);
      for (std::size_t m = 1; m < out.size(); ++m) sum_exp = tb.add(sum_exp, tb.unary(Op::Exp, out[m]));
      loss = tb.mul(tb.unary(Op::Log, sum_exp), tb.constant(v.sum()));
      for (std::size_t m = 0; m < out.size(); ++m) {
        loss = tb.sub(loss, tb.mul(tb.constant(v[idx(m)]), out[m]));
      }
    }
    total = total == kNoIndex ? loss : tb.add(total, loss);
  }
  return tb.build(tb.mul(tb.constant(1.0 / static_cast<double>(batch.size())), total));
}

BatchContext BatchContext::make(const ReluNetSpec& spec, const Dataset& data,
                                std::vector<std::size_t> batch, const Eigen::VectorXd& params,
                                Eigen::VectorXd zeta, double kink_tol) {
  validate(spec);
  validate(data, spec);
  if (batch.empty()) throw ValidationError("batch is empty");
  if (static_cast<std::size_t>(zeta.size()) != spec.n_switches()) {
    throw ValidationError("zeta has length " + std::to_string(zeta.size()) + ", expected s = " +
                          std::to_string(spec.n_switches()));
  }
  for (Index k = 0; k < zeta.size(); ++k) {
    if (!(std::abs(zeta[k]) <= 1.0)) throw ValidationError("zeta entries must lie in [-1, 1]");
  }
  BatchContext ctx;
  for (std::size_t j : batch) ctx.points_.push_back(build_absnormal(spec, data, j, params, kink_tol));
  ctx.batch_ = std::move(batch);
  ctx.zeta_ = std::move(zeta);
  ctx.right_inverse_ = shared_right_inverse(spec, ctx.points_);
  return ctx;
}

XiChoice sample_xi(const AbsNormalPoint& p, const Eigen::VectorXd& zeta) {
  if (static_cast<std::size_t>(zeta.size()) != p.s()) throw ValidationError("zeta length mismatch");
  Eigen::VectorXd xi = p.sigma.as_vector();
  for (std::size_t k : p.alpha) xi[idx(k)] = zeta[idx(k)];
  return XiChoice::make(p.sigma, std::move(xi));
}

Signature sample_sigma(const Signature& sigma_bar, const Signature& tau) {
  if (tau.size() != sigma_bar.size()) throw ValidationError("tau length mismatch");
  Signature out = sigma_bar;
  for (std::size_t k : sigma_bar.active()) out.set(k, tau[k]);
  return out;
}

Eigen::VectorXd batch_gradient(const BatchContext& ctx) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(ctx.points().front().x.size());
  for (const auto& p : ctx.points()) g += grad_xi(p, sample_xi(p, ctx.zeta()));
  return g / static_cast<double>(ctx.points().size());
}

TauDirection tau_direction(const BatchContext& ctx, const Signature& tau) {
  const std::size_t s = ctx.n_switches();
  if (tau.size() != s || !tau.definite()) {
    throw ValidationError("tau must be a definite signature of length " + std::to_string(s));
  }
  const auto& pts = ctx.points();
  std::vector<Signature> sig;
  for (const auto& p : pts) sig.push_back(sample_sigma(p.sigma, tau));

  // w[j] = (I - M - L Sigma_tau^[j])^{-1} v, built alongside v.
  TauDirection out;
  out.v = Eigen::VectorXd::Zero(idx(s));
  std::vector<Eigen::VectorXd> w(pts.size(), Eigen::VectorXd::Zero(idx(s)));
  for (std::size_t k = 0; k < s; ++k) {
    double worst = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) {
        acc += std::abs(pts[j].M(idx(k), idx(l)) + pts[j].L(idx(k), idx(l)) * sig[j][l]) *
               std::abs(w[j][idx(l)]);
      }
      worst = std::max(worst, acc);
    }
    const double vk = tau[k] * (1.0 + worst);
    out.v[idx(k)] = vk;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      double acc = vk;
      for (std::size_t l = 0; l < k; ++l) {
        acc += (pts[j].M(idx(k), idx(l)) + pts[j].L(idx(k), idx(l)) * sig[j][l]) * w[j][idx(l)];
      }
      w[j][idx(k)] = acc;
    }
  }
  out.d = ctx.right_inverse() * out.v;

  out.min_certificate = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const Eigen::VectorXd dz = switching_jacobian(pts[j], sig[j].as_vector()) * out.d;
    for (std::size_t k = 0; k < s; ++k) {
      out.min_certificate = std::min(out.min_certificate, tau[k] * dz[idx(k)]);
    }
  }
  if (s > 0 && out.min_certificate < 1.0 - 1e-9) {
    throw NumericalError("direction certificate " + std::to_string(out.min_certificate) + " < 1");
  }
  return out;
}

Trajectory sgd_train(const ReluNetSpec& spec, const Dataset& data, Eigen::VectorXd params,
                     const TrainOptions& options) {
  validate(spec);
  validate(data, spec);
  check_params(spec, params);
  if (!(options.schedule.initial >= 0.0) || !(options.schedule.decay >= 0.0)) {
    throw ValidationError("step sizes must be non-negative");
  }
  const std::size_t J = data.size();
  if (options.batch_size > J) throw ValidationError("batch size exceeds the dataset");
  const std::size_t batch_size = options.batch_size == 0 ? J : options.batch_size;
  const Eigen::VectorXd zeta =
      options.zeta.size() == 0 ? Eigen::VectorXd::Zero(idx(spec.n_switches())) : options.zeta;

  std::vector<std::size_t> all(J), order(J);
  for (std::size_t j = 0; j < J; ++j) all[j] = order[j] = j;
  Rng rng(options.seed);
  std::size_t cursor = J;

  Trajectory traj;
  auto full_loss = [&] {
    const double loss = batch_loss(spec, data, all, params);
    if (!std::isfinite(loss) || loss > options.divergence_limit) {
      throw NumericalError("training diverged: loss " + std::to_string(loss) + " at iteration " +
                           std::to_string(traj.rows.size()));
    }
    return loss;
  };
  for (std::size_t k = 0; k < options.iterations; ++k) {
    std::vector<std::size_t> batch;
    if (batch_size == J) {
      batch = all;
    } else {
      if (cursor + batch_size > J) {
        for (std::size_t i = J; i > 1; --i) std::swap(order[i - 1], order[rng.index(0, i - 1)]);
        cursor = 0;
      }
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                   order.begin() + static_cast<std::ptrdiff_t>(cursor + batch_size));
      cursor += batch_size;
    }
    const double loss = full_loss();
    const auto ctx = BatchContext::make(spec, data, std::move(batch), params, zeta, options.kink_tol);
    const Eigen::VectorXd g = batch_gradient(ctx);
    traj.rows.push_back({k, loss, g.norm()});
    params -= options.schedule.at(k) * g;
  }
  const double loss = full_loss();
  const auto ctx = BatchContext::make(spec, data, all, params, zeta, options.kink_tol);
  traj.rows.push_back({options.iterations, loss, batch_gradient(ctx).norm()});
  traj.params = std::move(params);
  return traj;
}

}  // namespace absnf
