#pragma once

// Topology-conditioned denoising diffusion over edge timestamps.
//
// The edge set is fixed; only a per-edge scalar (the affinely rescaled rank
// of the edge in the generation order) is diffused. A graph-attention
// denoiser reads the noisy edge values, the diffusion step and fixed node
// conditioning features, and predicts the injected noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "autodiff.hpp"
#include "error.hpp"
#include "features.hpp"
#include "netio.hpp"

namespace netchrono {

// ---------------------------------------------------------------------------
// Noise schedule and forward process

struct NoiseSchedule {
  std::vector<double> beta;       // beta[t-1] for t = 1..T
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha

  std::size_t steps() const noexcept { return beta.size(); }
  double beta_at(std::size_t t) const { return beta.at(t - 1); }
  double alpha_at(std::size_t t) const { return alpha.at(t - 1); }
  double alpha_bar_at(std::size_t t) const { return alpha_bar.at(t - 1); }

  // True when the last step is close to pure noise.
  bool reaches_noise(double threshold = 0.05) const { return !alpha_bar.empty() && alpha_bar.back() < threshold; }
};

struct ScheduleConfig {
  std::size_t steps = 200;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

inline NoiseSchedule make_schedule(std::size_t steps, double beta_start, double beta_end) {
  if (steps < 2) throw DomainError("noise schedule needs at least 2 steps");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw DomainError("noise schedule requires 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.beta.resize(steps);
  s.alpha.resize(steps);
  s.alpha_bar.resize(steps);
  double prod = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    s.beta[i] = beta_start + (beta_end - beta_start) * static_cast<double>(i) / static_cast<double>(steps - 1);
    s.alpha[i] = 1.0 - s.beta[i];
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  return s;
}

inline NoiseSchedule make_schedule(const ScheduleConfig& c) { return make_schedule(c.steps, c.beta_start, c.beta_end); }

// F^t = sqrt(abar_t) F^0 + sqrt(1 - abar_t) noise
inline std::vector<double> forward_diffuse(std::span<const double> f0, std::size_t t, const NoiseSchedule& sched,
                                           std::span<const double> noise) {
  if (t < 1 || t > sched.steps()) throw DomainError("forward_diffuse: step out of range");
  if (noise.size() != f0.size()) throw DomainError("forward_diffuse: noise length differs from F0");
  const double a = std::sqrt(sched.alpha_bar_at(t));
  const double b = std::sqrt(1.0 - sched.alpha_bar_at(t));
  std::vector<double> out(f0.size());
  for (std::size_t i = 0; i < f0.size(); ++i) out[i] = a * f0[i] + b * noise[i];
  return out;
}

// One transition of the Markov chain: F^t = sqrt(1 - beta_t) F^{t-1} + sqrt(beta_t) noise
inline std::vector<double> diffuse_step(std::span<const double> prev, std::size_t t, const NoiseSchedule& sched,
                                        std::span<const double> noise) {
  if (t < 1 || t > sched.steps()) throw DomainError("diffuse_step: step out of range");
  if (noise.size() != prev.size()) throw DomainError("diffuse_step: noise length differs from state");
  const double a = std::sqrt(1.0 - sched.beta_at(t));
  const double b = std::sqrt(sched.beta_at(t));
  std::vector<double> out(prev.size());
  for (std::size_t i = 0; i < prev.size(); ++i) out[i] = a * prev[i] + b * noise[i];
  return out;
}

// ---------------------------------------------------------------------------
// Denoiser

struct DenoiserConfig {
  std::size_t layers = 3;
  std::size_t hidden = 64;
  std::size_t step_dim = 32;
  bool full_attention = false;
};

// Fixed topology plus conditioning, prepared for the attention layers.
struct DenoiserGraph {
  std::size_t nodes{0};
  std::vector<std::size_t> u, v;  // edge endpoints
  ad::Matrix conditioning;        // nodes x kNodeMetricCount, read-only
  std::vector<std::size_t> arc_dst, arc_src, arc_slot;  // slot == edges for non-edge arcs
  std::vector<std::size_t> arc_fwd, arc_rev;            // per edge: arc v<-u and arc u<-v

  std::size_t edges() const noexcept { return u.size(); }
};

inline DenoiserGraph make_denoiser_graph(const TemporalNetwork& net, std::span<const NodeFeature> cond,
                                         bool full_attention = false) {
  if (cond.size() != net.node_count()) throw DomainError("conditioning table must have one row per node");
  DenoiserGraph g;
  g.nodes = net.node_count();
  const auto m = net.edge_count();
  g.conditioning.resize(static_cast<Eigen::Index>(g.nodes), static_cast<Eigen::Index>(kNodeMetricCount));
  for (std::size_t i = 0; i < g.nodes; ++i)
    for (std::size_t c = 0; c < kNodeMetricCount; ++c)
      g.conditioning(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = cond[i][c];
  for (EdgeIndex k = 0; k < m; ++k) {
    const auto& e = net.edge(k);
    g.u.push_back(e.u);
    g.v.push_back(e.v);
    g.arc_fwd.push_back(g.arc_dst.size());
    g.arc_dst.push_back(e.v);
    g.arc_src.push_back(e.u);
    g.arc_slot.push_back(k);
    g.arc_rev.push_back(g.arc_dst.size());
    g.arc_dst.push_back(e.u);
    g.arc_src.push_back(e.v);
    g.arc_slot.push_back(k);
  }
  if (full_attention) {
    for (NodeIndex a = 0; a < g.nodes; ++a)
      for (NodeIndex b = 0; b < g.nodes; ++b) {
        if (a == b || net.find_edge(a, b)) continue;
        g.arc_dst.push_back(a);
        g.arc_src.push_back(b);
        g.arc_slot.push_back(m);
      }
  }
  return g;
}

inline DenoiserGraph make_denoiser_graph(const TemporalNetwork& net, bool full_attention = false) {
  const auto cond = conditioning_features(node_metrics(net));
  return make_denoiser_graph(net, cond, full_attention);
}

// The head estimates the clean values x0 = tanh(h); the noise prediction is
// eps = gate * (F^t - sqrt(abar_t) x0) / sqrt(1 - abar_t).
struct DenoiserModel {
  DenoiserConfig config;
  std::vector<double> alpha_bar;  // of the schedule the model was built for
  double gate{0.0};               // fixed, not trained
  std::vector<ad::Matrix> params;

  std::size_t steps() const noexcept { return alpha_bar.size(); }

  // parameter slots
  static constexpr std::size_t kNodeIn = 0, kNodeInBias = 1, kEdgeValue = 2, kEdgeStep = 3, kEdgeBias = 4,
                               kNoEdge = 5, kFirstLayer = 6, kPerLayer = 8;
  enum LayerSlot : std::size_t { Q = 0, K, V, E, NodeOut, NodeOutBias, EdgeOut, EdgeOutBias };
  std::size_t head() const { return kFirstLayer + kPerLayer * config.layers; }
  std::size_t layer(std::size_t l, LayerSlot s) const { return kFirstLayer + kPerLayer * l + s; }
  // head slots: node proj, edge proj, bias, output weight, output bias
  std::size_t head_slot(std::size_t k) const { return head() + k; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += static_cast<std::size_t>(p.size());
    return n;
  }
};

namespace detail {

inline ad::Matrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double gain = 1.0) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  ad::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline ad::Matrix zeros(std::size_t rows, std::size_t cols) {
  return ad::Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline ad::Matrix step_embedding(std::size_t t, std::size_t dim) {
  ad::Matrix e(1, static_cast<Eigen::Index>(dim));
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
    e(0, static_cast<Eigen::Index>(2 * i)) = std::sin(static_cast<double>(t) * freq);
    e(0, static_cast<Eigen::Index>(2 * i + 1)) = std::cos(static_cast<double>(t) * freq);
  }
  if (dim % 2) e(0, static_cast<Eigen::Index>(dim - 1)) = 0.0;
  return e;
}

}  // namespace detail

// Zero parameters and a closed gate (eps = 0) when `rng` is null, otherwise
// Glorot-uniform weights, zero biases and an open gate.
inline DenoiserModel make_denoiser(const DenoiserConfig& cfg, const NoiseSchedule& sched,
                                   std::mt19937_64* rng = nullptr) {
  if (cfg.layers == 0 || cfg.hidden == 0 || cfg.step_dim == 0 || sched.steps() == 0) {
    throw DomainError("denoiser sizes must be positive");
  }
  DenoiserModel m;
  m.config = cfg;
  m.alpha_bar = sched.alpha_bar;
  const auto h = cfg.hidden;
  auto w = [&](std::size_t r, std::size_t c, double gain = 1.0) {
    return rng ? detail::glorot(r, c, *rng, gain) : detail::zeros(r, c);
  };
  m.params.push_back(w(kNodeMetricCount, h));
  m.params.push_back(detail::zeros(1, h));
  m.params.push_back(w(1, h));
  m.params.push_back(w(cfg.step_dim, h));
  m.params.push_back(detail::zeros(1, h));
  m.params.push_back(w(1, h));
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    m.params.push_back(w(h, h));
    m.params.push_back(w(h, h));
    m.params.push_back(w(h, h));
    m.params.push_back(w(h, h));
    m.params.push_back(w(h, h, 0.5));
    m.params.push_back(detail::zeros(1, h));
    m.params.push_back(w(h, h, 0.5));
    m.params.push_back(detail::zeros(1, h));
  }
  m.params.push_back(w(h, h));
  m.params.push_back(w(h, h));
  m.params.push_back(detail::zeros(1, h));
  m.params.push_back(w(h, 1));
  m.params.push_back(detail::zeros(1, 1));
  m.gate = rng ? 1.0 : 0.0;
  return m;
}

// Records the denoiser on `tape` and returns the per-edge noise prediction
// (edges x 1). When `grads` is given, parameters are leaves whose gradients
// accumulate into it.
inline ad::Var record_denoiser(ad::Tape& tape, const DenoiserModel& model, const DenoiserGraph& g,
                               const ad::Matrix& noisy, std::size_t t, std::vector<ad::Matrix>* grads = nullptr) {
  const auto m = g.edges();
  if (static_cast<std::size_t>(noisy.rows()) != m || noisy.cols() != 1) {
    throw DomainError("denoiser: noisy state must have one value per edge");
  }
  if (t < 1 || t > model.steps()) throw DomainError("denoiser: step out of range");
  if (g.conditioning.cols() != static_cast<Eigen::Index>(kNodeMetricCount)) {
    throw DomainError("denoiser: conditioning width mismatch");
  }
  std::vector<ad::Var> p(model.params.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = grads ? tape.parameter(model.params[i], &(*grads)[i]) : tape.constant(model.params[i]);
  }
  const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(model.config.hidden));
  const auto f = tape.constant(noisy);

  auto x = tape.add_row(tape.matmul(tape.constant(g.conditioning), p[DenoiserModel::kNodeIn]),
                        p[DenoiserModel::kNodeInBias]);
  const auto step_row =
      tape.add(tape.matmul(tape.constant(detail::step_embedding(t, model.config.step_dim)), p[DenoiserModel::kEdgeStep]),
               p[DenoiserModel::kEdgeBias]);
  auto e = tape.add_row(tape.matmul(f, p[DenoiserModel::kEdgeValue]), step_row);

  const bool has_free_arcs = g.arc_dst.size() > 2 * m;
  for (std::size_t l = 0; l < model.config.layers; ++l) {
    using S = DenoiserModel::LayerSlot;
    const auto q = tape.matmul(x, p[model.layer(l, S::Q)]);
    const auto k = tape.matmul(x, p[model.layer(l, S::K)]);
    const auto val = tape.matmul(x, p[model.layer(l, S::V)]);
    auto ep = tape.matmul(e, p[model.layer(l, S::E)]);
    if (has_free_arcs) ep = tape.concat_rows(ep, p[DenoiserModel::kNoEdge]);

    const auto ea = tape.gather_rows(ep, g.arc_slot);
    const auto h = tape.scale(tape.mul(tape.mul(tape.gather_rows(q, g.arc_dst), tape.gather_rows(k, g.arc_src)), ea),
                              inv_sqrt_h);
    const auto w = tape.segment_softmax(tape.rowsum(h), g.arc_dst, g.nodes);
    const auto msg = tape.scale_rows(tape.add(tape.gather_rows(val, g.arc_src), ea), w);
    const auto agg = tape.scatter_add_rows(msg, g.arc_dst, g.nodes);
    x = tape.add(x, tape.relu(tape.add_row(tape.matmul(agg, p[model.layer(l, S::NodeOut)]),
                                           p[model.layer(l, S::NodeOutBias)])));
    const auto pair = tape.add(tape.gather_rows(h, g.arc_fwd), tape.gather_rows(h, g.arc_rev));
    e = tape.add(e, tape.relu(tape.add_row(tape.matmul(pair, p[model.layer(l, S::EdgeOut)]),
                                           p[model.layer(l, S::EdgeOutBias)])));
  }

  const auto ends = tape.add(tape.gather_rows(x, g.u), tape.gather_rows(x, g.v));
  const auto z = tape.relu(tape.add_row(
      tape.add(tape.matmul(ends, p[model.head_slot(0)]), tape.matmul(e, p[model.head_slot(1)])), p[model.head_slot(2)]));
  const auto x0 = tape.tanh(tape.add_row(tape.matmul(z, p[model.head_slot(3)]), p[model.head_slot(4)]));
  const double abar = model.alpha_bar[t - 1];
  const auto resid = tape.add(f, tape.scale(x0, -std::sqrt(abar)));
  return tape.scale(resid, model.gate / std::sqrt(1.0 - abar));
}

inline std::vector<double> denoiser_forward(const DenoiserModel& model, const DenoiserGraph& g,
                                            std::span<const double> noisy, std::size_t t) {
  ad::Matrix f(static_cast<Eigen::Index>(noisy.size()), 1);
  std::copy(noisy.begin(), noisy.end(), f.data());
  ad::Tape tape;
  const auto out = record_denoiser(tape, model, g, f, t);
  const auto& v = tape.value(out);
  return {v.data(), v.data() + v.size()};
}

// ---------------------------------------------------------------------------
// Training

struct DiffusionSample {
  DenoiserGraph graph;
  std::vector<double> f0;  // in [-1, 1]
};

struct DiffusionTrainConfig {
  int epochs = 30;
  std::size_t batch = 4;  // graphs per optimizer step
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct DenoiserTrainResult {
  DenoiserModel model;
  std::vector<double> loss_trace;  // mean per-sample loss per epoch
};

namespace detail {

class ParamAdam {
 public:
  ParamAdam(const std::vector<ad::Matrix>& shape, double lr) : lr_(lr) {
    for (const auto& p : shape) {
      m_.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
      v_.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
    }
  }

  void step(std::vector<ad::Matrix>& params, const std::vector<ad::Matrix>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(0.9, t_);
    const double c2 = 1.0 - std::pow(0.999, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = 0.9 * m_[i] + 0.1 * grads[i];
      v_[i] = 0.999 * v_[i] + 0.001 * grads[i].cwiseProduct(grads[i]);
      params[i].array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + 1e-8);
    }
  }

 private:
  double lr_;
  int t_{0};
  std::vector<ad::Matrix> m_, v_;
};

}  // namespace detail

// Noise-prediction loss for one sample at step t with the given noise, and
// its parameter gradient accumulated (scaled by `weight`) into grads.
inline double denoiser_loss(const DenoiserModel& model, const DiffusionSample& s, std::size_t t,
                            std::span<const double> noise, const NoiseSchedule& sched,
                            std::vector<ad::Matrix>* grads = nullptr, double weight = 1.0) {
  const auto ft = forward_diffuse(s.f0, t, sched, noise);
  ad::Matrix f(static_cast<Eigen::Index>(ft.size()), 1), target(static_cast<Eigen::Index>(ft.size()), 1);
  std::copy(ft.begin(), ft.end(), f.data());
  std::copy(noise.begin(), noise.end(), target.data());
  ad::Tape tape;
  std::vector<ad::Matrix> local;
  if (grads) {
    for (const auto& p : model.params) local.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
  }
  const auto pred = record_denoiser(tape, model, s.graph, f, t, grads ? &local : nullptr);
  const auto loss = tape.mse(pred, target);
  const double value = tape.value(loss)(0, 0);
  if (grads) {
    tape.backward(loss);
    for (std::size_t i = 0; i < local.size(); ++i) (*grads)[i] += weight * local[i];
  }
  return value;
}

inline DenoiserTrainResult train_denoiser(std::span<const DiffusionSample> samples, const NoiseSchedule& sched,
                                          const DenoiserConfig& dcfg, const DiffusionTrainConfig& cfg) {
  if (samples.empty()) throw DomainError("train_denoiser: no samples");
  if (cfg.epochs <= 0 || cfg.batch == 0 || !(cfg.lr > 0.0)) throw DomainError("train_denoiser: bad config");
  for (const auto& s : samples) {
    if (s.f0.size() != s.graph.edges()) throw DomainError("train_denoiser: F0 length differs from edge count");
    for (double v : s.f0)
      if (!std::isfinite(v) || v < -1.0 - 1e-12 || v > 1.0 + 1e-12)
        throw DomainError("train_denoiser: F0 must be finite and lie in [-1, 1]");
  }
  std::mt19937_64 rng(cfg.seed);
  DenoiserTrainResult res;
  res.model = make_denoiser(dcfg, sched, &rng);
  detail::ParamAdam opt(res.model.params, cfg.lr);
  std::uniform_int_distribution<std::size_t> pick_t(1, sched.steps());
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ad::Matrix> grads;
  for (const auto& p : res.model.params) grads.push_back(ad::Matrix::Zero(p.rows(), p.cols()));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t n = std::min(cfg.batch, order.size() - start);
      for (auto& gm : grads) gm.setZero();
      for (std::size_t b = 0; b < n; ++b) {
        const auto& s = samples[order[start + b]];
        const std::size_t t = pick_t(rng);
        std::vector<double> noise(s.f0.size());
        for (auto& z : noise) z = normal(rng);
        const double loss = denoiser_loss(res.model, s, t, noise, sched, &grads, 1.0 / static_cast<double>(n));
        if (!std::isfinite(loss)) {
          throw NumericError("denoiser training diverged at epoch " + std::to_string(epoch + 1) + " (step t=" +
                             std::to_string(t) + ", loss " + std::to_string(loss) + ")");
        }
        total += loss;
      }
      opt.step(res.model.params, grads);
    }
    res.loss_trace.push_back(total / static_cast<double>(order.size()));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Reverse process

enum class ReverseVariance {
  AlphaBar,  // 1 - abar_t
  Beta,      // beta_t
};

struct ReverseOptions {
  bool stochastic = true;  // false zeroes every z
  ReverseVariance variance = ReverseVariance::AlphaBar;
};

using NoisePredictor = std::function<std::vector<double>(std::span<const double> state, std::size_t t)>;

inline std::vector<double> reverse_from(const NoiseSchedule& sched, std::vector<double> f,
                                        const NoisePredictor& predict, std::mt19937_64& rng,
                                        const ReverseOptions& opt, std::size_t from_step) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t t = from_step; t >= 1; --t) {
    const auto eps = predict(f, t);
    if (eps.size() != f.size()) throw DomainError("noise predictor returned the wrong length");
    const double coef = sched.beta_at(t) / std::sqrt(1.0 - sched.alpha_bar_at(t));
    const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha_at(t));
    const double sigma = std::sqrt(opt.variance == ReverseVariance::Beta ? sched.beta_at(t) : 1.0 - sched.alpha_bar_at(t));
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = inv_sqrt_alpha * (f[i] - coef * eps[i]);
      if (t > 1 && opt.stochastic) f[i] += sigma * normal(rng);
      if (!std::isfinite(f[i])) throw NumericError("reverse sampling produced a non-finite value at step " + std::to_string(t));
    }
  }
  return f;
}

// F^{t-1} = (F^t - beta_t / sqrt(1 - abar_t) eps) / sqrt(alpha_t) + sqrt(1 - abar_t) z,
// starting from standard normal F^T, with z = 0 at t = 1.
inline std::vector<double> reverse_sample(const NoiseSchedule& sched, std::size_t m, const NoisePredictor& predict,
                                          std::mt19937_64& rng, const ReverseOptions& opt = {}) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> f(m);
  for (auto& v : f) v = normal(rng);
  return reverse_from(sched, std::move(f), predict, rng, opt, sched.steps());
}

inline std::vector<double> sample_timestamps(const DenoiserModel& model, const DenoiserGraph& g,
                                             const NoiseSchedule& sched, std::uint64_t seed,
                                             const ReverseOptions& opt = {}) {
  if (model.alpha_bar != sched.alpha_bar) throw DomainError("sample_timestamps: model was built for a different schedule");
  std::mt19937_64 rng(seed);
  NoisePredictor predict = [&](std::span<const double> state, std::size_t t) {
    return denoiser_forward(model, g, state, t);
  };
  return reverse_sample(sched, g.edges(), predict, rng, opt);
}

// ---------------------------------------------------------------------------
// Augmentation

// Ranks mapped affinely onto [-1, 1]; tied timestamps share their mean rank.
inline std::vector<double> encode_order(const TemporalNetwork& net) {
  const auto ts = net.timestamps();
  auto rank = mean_ranks(ts);
  const double m = static_cast<double>(rank.size());
  for (auto& r : rank) r = m > 1.0 ? -1.0 + 2.0 * (r - 1.0) / (m - 1.0) : 0.0;
  return rank;
}

// Continuous values to timestamps rank/M, ties broken by edge index.
inline std::vector<double> decode_order(std::span<const double> values) {
  const auto m = values.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ts(m);
  for (std::size_t r = 0; r < m; ++r) ts[idx[r]] = static_cast<double>(r + 1) / static_cast<double>(m);
  return ts;
}

struct AugmentConfig {
  std::size_t training_samples = 100;
  double min_fraction = 0.5;
  ScheduleConfig schedule{};
  DenoiserConfig denoiser{};
  DiffusionTrainConfig train{};
  ReverseOptions reverse{};
  std::uint64_t seed = 1;
};

struct AugmentResult {
  std::vector<TemporalNetwork> networks;
  std::vector<double> loss_trace;
  DenoiserModel model;
};

inline DiffusionSample make_diffusion_sample(const TemporalNetwork& net, bool full_attention = false) {
  return {make_denoiser_graph(net, full_attention), encode_order(net)};
}

// Trains on subnetworks retaining evenly spaced fractions of the edges in
// [min_fraction, 1], then samples `count` orders over the full topology.
inline AugmentResult generate_augmented(const TemporalNetwork& net, std::size_t count, const AugmentConfig& cfg) {
  if (count == 0) throw DomainError("generate_augmented: count must be positive");
  if (snapshot_count(net) < 2) throw DomainError("generate_augmented: network needs at least 2 distinct timestamps");
  if (cfg.training_samples == 0) throw DomainError("generate_augmented: training_samples must be positive");

  const auto sched = make_schedule(cfg.schedule);
  std::mt19937_64 seeder(cfg.seed);
  std::vector<DiffusionSample> samples;
  samples.reserve(cfg.training_samples);
  for (std::size_t i = 0; i < cfg.training_samples; ++i) {
    const double frac = cfg.training_samples == 1
                            ? 1.0
                            : cfg.min_fraction + (1.0 - cfg.min_fraction) * static_cast<double>(i) /
                                                     static_cast<double>(cfg.training_samples - 1);
    const auto sub = sample_subnetwork(net, frac, seeder());
    samples.push_back(make_diffusion_sample(sub, cfg.denoiser.full_attention));
  }

  auto tcfg = cfg.train;
  tcfg.seed = seeder();
  auto trained = train_denoiser(samples, sched, cfg.denoiser, tcfg);

  const auto graph = make_denoiser_graph(net, cfg.denoiser.full_attention);
  AugmentResult res;
  for (std::size_t k = 0; k < count; ++k) {
    const auto values = sample_timestamps(trained.model, graph, sched, seeder(), cfg.reverse);
    res.networks.push_back(net.with_timestamps(decode_order(values)));
  }
  res.loss_trace = std::move(trained.loss_trace);
  res.model = std::move(trained.model);
  return res;
}

inline nlohmann::ordered_json to_json(const AugmentConfig& c) {
  nlohmann::ordered_json j;
  j["training_samples"] = c.training_samples;
  j["min_fraction"] = c.min_fraction;
  j["schedule"] = {{"T", c.schedule.steps}, {"beta_start", c.schedule.beta_start}, {"beta_end", c.schedule.beta_end}};
  j["denoiser"] = {{"layers", c.denoiser.layers},
                   {"hidden", c.denoiser.hidden},
                   {"step_dim", c.denoiser.step_dim},
                   {"full_attention", c.denoiser.full_attention}};
  j["train"] = {{"epochs", c.train.epochs}, {"batch", c.train.batch}, {"lr", c.train.lr}};
  j["variance"] = c.reverse.variance == ReverseVariance::Beta ? "beta" : "alpha_bar";
  j["seed"] = c.seed;
  return j;
}

}  // namespace netchrono
