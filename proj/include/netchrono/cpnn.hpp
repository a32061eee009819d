#pragma once

// Pairwise edge comparator: a 3-layer network over two concatenated edge
// embeddings that outputs Pr(first edge generated before the second).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "error.hpp"
#include "features.hpp"
#include "netio.hpp"
#include "ordering.hpp"

namespace netchrono {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr std::size_t kPairInputDim = 2 * kEdgeFeatureDim;
inline constexpr int kCheckpointVersion = 1;

constexpr std::size_t hidden_width(std::size_t input_dim) { return (2 * input_dim + 2) / 3; }

struct CpnnParams {
  Matrix w1;  // hidden x D
  Vector b1;
  Matrix w2;  // 2 x hidden
  Vector b2;

  static CpnnParams zeros(std::size_t d) {
    const auto h = static_cast<Eigen::Index>(hidden_width(d));
    const auto dd = static_cast<Eigen::Index>(d);
    return {Matrix::Zero(h, dd), Vector::Zero(h), Matrix::Zero(2, h), Vector::Zero(2)};
  }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }

  // Flat views in the fixed order w1, b1, w2, b2.
  template <class F>
  void for_each(F&& f) {
    f(w1.data(), w1.size());
    f(b1.data(), b1.size());
    f(w2.data(), w2.size());
    f(b2.data(), b2.size());
  }
  template <class F>
  void for_each(F&& f) const {
    f(w1.data(), w1.size());
    f(b1.data(), b1.size());
    f(w2.data(), w2.size());
    f(b2.data(), b2.size());
  }
};

struct CpnnModel {
  std::size_t input_dim{kPairInputDim};
  double lambda{1e-4};
  CpnnParams params{CpnnParams::zeros(kPairInputDim)};
  std::vector<std::pair<std::string, Standardization>> standardization;  // informational sidecar

  static CpnnModel zeros(double lambda = 1e-4, std::size_t d = kPairInputDim) {
    return {d, lambda, CpnnParams::zeros(d), {}};
  }

  bool finite() const {
    bool ok = true;
    params.for_each([&](const double* p, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) ok = ok && std::isfinite(p[i]);
    });
    return ok;
  }
};

struct Prediction {
  double before{0.5};
  double after{0.5};
};

namespace detail {

inline Prediction softmax2(double z1, double z2) {
  const double d = z1 - z2;
  // 1 / (1 + e^{-d}) evaluated without overflow
  if (d >= 0) {
    const double e = std::exp(-d);
    return {1.0 / (1.0 + e), e / (1.0 + e)};
  }
  const double e = std::exp(d);
  return {e / (1.0 + e), 1.0 / (1.0 + e)};
}

}  // namespace detail

inline Prediction forward(const CpnnModel& model, std::span<const double> h1, std::span<const double> h2) {
  if (h1.size() + h2.size() != model.input_dim || h1.size() != h2.size()) {
    throw DomainError("cpnn forward: embedding dimensions do not match the model input");
  }
  const auto& p = model.params;
  Vector x(static_cast<Eigen::Index>(model.input_dim));
  std::copy(h1.begin(), h1.end(), x.data());
  std::copy(h2.begin(), h2.end(), x.data() + h1.size());
  const Vector hidden = (p.w1 * x + p.b1).cwiseMax(0.0);
  const Vector z = p.w2 * hidden + p.b2;
  return detail::softmax2(z(0), z(1));
}

// ---------------------------------------------------------------------------
// Pair datasets

// Rows are [h_i ; h_j]; y = 1 iff edge i was generated strictly before edge j.
struct PairDataset {
  std::string network;
  Matrix x;
  std::vector<std::uint8_t> y;
  std::vector<std::pair<EdgeIndex, EdgeIndex>> edges;  // operand edges of each row

  std::size_t size() const noexcept { return y.size(); }
};

struct PairSamplingOptions {
  std::size_t cap = 100000;
  std::uint64_t seed = 1;
};

// Distinguishable pairs among `subset`, uniformly capped and balanced by
// operand order: the first half of the (shuffled) pairs is stored earliest
// first, the rest latest first.
inline PairDataset build_pair_dataset(std::span<const EdgeIndex> subset, std::span<const double> timestamps,
                                      std::span<const EdgeEmbedding> embeddings, const PairSamplingOptions& opt,
                                      std::string network = {}) {
  std::mt19937_64 rng(opt.seed);
  const std::size_t k = subset.size();
  const std::uint64_t total = k < 2 ? 0 : static_cast<std::uint64_t>(k) * (k - 1) / 2;
  std::vector<std::pair<EdgeIndex, EdgeIndex>> pairs;

  if (total <= 4 * static_cast<std::uint64_t>(opt.cap)) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        if (timestamps[subset[a]] != timestamps[subset[b]]) pairs.emplace_back(subset[a], subset[b]);
      }
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    if (pairs.size() > opt.cap) pairs.resize(opt.cap);
  } else {
    std::unordered_set<std::uint64_t> seen;
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 50 * opt.cap;
    while (pairs.size() < opt.cap && attempts++ < max_attempts) {
      auto a = pick(rng), b = pick(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (timestamps[subset[a]] == timestamps[subset[b]]) continue;
      if (!seen.insert(static_cast<std::uint64_t>(a) * k + b).second) continue;
      pairs.emplace_back(subset[a], subset[b]);
    }
  }

  PairDataset ds;
  ds.network = std::move(network);
  const auto n = pairs.size();
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kPairInputDim));
  ds.y.resize(n);
  ds.edges.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto [i, j] = pairs[r];
    if (timestamps[j] < timestamps[i]) std::swap(i, j);  // i earlier
    const bool earliest_first = r < (n + 1) / 2;
    if (!earliest_first) std::swap(i, j);
    ds.y[r] = earliest_first ? 1 : 0;
    ds.edges[r] = {i, j};
    const auto& hi = embeddings[i];
    const auto& hj = embeddings[j];
    for (std::size_t c = 0; c < kEdgeFeatureDim; ++c) {
      ds.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = hi[c];
      ds.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(kEdgeFeatureDim + c)) = hj[c];
    }
  }
  return ds;
}

inline PairDataset build_pair_dataset(const TemporalNetwork& net, std::span<const EdgeEmbedding> embeddings,
                                      const PairSamplingOptions& opt, std::string network = {}) {
  std::vector<EdgeIndex> all(net.edge_count());
  std::iota(all.begin(), all.end(), EdgeIndex{0});
  const auto ts = net.timestamps();
  return build_pair_dataset(all, ts, embeddings, opt, std::move(network));
}

// ---------------------------------------------------------------------------
// Loss and gradients

inline constexpr double kProbClamp = 1e-12;

struct LossAndGrad {
  double loss{0.0};
  double data_loss{0.0};
  CpnnParams grad;
};

// Mean cross-entropy over the rows plus lambda * (|W1|^2 + |W2|^2).
inline LossAndGrad loss_and_grad(const CpnnModel& model, const Eigen::Ref<const Matrix>& x,
                                 std::span<const std::uint8_t> y) {
  const auto b = x.rows();
  if (b == 0) throw DomainError("loss_and_grad: empty batch");
  if (x.cols() != static_cast<Eigen::Index>(model.input_dim) || static_cast<std::size_t>(b) != y.size()) {
    throw DomainError("loss_and_grad: batch shape does not match the model");
  }
  const auto& p = model.params;
  const Matrix pre = (x * p.w1.transpose()).rowwise() + p.b1.transpose();
  const Matrix hidden = pre.cwiseMax(0.0);
  const Matrix z = (hidden * p.w2.transpose()).rowwise() + p.b2.transpose();

  Matrix dz(b, 2);
  double data = 0.0;
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto pr = detail::softmax2(z(r, 0), z(r, 1));
    const double label = y[static_cast<std::size_t>(r)] ? 1.0 : 0.0;
    const double pb = std::clamp(pr.before, kProbClamp, 1.0 - kProbClamp);
    const double pa = std::clamp(pr.after, kProbClamp, 1.0 - kProbClamp);
    data -= label * std::log(pb) + (1.0 - label) * std::log(pa);
    dz(r, 0) = pr.before - label;
    dz(r, 1) = pr.after - (1.0 - label);
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  data *= inv_b;
  dz *= inv_b;

  LossAndGrad out;
  out.data_loss = data;
  out.loss = data + model.lambda * (p.w1.squaredNorm() + p.w2.squaredNorm());
  out.grad.w2 = dz.transpose() * hidden + 2.0 * model.lambda * p.w2;
  out.grad.b2 = dz.colwise().sum().transpose();
  const Matrix dh = (dz * p.w2).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  out.grad.w1 = dh.transpose() * x + 2.0 * model.lambda * p.w1;
  out.grad.b1 = dh.colwise().sum().transpose();
  return out;
}

inline LossAndGrad loss_and_grad(const CpnnModel& model, const PairDataset& batch) {
  return loss_and_grad(model, batch.x, batch.y);
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 100;
  std::size_t batch = 256;
  double lambda = 1e-4;
  std::uint64_t seed = 1;
};

struct TrainResult {
  CpnnModel model;
  std::vector<double> loss_trace;  // mean batch loss per epoch
};

inline void he_uniform_init(CpnnModel& model, std::mt19937_64& rng) {
  auto fill = [&](Matrix& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  };
  fill(model.params.w1);
  fill(model.params.w2);
  model.params.b1.setZero();
  model.params.b2.setZero();
}

class Adam {
 public:
  Adam(const CpnnParams& shape, double lr) : lr_(lr), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

  void step(CpnnParams& params, const CpnnParams& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    update(params.w1, grad.w1, m_.w1, v_.w1, c1, c2);
    update(params.b1, grad.b1, m_.b1, v_.b1, c1, c2);
    update(params.w2, grad.w2, m_.w2, v_.w2, c1, c2);
    update(params.b2, grad.b2, m_.b2, v_.b2, c1, c2);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  static CpnnParams zeros_like(const CpnnParams& p) {
    return {Matrix::Zero(p.w1.rows(), p.w1.cols()), Vector::Zero(p.b1.size()),
            Matrix::Zero(p.w2.rows(), p.w2.cols()), Vector::Zero(p.b2.size())};
  }

  template <class T>
  void update(T& w, const T& g, T& m, T& v, double c1, double c2) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
    w.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }

  double lr_;
  int t_{0};
  CpnnParams m_, v_;
};

// Joint training: every epoch shuffles the concatenation of all datasets.
inline TrainResult train(std::span<const PairDataset> datasets, const TrainConfig& cfg) {
  if (datasets.empty()) throw DomainError("train: at least one pair dataset is required");
  if (!(cfg.lr > 0.0) || cfg.epochs <= 0 || cfg.batch == 0 || cfg.lambda < 0.0) {
    throw DomainError("train: lr, epochs and batch must be positive, lambda non-negative");
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> rows;
  for (std::uint32_t d = 0; d < datasets.size(); ++d) {
    for (std::uint32_t r = 0; r < datasets[d].size(); ++r) rows.emplace_back(d, r);
  }
  if (rows.empty()) throw DomainError("train: pair datasets contain no rows");

  std::mt19937_64 rng(cfg.seed);
  TrainResult res;
  res.model = CpnnModel::zeros(cfg.lambda);
  he_uniform_init(res.model, rng);
  Adam opt(res.model.params, cfg.lr);

  const auto dim = static_cast<Eigen::Index>(kPairInputDim);
  Matrix xb(static_cast<Eigen::Index>(cfg.batch), dim);
  std::vector<std::uint8_t> yb(cfg.batch);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(rows.begin(), rows.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < rows.size(); start += cfg.batch) {
      const std::size_t n = std::min(cfg.batch, rows.size() - start);
      for (std::size_t k = 0; k < n; ++k) {
        const auto [d, r] = rows[start + k];
        xb.row(static_cast<Eigen::Index>(k)) = datasets[d].x.row(r);
        yb[k] = datasets[d].y[r];
      }
      const auto lg = loss_and_grad(res.model, xb.topRows(static_cast<Eigen::Index>(n)),
                                    std::span<const std::uint8_t>(yb.data(), n));
      if (!std::isfinite(lg.loss)) {
        throw NumericError("cpnn training diverged: loss is " + std::to_string(lg.loss) + " at epoch " +
                           std::to_string(epoch + 1) + ", batch " + std::to_string(batches + 1));
      }
      opt.step(res.model.params, lg.grad);
      total += lg.loss;
      ++batches;
    }
    res.loss_trace.push_back(total / static_cast<double>(batches));
  }
  return res;
}

inline TrainResult train(const PairDataset& dataset, const TrainConfig& cfg) {
  return train(std::span<const PairDataset>(&dataset, 1), cfg);
}

// ---------------------------------------------------------------------------
// Inference

// Probabilities of both operand orders for every row.
inline std::vector<double> predict_rows(const CpnnModel& model, const Eigen::Ref<const Matrix>& x) {
  const auto& p = model.params;
  const Matrix hidden = ((x * p.w1.transpose()).rowwise() + p.b1.transpose()).cwiseMax(0.0);
  const Matrix z = (hidden * p.w2.transpose()).rowwise() + p.b2.transpose();
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[static_cast<std::size_t>(r)] = detail::softmax2(z(r, 0), z(r, 1)).before;
  return out;
}

// Orientation-free accuracy: each row is scored with the mean of
// p(i before j) and 1 - p(j before i); exact 0.5 counts half.
inline double pair_accuracy(const CpnnModel& model, const PairDataset& ds) {
  if (ds.size() == 0) throw DomainError("pair_accuracy: empty dataset");
  const auto d = static_cast<Eigen::Index>(kEdgeFeatureDim);
  Matrix swapped(ds.x.rows(), ds.x.cols());
  swapped.leftCols(d) = ds.x.rightCols(d);
  swapped.rightCols(d) = ds.x.leftCols(d);
  const auto fwd = predict_rows(model, ds.x);
  const auto rev = predict_rows(model, swapped);
  double correct = 0.0;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const double s = 0.5 * (fwd[r] + 1.0 - rev[r]);
    if (s == 0.5) {
      correct += 0.5;
    } else if ((s > 0.5) == (ds.y[r] == 1)) {
      correct += 1.0;
    }
  }
  return correct / static_cast<double>(ds.size());
}

inline constexpr std::size_t kDefaultMatrixCap = 20000;

// P[i][j] = p_before(h_i, h_j) for every ordered pair, diagonal 0.5. Both
// orientations are evaluated independently.
inline PairwiseMatrix pairwise_matrix(const CpnnModel& model, std::span<const EdgeEmbedding> embeddings,
                                      std::size_t cap = kDefaultMatrixCap) {
  const auto m = embeddings.size();
  if (m > cap) {
    throw DomainError("pairwise_matrix: " + std::to_string(m) + " edges exceed the cap of " +
                      std::to_string(cap) + "; sample edge pairs instead of building the full matrix");
  }
  const auto d = static_cast<Eigen::Index>(kEdgeFeatureDim);
  Matrix e(static_cast<Eigen::Index>(m), d);
  for (std::size_t i = 0; i < m; ++i)
    for (Eigen::Index c = 0; c < d; ++c) e(static_cast<Eigen::Index>(i), c) = embeddings[i][static_cast<std::size_t>(c)];
  const auto& p = model.params;
  const Matrix left = (e * p.w1.leftCols(d).transpose()).rowwise() + p.b1.transpose();
  const Matrix right = e * p.w1.rightCols(d).transpose();
  const Vector w = (p.w2.row(0) - p.w2.row(1)).transpose();
  const double bias = p.b2(0) - p.b2(1);

  PairwiseMatrix out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto li = left.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const double diff = (li + right.row(static_cast<Eigen::Index>(j))).cwiseMax(0.0).dot(w.transpose()) + bias;
      out(i, j) = detail::softmax2(diff, 0.0).before;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint JSON

namespace detail {

inline nlohmann::ordered_json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.row(r).data(), m.row(r).data() + m.cols());
    rows.push_back(row);
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) throw ConfigError("checkpoint: bad matrix shape");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError("checkpoint: bad matrix shape");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Vector vector_from_json(const nlohmann::json& j, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) throw ConfigError("checkpoint: bad vector shape");
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const CpnnModel& model) {
  nlohmann::ordered_json j;
  j["version"] = kCheckpointVersion;
  j["D"] = model.input_dim;
  j["hidden"] = hidden_width(model.input_dim);
  j["lambda"] = model.lambda;
  j["W1"] = detail::matrix_to_json(model.params.w1);
  j["b1"] = std::vector<double>(model.params.b1.data(), model.params.b1.data() + model.params.b1.size());
  j["W2"] = detail::matrix_to_json(model.params.w2);
  j["b2"] = std::vector<double>(model.params.b2.data(), model.params.b2.data() + model.params.b2.size());
  auto side = nlohmann::ordered_json::array();
  for (const auto& [name, st] : model.standardization) {
    nlohmann::ordered_json s;
    s["network"] = name;
    s["mean"] = st.mean;
    s["std"] = st.stddev;
    side.push_back(s);
  }
  j["standardization"] = side;
  return j;
}

inline CpnnModel cpnn_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) throw ConfigError("checkpoint: unsupported version");
    const auto d = j.at("D").get<std::size_t>();
    if (d != kPairInputDim) throw ConfigError("checkpoint: input dimension must be " + std::to_string(kPairInputDim));
    const auto h = static_cast<Eigen::Index>(hidden_width(d));
    CpnnModel m = CpnnModel::zeros(j.at("lambda").get<double>(), d);
    m.params.w1 = detail::matrix_from_json(j.at("W1"), h, static_cast<Eigen::Index>(d));
    m.params.b1 = detail::vector_from_json(j.at("b1"), h);
    m.params.w2 = detail::matrix_from_json(j.at("W2"), 2, h);
    m.params.b2 = detail::vector_from_json(j.at("b2"), 2);
    if (j.contains("standardization")) {
      for (const auto& s : j.at("standardization")) {
        Standardization st;
        st.mean = s.at("mean").get<std::array<double, kEdgeFeatureDim>>();
        st.stddev = s.at("std").get<std::array<double, kEdgeFeatureDim>>();
        m.standardization.emplace_back(s.at("network").get<std::string>(), st);
      }
    }
    if (!m.finite()) throw ConfigError("checkpoint: non-finite parameters");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace netchrono
