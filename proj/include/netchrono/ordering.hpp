#pragma once

// Rank aggregation of pairwise "generated before" probabilities, the
// mean-field position estimator and its closed-form error, and accuracy /
// RMSE / NRMSE evaluation against a known order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <bit>
#include <cstring>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "netio.hpp"

namespace netchrono {

// M x M matrix, P(i, j) = Pr(edge i generated before edge j). Row-major.
class PairwiseMatrix {
 public:
  PairwiseMatrix() = default;
  explicit PairwiseMatrix(std::size_t m, double fill = 0.5) : m_(m), data_(m * m, fill) {
    for (std::size_t i = 0; i < m_; ++i) (*this)(i, i) = 0.5;
  }
  PairwiseMatrix(std::size_t m, std::vector<double> data) : m_(m), data_(std::move(data)) {
    if (data_.size() != m_ * m_) throw DomainError("pairwise matrix data has wrong size");
    validate();
  }

  std::size_t size() const noexcept { return m_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * m_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * m_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * m_, m_}; }
  const std::vector<double>& data() const noexcept { return data_; }

  void validate() const {
    for (std::size_t i = 0; i < m_; ++i) {
      if ((*this)(i, i) != 0.5) throw DomainError("pairwise matrix diagonal must be 0.5");
      for (std::size_t j = 0; j < m_; ++j) {
        const double p = (*this)(i, j);
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("pairwise probability outside [0, 1]");
      }
    }
  }

 private:
  std::size_t m_{0};
  std::vector<double> data_;
};

struct OrderEstimate {
  std::vector<double> scores;        // before-votes per edge
  std::vector<EdgeIndex> ranking;    // earliest first
  std::vector<double> alpha_hat;     // per edge, rank / M
};

namespace detail {

// Neumaier compensated sum; order-independent to within rounding of the
// compensation term, which keeps row sums reproducible.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_{0.0};
  double comp_{0.0};
};

}  // namespace detail

// S[i] = sum_{j != i} P[i][j]. With `hard`, each probability is first
// thresholded at 0.5 (ties stay 0.5).
inline std::vector<double> borda_scores(const PairwiseMatrix& p, bool hard = false) {
  const auto m = p.size();
  std::vector<double> s(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    detail::CompensatedSum acc;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      double v = p(i, j);
      if (hard) v = v > 0.5 ? 1.0 : (v < 0.5 ? 0.0 : 0.5);
      acc.add(v);
    }
    s[i] = acc.value();
  }
  return s;
}

// Most before-votes first; equal scores fall back to ascending edge index.
inline OrderEstimate order_from_scores(std::vector<double> scores) {
  const auto m = scores.size();
  for (double s : scores) {
    if (!std::isfinite(s)) throw DomainError("order_from_scores: non-finite score");
  }
  OrderEstimate est;
  est.ranking.resize(m);
  std::iota(est.ranking.begin(), est.ranking.end(), EdgeIndex{0});
  std::stable_sort(est.ranking.begin(), est.ranking.end(),
                   [&](EdgeIndex a, EdgeIndex b) { return scores[a] > scores[b]; });
  est.alpha_hat.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    est.alpha_hat[est.ranking[r]] = static_cast<double>(r + 1) / static_cast<double>(m);
  }
  est.scores = std::move(scores);
  return est;
}

inline OrderEstimate borda_order(const PairwiseMatrix& p, bool hard = false) {
  return order_from_scores(borda_scores(p, hard));
}

// alpha_hat_i = (u_i - (1 - x)) / (2x - 1), u_i = (1/M) sum_{j != i} (1 - P[i][j]).
// Not clipped to [0, 1].
inline std::vector<double> meanfield_positions(const PairwiseMatrix& p, double x) {
  if (!(x > 0.5 && x <= 1.0)) throw DomainError("meanfield_positions requires x in (0.5, 1]");
  const auto m = p.size();
  const double md = static_cast<double>(m);
  std::vector<double> alpha(m);
  for (std::size_t i = 0; i < m; ++i) {
    detail::CompensatedSum acc;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) acc.add(1.0 - p(i, j));
    }
    const double u = acc.value() / md;
    alpha[i] = (u - (1.0 - x)) / (2.0 * x - 1.0);
  }
  return alpha;
}

inline double theoretical_error(double x, std::size_t m) {
  if (!(x > 0.5 && x <= 1.0)) throw DomainError("theoretical_error requires x in (0.5, 1]");
  if (m == 0) throw DomainError("theoretical_error requires M >= 1");
  const double d = 2.0 * x - 1.0;
  return std::sqrt(x * (1.0 - x) / (d * d)) / std::sqrt(static_cast<double>(m));
}

struct Evaluation {
  std::optional<double> accuracy;  // absent when no pair is distinguishable
  double rmse{0.0};
  std::optional<double> nrmse;     // absent when all true positions coincide
  std::size_t edges{0};
  std::uint64_t distinguishable{0};
};

namespace detail {

// Counts i < j with v[i] > v[j].
inline std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                                      std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t a = lo, b = mid, o = lo;
  while (a < mid && b < hi) {
    if (v[b] < v[a]) {
      inv += mid - a;
      buf[o++] = v[b++];
    } else {
      buf[o++] = v[a++];
    }
  }
  while (a < mid) buf[o++] = v[a++];
  while (b < hi) buf[o++] = v[b++];
  std::copy(buf.begin() + static_cast<long>(lo), buf.begin() + static_cast<long>(hi),
            v.begin() + static_cast<long>(lo));
  return inv;
}

}  // namespace detail

// Pairwise accuracy of predicted positions over pairs with distinct true
// positions. Predicted ties count as half-correct.
inline std::optional<double> pairwise_order_accuracy(std::span<const double> predicted,
                                                     std::span<const double> truth) {
  const auto m = truth.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // ties in truth sorted by prediction so that they add no inversions
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (truth[a] != truth[b]) return truth[a] < truth[b];
    return predicted[a] < predicted[b];
  });

  std::uint64_t tied_truth = 0, tied_pred_distinct_truth = 0;
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j < m && truth[idx[j]] == truth[idx[i]]) ++j;
    tied_truth += (j - i) * (j - i - 1) / 2;
    i = j;
  }
  // predicted ties across different true groups
  {
    std::vector<std::size_t> by_pred(idx);
    std::sort(by_pred.begin(), by_pred.end(), [&](std::size_t a, std::size_t b) {
      if (predicted[a] != predicted[b]) return predicted[a] < predicted[b];
      return truth[a] < truth[b];
    });
    for (std::size_t i = 0; i < m;) {
      std::size_t j = i;
      while (j < m && predicted[by_pred[j]] == predicted[by_pred[i]]) ++j;
      const std::uint64_t g = j - i;
      std::uint64_t same_truth = 0;
      for (std::size_t a = i; a < j;) {
        std::size_t b = a;
        while (b < j && truth[by_pred[b]] == truth[by_pred[a]]) ++b;
        same_truth += (b - a) * (b - a - 1) / 2;
        a = b;
      }
      tied_pred_distinct_truth += g * (g - 1) / 2 - same_truth;
      i = j;
    }
  }

  const std::uint64_t all = static_cast<std::uint64_t>(m) * (m - 1) / 2;
  const std::uint64_t distinguishable = all - tied_truth;
  if (distinguishable == 0) return std::nullopt;

  std::vector<double> seq(m), buf(m);
  for (std::size_t i = 0; i < m; ++i) seq[i] = predicted[idx[i]];
  const std::uint64_t discordant = detail::count_inversions(seq, buf, 0, m);
  const double correct = static_cast<double>(distinguishable - discordant - tied_pred_distinct_truth) +
                         0.5 * static_cast<double>(tied_pred_distinct_truth);
  return correct / static_cast<double>(distinguishable);
}

inline Evaluation evaluate(std::span<const double> alpha_hat, const NormalizedOrder& truth) {
  const auto& alpha = truth.alpha;
  if (alpha_hat.size() != alpha.size()) throw DomainError("evaluate: edge universes differ");
  const auto m = alpha.size();
  if (m == 0) throw DomainError("evaluate: empty order");
  Evaluation ev;
  ev.edges = m;
  ev.accuracy = pairwise_order_accuracy(alpha_hat, alpha);
  detail::CompensatedSum sq;
  for (std::size_t i = 0; i < m; ++i) sq.add((alpha_hat[i] - alpha[i]) * (alpha_hat[i] - alpha[i]));
  ev.rmse = std::sqrt(sq.value() / static_cast<double>(m));
  const auto [lo, hi] = std::minmax_element(alpha.begin(), alpha.end());
  if (*hi > *lo) ev.nrmse = ev.rmse / (*hi - *lo);
  std::vector<double> tmp(alpha);
  std::sort(tmp.begin(), tmp.end());
  std::uint64_t tied = 0;
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j < m && tmp[j] == tmp[i]) ++j;
    tied += (j - i) * (j - i - 1) / 2;
    i = j;
  }
  ev.distinguishable = static_cast<std::uint64_t>(m) * (m - 1) / 2 - tied;
  return ev;
}

inline Evaluation evaluate(const OrderEstimate& order, const NormalizedOrder& truth) {
  return evaluate(std::span<const double>(order.alpha_hat), truth);
}

// Hard comparator over edges 0..M-1 generated in index order: each unordered
// pair is reported correctly with probability x, P[j][i] = 1 - P[i][j].
template <class Rng>
PairwiseMatrix bernoulli_comparator(std::size_t m, double x, Rng& rng) {
  PairwiseMatrix p(m);
  std::bernoulli_distribution correct(x);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double before = correct(rng) ? 1.0 : 0.0;
      p(i, j) = before;
      p(j, i) = 1.0 - before;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Matrix files
//
// Binary: the bytes "NCPM", M as little-endian uint64, then M*M little-endian
// float64 values in row-major order. CSV: M lines of M comma-separated values.

inline constexpr char kMatrixMagic[4] = {'N', 'C', 'P', 'M'};

namespace detail {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

}  // namespace detail

inline std::string matrix_to_binary(const PairwiseMatrix& p) {
  const std::uint64_t m = p.size();
  std::string out(4 + 8 + 8 * m * m, '\0');
  std::memcpy(out.data(), kMatrixMagic, 4);
  const auto mm = detail::to_little(m);
  std::memcpy(out.data() + 4, &mm, 8);
  for (std::size_t i = 0; i < m * m; ++i) {
    const auto v = detail::to_little(p.data()[i]);
    std::memcpy(out.data() + 12 + 8 * i, &v, 8);
  }
  return out;
}

inline PairwiseMatrix matrix_from_binary(std::string_view bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMatrixMagic, 4) != 0) {
    throw ParseError(0, "not a pairwise matrix file (bad magic)");
  }
  std::uint64_t m;
  std::memcpy(&m, bytes.data() + 4, 8);
  m = detail::to_little(m);
  if (m > (1u << 20) || bytes.size() != 12 + 8 * m * m) throw ParseError(0, "pairwise matrix file has the wrong length");
  std::vector<double> data(m * m);
  for (std::size_t i = 0; i < m * m; ++i) {
    double v;
    std::memcpy(&v, bytes.data() + 12 + 8 * i, 8);
    data[i] = detail::to_little(v);
  }
  return PairwiseMatrix(m, std::move(data));
}

inline std::string matrix_to_csv(const PairwiseMatrix& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j) out += ',';
      out += detail::format_double(p(i, j));
    }
    out += '\n';
  }
  return out;
}

inline PairwiseMatrix matrix_from_csv(std::string_view text) {
  std::vector<double> data;
  std::size_t rows = 0, cols = 0, line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    std::size_t n = 0, start = 0;
    while (start <= line.size()) {
      auto comma = line.find(',', start);
      if (comma == std::string_view::npos) comma = line.size();
      const auto v = detail::parse_double(detail::trim(line.substr(start, comma - start)));
      if (!v) throw ParseError(line_no, "malformed matrix entry");
      data.push_back(*v);
      ++n;
      start = comma + 1;
    }
    if (rows == 0) cols = n;
    if (n != cols) throw ParseError(line_no, "ragged matrix row");
    ++rows;
  }
  if (rows != cols) throw ParseError(line_no, "matrix is not square");
  return PairwiseMatrix(rows, std::move(data));
}

}  // namespace netchrono
