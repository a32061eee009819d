#pragma once

// Minimal reverse-mode differentiation over dense row-major matrices. Only
// the operations the graph denoiser needs are provided.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace netchrono::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Var {
  std::size_t id{0};
};

class Tape {
 public:
  Var constant(Matrix value) { return push(std::move(value), {}); }

  // Leaf whose gradient is added into `grad_sink` by backward().
  Var parameter(const Matrix& value, Matrix* grad_sink) {
    Var v = push(value, {});
    sinks_.emplace_back(v.id, grad_sink);
    return v;
  }

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  std::size_t size() const noexcept { return nodes_.size(); }

  void backward(Var root) {
    if (nodes_[root.id].value.size() != 1) throw DomainError("backward root must be a scalar");
    for (auto& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    nodes_[root.id].grad(0, 0) = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].backward) nodes_[i].backward();
    }
    for (auto [id, sink] : sinks_) *sink += nodes_[id].grad;
  }

  // ---- operations --------------------------------------------------------

  Var matmul(Var a, Var b) {
    Var out = push(value(a) * value(b), {});
    nodes_[out.id].backward = [this, a, b, out] {
      const Matrix& g = grad(out);
      grad(a).noalias() += g * value(b).transpose();
      grad(b).noalias() += value(a).transpose() * g;
    };
    return out;
  }

  Var add(Var a, Var b) {
    Var out = push(value(a) + value(b), {});
    nodes_[out.id].backward = [this, a, b, out] {
      grad(a) += grad(out);
      grad(b) += grad(out);
    };
    return out;
  }

  // a (n x m) plus a broadcast row (1 x m)
  Var add_row(Var a, Var row) {
    Var out = push(value(a).rowwise() + value(row).row(0), {});
    nodes_[out.id].backward = [this, a, row, out] {
      grad(a) += grad(out);
      grad(row) += grad(out).colwise().sum();
    };
    return out;
  }

  Var mul(Var a, Var b) {
    Var out = push(value(a).cwiseProduct(value(b)), {});
    nodes_[out.id].backward = [this, a, b, out] {
      grad(a) += grad(out).cwiseProduct(value(b));
      grad(b) += grad(out).cwiseProduct(value(a));
    };
    return out;
  }

  Var scale(Var a, double s) {
    Var out = push(value(a) * s, {});
    nodes_[out.id].backward = [this, a, s, out] { grad(a) += grad(out) * s; };
    return out;
  }

  Var relu(Var a) {
    Var out = push(value(a).cwiseMax(0.0), {});
    nodes_[out.id].backward = [this, a, out] {
      grad(a) += grad(out).cwiseProduct((value(a).array() > 0.0).cast<double>().matrix());
    };
    return out;
  }

  Var tanh(Var a) {
    Var out = push(value(a).array().tanh().matrix(), {});
    nodes_[out.id].backward = [this, a, out] {
      grad(a) += grad(out).cwiseProduct((1.0 - value(out).array().square()).matrix());
    };
    return out;
  }

  // n x m -> n x 1
  Var rowsum(Var a) {
    Var out = push(value(a).rowwise().sum(), {});
    nodes_[out.id].backward = [this, a, out] { grad(a) += grad(out).replicate(1, value(a).cols()); };
    return out;
  }

  // rows of a scaled by the column vector w (n x 1)
  Var scale_rows(Var a, Var w) {
    Var out = push(value(a).array().colwise() * value(w).col(0).array(), {});
    nodes_[out.id].backward = [this, a, w, out] {
      const Matrix& g = grad(out);
      grad(a) += (g.array().colwise() * value(w).col(0).array()).matrix();
      grad(w) += g.cwiseProduct(value(a)).rowwise().sum();
    };
    return out;
  }

  Var gather_rows(Var a, std::vector<std::size_t> idx) {
    const Matrix& src = value(a);
    Matrix v(static_cast<Eigen::Index>(idx.size()), src.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) v.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(idx[r]));
    Var out = push(std::move(v), {});
    nodes_[out.id].backward = [this, a, out, idx = std::move(idx)] {
      const Matrix& g = grad(out);
      Matrix& ga = grad(a);
      for (std::size_t r = 0; r < idx.size(); ++r) ga.row(static_cast<Eigen::Index>(idx[r])) += g.row(static_cast<Eigen::Index>(r));
    };
    return out;
  }

  // out[idx[r]] += a[r], out has `rows` rows
  Var scatter_add_rows(Var a, std::vector<std::size_t> idx, std::size_t rows) {
    const Matrix& src = value(a);
    Matrix v = Matrix::Zero(static_cast<Eigen::Index>(rows), src.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) v.row(static_cast<Eigen::Index>(idx[r])) += src.row(static_cast<Eigen::Index>(r));
    Var out = push(std::move(v), {});
    nodes_[out.id].backward = [this, a, out, idx = std::move(idx)] {
      const Matrix& g = grad(out);
      Matrix& ga = grad(a);
      for (std::size_t r = 0; r < idx.size(); ++r) ga.row(static_cast<Eigen::Index>(r)) += g.row(static_cast<Eigen::Index>(idx[r]));
    };
    return out;
  }

  Var concat_rows(Var a, Var b) {
    const Matrix& x = value(a);
    const Matrix& y = value(b);
    Matrix v(x.rows() + y.rows(), x.cols());
    v.topRows(x.rows()) = x;
    v.bottomRows(y.rows()) = y;
    Var out = push(std::move(v), {});
    nodes_[out.id].backward = [this, a, b, out] {
      const Matrix& g = grad(out);
      grad(a) += g.topRows(value(a).rows());
      grad(b) += g.bottomRows(value(b).rows());
    };
    return out;
  }

  // softmax of a column vector within groups given by seg (values in [0, groups))
  Var segment_softmax(Var s, std::vector<std::size_t> seg, std::size_t groups) {
    const Matrix& x = value(s);
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> mx(groups, -std::numeric_limits<double>::infinity()), tot(groups, 0.0);
    for (std::size_t i = 0; i < n; ++i) mx[seg[i]] = std::max(mx[seg[i]], x(static_cast<Eigen::Index>(i), 0));
    Matrix v(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) {
      v(static_cast<Eigen::Index>(i), 0) = std::exp(x(static_cast<Eigen::Index>(i), 0) - mx[seg[i]]);
      tot[seg[i]] += v(static_cast<Eigen::Index>(i), 0);
    }
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i), 0) /= tot[seg[i]];
    Var out = push(std::move(v), {});
    nodes_[out.id].backward = [this, s, out, seg = std::move(seg), groups] {
      const Matrix& y = value(out);
      const Matrix& g = grad(out);
      std::vector<double> dot(groups, 0.0);
      for (std::size_t i = 0; i < seg.size(); ++i) dot[seg[i]] += g(static_cast<Eigen::Index>(i), 0) * y(static_cast<Eigen::Index>(i), 0);
      Matrix& gs = grad(s);
      for (std::size_t i = 0; i < seg.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        gs(r, 0) += y(r, 0) * (g(r, 0) - dot[seg[i]]);
      }
    };
    return out;
  }

  // mean over all entries of (a - target)^2
  Var mse(Var a, Matrix target) {
    const Matrix diff = value(a) - target;
    Matrix v(1, 1);
    v(0, 0) = diff.squaredNorm() / static_cast<double>(diff.size());
    Var out = push(std::move(v), {});
    nodes_[out.id].backward = [this, a, out, diff] {
      grad(a) += diff * (2.0 * grad(out)(0, 0) / static_cast<double>(diff.size()));
    };
    return out;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backward;
  };

  Var push(Matrix value, std::function<void()> backward) {
    nodes_.push_back({std::move(value), Matrix(), std::move(backward)});
    return {nodes_.size() - 1};
  }

  Matrix& grad(Var v) { return nodes_[v.id].grad; }

  std::vector<Node> nodes_;
  std::vector<std::pair<std::size_t, Matrix*>> sinks_;
};

}  // namespace netchrono::ad
