#pragma once

// Growth-model generators for synthetic temporal networks: preferential
// attachment (BA), popularity-similarity optimisation (PSO) and the fitness
// model. Every generator seeds with an (m+1)-clique at time 0; the node that
// arrives at index i attaches m edges stamped with time i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "netio.hpp"

namespace netchrono {

enum class SynthModel { BA, PSO, Fitness };

struct PsoParams {
  double temperature = 0.1;
  double fading = 0.5;  // popularity-fading exponent beta in (0, 1]
};

struct FitnessDistribution {
  enum class Kind { Uniform, Exponential, Constant };
  Kind kind = Kind::Uniform;
  double a = 0.0;  // uniform: lower bound (exclusive); exponential: rate; constant: value
  double b = 1.0;  // uniform: upper bound (inclusive)
};

struct SynthConfig {
  SynthModel model = SynthModel::BA;
  std::size_t n = 100;
  std::size_t m = 2;
  PsoParams pso{};
  FitnessDistribution fitness{};
  std::vector<double> fitness_values;  // explicit per-node fitness, overrides the distribution
  std::uint64_t seed = 1;
};

inline std::size_t expected_edge_count(std::size_t n, std::size_t m) {
  return m * (m + 1) / 2 + m * (n - m - 1);
}

namespace detail {

inline void check_sizes(const SynthConfig& cfg) {
  if (cfg.m < 1 || cfg.n <= cfg.m) throw DomainError("synthetic generator requires n > m >= 1");
}

struct GrowthState {
  std::vector<std::string> ids;
  std::vector<Edge> edges;
  std::vector<double> degree;

  explicit GrowthState(std::size_t n) : degree(n, 0.0) {
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  }

  void link(std::size_t a, std::size_t b, double t) {
    edges.push_back({static_cast<NodeIndex>(a), static_cast<NodeIndex>(b), t});
    degree[a] += 1.0;
    degree[b] += 1.0;
  }

  void seed_clique(std::size_t m) {
    for (std::size_t a = 0; a <= m; ++a)
      for (std::size_t b = a + 1; b <= m; ++b) link(b, a, 0.0);
  }

  TemporalNetwork finish() { return TemporalNetwork(std::move(ids), std::move(edges)); }
};

// Draws `count` distinct indices from [0, weights.size()) proportionally to
// the weights, without replacement. Falls back to the largest remaining
// weight when every remaining weight underflows to zero.
template <class Rng>
std::vector<std::size_t> weighted_sample(std::vector<double> weights, std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 0; c < count; ++c) {
    double total = 0.0;
    for (double w : weights)
      if (w > 0.0) total += w;
    std::size_t chosen = weights.size();
    if (total > 0.0) {
      double r = unit(rng) * total;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        chosen = i;
        r -= weights[i];
        if (r < 0.0) break;
      }
    } else {
      double best = -1.0;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] >= 0.0 && weights[i] > best) {
          best = weights[i];
          chosen = i;
        }
      }
    }
    if (chosen == weights.size()) break;
    out.push_back(chosen);
    weights[chosen] = -1.0;  // excluded from further draws
  }
  return out;
}

template <class Rng>
double draw_fitness(const FitnessDistribution& dist, Rng& rng) {
  constexpr int kMaxRetries = 1000;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    double eta = 0.0;
    switch (dist.kind) {
      case FitnessDistribution::Kind::Uniform: {
        std::uniform_real_distribution<double> u(dist.a, dist.b);
        eta = dist.a + dist.b - u(rng);  // maps [a, b) onto (a, b]
        break;
      }
      case FitnessDistribution::Kind::Exponential: {
        std::exponential_distribution<double> e(dist.a);
        eta = e(rng);
        break;
      }
      case FitnessDistribution::Kind::Constant:
        eta = dist.a;
        break;
    }
    if (eta > 0.0 && std::isfinite(eta)) return eta;
    if (dist.kind == FitnessDistribution::Kind::Constant) break;
  }
  throw DomainError("fitness distribution keeps producing non-positive values");
}

inline void check_fitness(const FitnessDistribution& d) {
  using K = FitnessDistribution::Kind;
  const bool ok = (d.kind == K::Uniform && d.b > 0.0 && d.b > d.a) || (d.kind == K::Exponential && d.a > 0.0) ||
                  (d.kind == K::Constant && d.a > 0.0);
  if (!ok) throw DomainError("malformed fitness distribution");
}

}  // namespace detail

inline TemporalNetwork generate_ba(const SynthConfig& cfg) {
  detail::check_sizes(cfg);
  std::mt19937_64 rng(cfg.seed);
  detail::GrowthState g(cfg.n);
  g.seed_clique(cfg.m);
  for (std::size_t i = cfg.m + 1; i < cfg.n; ++i) {
    std::vector<double> w(g.degree.begin(), g.degree.begin() + static_cast<long>(i));
    for (auto target : detail::weighted_sample(std::move(w), cfg.m, rng)) g.link(i, target, static_cast<double>(i));
  }
  return g.finish();
}

inline TemporalNetwork generate_fitness(const SynthConfig& cfg) {
  detail::check_sizes(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> eta(cfg.n);
  if (!cfg.fitness_values.empty()) {
    if (cfg.fitness_values.size() != cfg.n) throw DomainError("fitness_values must list one value per node");
    for (double v : cfg.fitness_values)
      if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("fitness values must be positive");
    eta = cfg.fitness_values;
  } else {
    detail::check_fitness(cfg.fitness);
    for (auto& e : eta) e = detail::draw_fitness(cfg.fitness, rng);
  }
  detail::GrowthState g(cfg.n);
  g.seed_clique(cfg.m);
  for (std::size_t i = cfg.m + 1; i < cfg.n; ++i) {
    std::vector<double> w(i);
    for (std::size_t j = 0; j < i; ++j) w[j] = g.degree[j] * eta[j];
    for (auto target : detail::weighted_sample(std::move(w), cfg.m, rng)) g.link(i, target, static_cast<double>(i));
  }
  return g.finish();
}

// Popularity-similarity optimisation on the hyperbolic disc. Node s (1-based
// arrival index) sits at angle theta_s; its radius fades from 2 ln s towards
// the newest radius as r_s(t) = beta 2 ln s + (1 - beta) 2 ln t. A newcomer
// links to m distinct existing nodes drawn with the Fermi-Dirac connection
// probability 1 / (1 + exp((x - R_t) / 2T)) of hyperbolic distance x; T = 0
// takes the m closest nodes.
inline TemporalNetwork generate_pso(const SynthConfig& cfg) {
  detail::check_sizes(cfg);
  const double beta = cfg.pso.fading;
  const double temp = cfg.pso.temperature;
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("PSO fading exponent must lie in (0, 1]");
  if (!(temp >= 0.0 && temp < 1.0)) throw DomainError("PSO temperature must lie in [0, 1)");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<double> theta(cfg.n);
  for (auto& th : theta) th = angle(rng);

  const double m = static_cast<double>(cfg.m);
  detail::GrowthState g(cfg.n);
  g.seed_clique(cfg.m);
  for (std::size_t i = cfg.m + 1; i < cfg.n; ++i) {
    const double t = static_cast<double>(i + 1);
    const double rt = 2.0 * std::log(t);
    std::vector<double> dist(i);
    for (std::size_t j = 0; j < i; ++j) {
      const double s = static_cast<double>(j + 1);
      const double rs = beta * 2.0 * std::log(s) + (1.0 - beta) * rt;
      double dth = std::abs(theta[i] - theta[j]);
      dth = std::numbers::pi - std::abs(std::numbers::pi - dth);
      const double ch = std::cosh(rs) * std::cosh(rt) - std::sinh(rs) * std::sinh(rt) * std::cos(dth);
      dist[j] = std::acosh(std::max(ch, 1.0));
    }
    if (temp == 0.0) {
      std::vector<std::size_t> idx(i);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return dist[a] < dist[b]; });
      for (std::size_t c = 0; c < cfg.m; ++c) g.link(i, idx[c], static_cast<double>(i));
      continue;
    }
    // connection radius giving m expected links (Papadopoulos et al. 2012)
    double radius;
    const double sin_term = std::sin(temp * std::numbers::pi);
    if (beta < 1.0) {
      const double ii = 2.0 * temp * (1.0 - std::exp(-(1.0 - beta) * std::log(t))) / (sin_term * m * (1.0 - beta));
      radius = rt - 2.0 * std::log(ii);
    } else {
      radius = rt - 2.0 * std::log(2.0 * temp * std::log(t) / (sin_term * m));
    }
    std::vector<double> w(i);
    for (std::size_t j = 0; j < i; ++j) {
      const double arg = (dist[j] - radius) / (2.0 * temp);
      w[j] = arg > 700.0 ? 0.0 : 1.0 / (1.0 + std::exp(arg));
    }
    auto chosen = detail::weighted_sample(w, cfg.m, rng);
    if (chosen.size() < cfg.m) {
      // remaining probabilities underflowed: complete with the closest nodes
      std::vector<std::size_t> idx(i);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return dist[a] < dist[b]; });
      for (auto j : idx) {
        if (chosen.size() == cfg.m) break;
        if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) chosen.push_back(j);
      }
    }
    for (auto target : chosen) g.link(i, target, static_cast<double>(i));
  }
  return g.finish();
}

inline TemporalNetwork generate(const SynthConfig& cfg) {
  switch (cfg.model) {
    case SynthModel::BA: return generate_ba(cfg);
    case SynthModel::PSO: return generate_pso(cfg);
    case SynthModel::Fitness: return generate_fitness(cfg);
  }
  throw DomainError("unknown synthetic model");
}

inline std::optional<SynthModel> parse_synth_model(std::string_view name) {
  if (name == "ba" || name == "BA") return SynthModel::BA;
  if (name == "pso" || name == "PSO") return SynthModel::PSO;
  if (name == "fitness" || name == "Fitness") return SynthModel::Fitness;
  return std::nullopt;
}

}  // namespace netchrono
