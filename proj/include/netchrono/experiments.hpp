#pragma once

// Experiment orchestration: split and joint training matrices, augmented
// joint training, training-ratio sweeps and the comparator-accuracy
// simulation. Every routine is a pure function of its inputs and seeds;
// reports carry the config hash and per-seed raw numbers.

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "cpnn.hpp"
#include "error.hpp"
#include "features.hpp"
#include "netio.hpp"
#include "ordering.hpp"
#include "topoevodiff.hpp"

namespace netchrono {

inline constexpr const char* kVersion = "0.1.0";

inline nlohmann::ordered_json module_versions() {
  nlohmann::ordered_json j;
  for (const char* m : {"netio", "features", "cpnn", "ordering", "topoevodiff", "synthgen", "cli"}) j[m] = kVersion;
  return j;
}

// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

// ---------------------------------------------------------------------------
// Parameters shared by the CPNN experiments

struct ExperimentParams {
  std::size_t pair_cap = 100000;   // training pairs per network
  std::size_t eval_cap = 100000;   // evaluation pairs per network
  std::size_t augmented_pair_cap = 1000;  // sampled pairs per augmented network, before dedup
  TrainConfig cpnn{};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct NamedNetwork {
  std::string name;
  TemporalNetwork net;
  EdgeFeatures features;
};

inline NamedNetwork prepare_network(std::string name, TemporalNetwork net) {
  auto f = edge_embeddings(net);
  return {std::move(name), std::move(net), std::move(f)};
}

namespace detail {

// Deterministic per-cell seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + a * 0xBF58476D1CE4E5B9ULL + b * 0x94D049BB133111EBULL + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Runs body(i) for i in [0, n) on a small worker pool. Results must be
// written to per-index slots; the first exception is rethrown.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline PairDataset training_pairs(const NamedNetwork& n, std::size_t cap, std::uint64_t seed) {
  return build_pair_dataset(n.net, n.features.standardized, {cap, seed}, n.name);
}

// Seeded by the network name so every experiment scores a given network on
// the same pairs.
inline PairDataset evaluation_pairs(const NamedNetwork& n, std::size_t cap, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : n.name) h = (h ^ c) * 1099511628211ULL;
  return build_pair_dataset(n.net, n.features.standardized, {cap, mix_seed(seed, 2, h)}, n.name);
}

inline TrainResult train_cell(std::span<const PairDataset> data, const ExperimentParams& p, std::uint64_t seed,
                              const std::string& what) {
  auto cfg = p.cpnn;
  cfg.seed = seed;
  try {
    return train(data, cfg);
  } catch (const NumericError& e) {
    throw NumericError(what + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(what + ": " + e.what());
  }
}

inline double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population standard deviation.
inline double std_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline nlohmann::ordered_json params_json(const ExperimentParams& p) {
  nlohmann::ordered_json j;
  j["pair_cap"] = p.pair_cap;
  j["eval_cap"] = p.eval_cap;
  j["augmented_pair_cap"] = p.augmented_pair_cap;
  j["cpnn"] = {{"lr", p.cpnn.lr}, {"epochs", p.cpnn.epochs}, {"batch", p.cpnn.batch}, {"lambda", p.cpnn.lambda}};
  j["seeds"] = p.seeds;
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Split matrix

struct SplitMatrixResult {
  std::vector<std::string> names;
  std::vector<std::uint64_t> seeds;
  // accuracy[s][train][test]
  std::vector<std::vector<std::vector<double>>> accuracy;

  double mean(std::size_t train, std::size_t test) const {
    double s = 0.0;
    for (const auto& m : accuracy) s += m[train][test];
    return s / static_cast<double>(accuracy.size());
  }
};

inline SplitMatrixResult run_split_matrix(std::span<const NamedNetwork> nets, const ExperimentParams& p) {
  if (nets.empty()) throw ConfigError("split matrix needs at least one network");
  if (p.seeds.empty()) throw ConfigError("at least one seed is required");
  const auto n = nets.size();
  SplitMatrixResult r;
  for (const auto& x : nets) r.names.push_back(x.name);
  r.seeds = p.seeds;
  r.accuracy.assign(p.seeds.size(), std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));

  detail::parallel_for(p.seeds.size() * n, p.threads, [&](std::size_t cell) {
    const auto s = cell / n, a = cell % n;
    const auto seed = p.seeds[s];
    const auto ds = detail::training_pairs(nets[a], p.pair_cap, detail::mix_seed(seed, 1, a));
    const auto model = detail::train_cell(std::span(&ds, 1), p, seed, "training on " + nets[a].name).model;
    for (std::size_t b = 0; b < n; ++b) {
      const auto ev = detail::evaluation_pairs(nets[b], p.eval_cap, seed);
      r.accuracy[s][a][b] = pair_accuracy(model, ev);
    }
  });
  return r;
}

// ---------------------------------------------------------------------------
// Joint and augmented joint training

struct JointRecord {
  std::string test;
  std::uint64_t seed;
  double accuracy;
};

struct JointResult {
  std::vector<std::string> train_set;
  std::vector<JointRecord> records;  // seed-major, then test network order
  std::vector<std::size_t> augmented_pairs;  // per seed, after dedup
  std::vector<std::string> notes;

  double mean_accuracy(const std::string& test) const {
    std::vector<double> v;
    for (const auto& rec : records)
      if (rec.test == test) v.push_back(rec.accuracy);
    return detail::mean_of(v);
  }
};

// Augmented orders of one training network, expressed as timestamps indexed
// by the source network's edges.
struct AugmentedSet {
  std::size_t source{0};  // index into the training networks
  std::vector<std::vector<double>> timestamps;
};

// Timestamps of `other` re-indexed onto the edges of `source`. The two must
// share exactly the same edge set (by node id).
inline std::vector<double> align_timestamps(const TemporalNetwork& source, const TemporalNetwork& other) {
  if (source.edge_count() != other.edge_count()) {
    throw ConfigError("augmented network has " + std::to_string(other.edge_count()) + " edges, source has " +
                      std::to_string(source.edge_count()));
  }
  std::unordered_map<std::string, NodeIndex> ids;
  for (NodeIndex i = 0; i < source.node_count(); ++i) ids.emplace(source.node_id(i), i);
  std::vector<double> ts(source.edge_count(), 0.0);
  std::vector<std::uint8_t> seen(source.edge_count(), 0);
  for (const auto& e : other.edges()) {
    const auto a = ids.find(other.node_id(e.u));
    const auto b = ids.find(other.node_id(e.v));
    if (a == ids.end() || b == ids.end()) throw ConfigError("augmented network contains an unknown node");
    const auto k = source.find_edge(a->second, b->second);
    if (!k) throw ConfigError("augmented network contains an edge absent from the source");
    ts[*k] = e.t;
    seen[*k] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ConfigError("augmented network misses source edges");
  return ts;
}

// Drops augmented rows whose unordered edge pair and orientation label both
// already occur in the real dataset.
inline PairDataset dedup_augmented(const PairDataset& aug, const PairDataset& real) {
  auto key = [](EdgeIndex i, EdgeIndex j, bool i_first) {
    const bool swap = j < i;
    const auto lo = swap ? j : i, hi = swap ? i : j;
    const bool lo_first = swap ? !i_first : i_first;
    return (static_cast<std::uint64_t>(lo) << 33) ^ (static_cast<std::uint64_t>(hi) << 1) ^ (lo_first ? 1u : 0u);
  };
  std::unordered_set<std::uint64_t> known;
  for (std::size_t r = 0; r < real.size(); ++r) known.insert(key(real.edges[r].first, real.edges[r].second, real.y[r] == 1));
  std::vector<Eigen::Index> keep;
  for (std::size_t r = 0; r < aug.size(); ++r) {
    if (!known.contains(key(aug.edges[r].first, aug.edges[r].second, aug.y[r] == 1))) keep.push_back(static_cast<Eigen::Index>(r));
  }
  PairDataset out;
  out.network = aug.network;
  out.x.resize(static_cast<Eigen::Index>(keep.size()), aug.x.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.x.row(static_cast<Eigen::Index>(k)) = aug.x.row(keep[k]);
    out.y.push_back(aug.y[static_cast<std::size_t>(keep[k])]);
    out.edges.push_back(aug.edges[static_cast<std::size_t>(keep[k])]);
  }
  return out;
}

inline JointResult run_augmented_joint(std::span<const NamedNetwork> train_nets, std::span<const AugmentedSet> augmented,
                                       std::span<const NamedNetwork> test_nets, const ExperimentParams& p) {
  if (train_nets.empty()) throw ConfigError("joint training needs at least one training network");
  if (test_nets.empty()) throw ConfigError("joint training needs at least one test network");
  if (p.seeds.empty()) throw ConfigError("at least one seed is required");
  for (const auto& a : augmented)
    if (a.source >= train_nets.size()) throw ConfigError("augmented set refers to a missing training network");

  JointResult r;
  for (const auto& n : train_nets) r.train_set.push_back(n.name);
  const auto tn = test_nets.size();
  r.records.resize(p.seeds.size() * tn);
  r.augmented_pairs.assign(p.seeds.size(), 0);

  detail::parallel_for(p.seeds.size(), p.threads, [&](std::size_t s) {
    const auto seed = p.seeds[s];
    std::vector<PairDataset> data;
    for (std::size_t a = 0; a < train_nets.size(); ++a)
      data.push_back(detail::training_pairs(train_nets[a], p.pair_cap, detail::mix_seed(seed, 1, a)));
    std::size_t extra = 0;
    std::uint64_t salt = 0;
    for (const auto& aug : augmented) {
      const auto& src = train_nets[aug.source];
      for (const auto& ts : aug.timestamps) {
        std::vector<EdgeIndex> all(src.net.edge_count());
        std::iota(all.begin(), all.end(), EdgeIndex{0});
        auto ds = build_pair_dataset(all, ts, src.features.standardized,
                                     {p.augmented_pair_cap, detail::mix_seed(seed, 3, salt++)}, src.name + "+aug");
        ds = dedup_augmented(ds, data[aug.source]);
        extra += ds.size();
        if (ds.size() > 0) data.push_back(std::move(ds));
      }
    }
    r.augmented_pairs[s] = extra;
    const auto model = detail::train_cell(data, p, seed, "joint training").model;
    for (std::size_t b = 0; b < tn; ++b) {
      const auto ev = detail::evaluation_pairs(test_nets[b], p.eval_cap, seed);
      r.records[s * tn + b] = {test_nets[b].name, seed, pair_accuracy(model, ev)};
    }
  });
  if (!augmented.empty()) {
    for (std::size_t s = 0; s < p.seeds.size(); ++s)
      if (r.augmented_pairs[s] == 0)
        r.notes.push_back("seed " + std::to_string(p.seeds[s]) +
                          ": no augmented pairs left after deduplication, trained on real pairs only");
  }
  return r;
}

inline JointResult run_joint(std::span<const NamedNetwork> train_nets, std::span<const NamedNetwork> test_nets,
                             const ExperimentParams& p) {
  return run_augmented_joint(train_nets, {}, test_nets, p);
}

// ---------------------------------------------------------------------------
// Training-ratio sweep

struct RatioRecord {
  double ratio;
  std::uint64_t seed;
  std::optional<double> accuracy;  // absent when skipped
  std::size_t train_edges{0}, test_edges{0};
};

struct RatioSweepResult {
  std::string network;
  std::vector<RatioRecord> records;  // ratio-major
  std::vector<std::string> notes;

  struct Summary {
    double ratio, mean, std;
    std::size_t n;
  };
  std::vector<Summary> summary() const {
    std::vector<Summary> out;
    std::map<double, std::vector<double>> by;
    std::vector<double> order;
    for (const auto& r : records) {
      if (!by.contains(r.ratio)) order.push_back(r.ratio);
      auto& v = by[r.ratio];
      if (r.accuracy) v.push_back(*r.accuracy);
    }
    for (double ratio : order) {
      const auto& v = by[ratio];
      if (v.empty()) continue;
      out.push_back({ratio, detail::mean_of(v), detail::std_of(v), v.size()});
    }
    return out;
  }
};

// Edge-wise split: a ratio-sized uniform edge subset provides training
// pairs, the complement provides test pairs. Features use the full topology.
inline RatioSweepResult run_ratio_sweep(const NamedNetwork& net, std::span<const double> ratios,
                                        const ExperimentParams& p) {
  if (ratios.empty()) throw ConfigError("ratio sweep needs at least one ratio");
  for (double q : ratios)
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("ratios must lie strictly between 0 and 1");
  if (p.seeds.empty()) throw ConfigError("at least one seed is required");
  const auto m = net.net.edge_count();
  const auto ts = net.net.timestamps();
  RatioSweepResult r;
  r.network = net.name;
  r.records.resize(ratios.size() * p.seeds.size());

  detail::parallel_for(r.records.size(), p.threads, [&](std::size_t cell) {
    const auto qi = cell / p.seeds.size(), s = cell % p.seeds.size();
    const double q = ratios[qi];
    const auto seed = p.seeds[s];
    std::vector<EdgeIndex> idx(m);
    std::iota(idx.begin(), idx.end(), EdgeIndex{0});
    std::mt19937_64 rng(detail::mix_seed(seed, 4, qi));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m) - 1e-9));
    std::vector<EdgeIndex> tr(idx.begin(), idx.begin() + static_cast<long>(k)), te(idx.begin() + static_cast<long>(k), idx.end());
    std::sort(tr.begin(), tr.end());
    std::sort(te.begin(), te.end());
    RatioRecord rec{q, seed, std::nullopt, tr.size(), te.size()};
    const auto train_ds = build_pair_dataset(tr, ts, net.features.standardized, {p.pair_cap, detail::mix_seed(seed, 5, qi)});
    const auto test_ds = build_pair_dataset(te, ts, net.features.standardized, {p.eval_cap, detail::mix_seed(seed, 6, qi)});
    if (train_ds.size() > 0 && test_ds.size() > 0) {
      const auto model = detail::train_cell(std::span(&train_ds, 1), p, seed, net.name + " at ratio " + detail::format_double(q)).model;
      rec.accuracy = pair_accuracy(model, test_ds);
    }
    r.records[cell] = rec;
  });
  for (const auto& rec : r.records) {
    if (!rec.accuracy)
      r.notes.push_back("ratio " + detail::format_double(rec.ratio) + ", seed " + std::to_string(rec.seed) +
                        ": skipped, " + (rec.train_edges < 2 ? "training" : "test") +
                        " side has no distinguishable pairs");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Comparator-accuracy simulation

struct EquivalenceRecord {
  double x;
  std::uint64_t seed;
  double meanfield_std;   // spread of (alpha_hat - alpha) from the mean-field estimator
  double meanfield_bias;  // mean of (alpha_hat - alpha), an O(1/M) offset
  double rank_rmse;       // evaluate().rmse of the Borda ranking
};

struct EquivalenceResult {
  std::size_t m{0};
  std::vector<EquivalenceRecord> records;  // x-major

  struct Row {
    double x, meanfield_std, rank_rmse, theoretical;
  };
  std::vector<Row> table() const {
    std::vector<Row> out;
    for (std::size_t i = 0; i < records.size();) {
      std::size_t j = i;
      std::vector<double> a, b;
      while (j < records.size() && records[j].x == records[i].x) {
        a.push_back(records[j].meanfield_std);
        b.push_back(records[j].rank_rmse);
        ++j;
      }
      out.push_back({records[i].x, detail::mean_of(a), detail::mean_of(b), theoretical_error(records[i].x, m)});
      i = j;
    }
    return out;
  }
};

inline EquivalenceRecord equivalence_trial(std::size_t m, double x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto p = bernoulli_comparator(m, x, rng);
  std::vector<double> truth(m);
  for (std::size_t i = 0; i < m; ++i) truth[i] = static_cast<double>(i + 1) / static_cast<double>(m);
  const auto mf = meanfield_positions(p, x);
  std::vector<double> dev(m);
  for (std::size_t i = 0; i < m; ++i) dev[i] = mf[i] - truth[i];
  const auto ev = evaluate(borda_order(p), NormalizedOrder{truth});
  return {x, seed, detail::std_of(dev), detail::mean_of(dev), ev.rmse};
}

inline EquivalenceResult run_equivalence_sim(std::size_t m, std::span<const double> xs,
                                             std::span<const std::uint64_t> seeds, unsigned threads = 0) {
  if (m < 2) throw ConfigError("equivalence simulation needs M >= 2");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  for (double x : xs)
    if (!(x > 0.5 && x <= 1.0)) throw ConfigError("comparator accuracies must lie in (0.5, 1]");
  EquivalenceResult r;
  r.m = m;
  r.records.resize(xs.size() * seeds.size());
  detail::parallel_for(r.records.size(), threads, [&](std::size_t cell) {
    const auto xi = cell / seeds.size(), s = cell % seeds.size();
    r.records[cell] = equivalence_trial(m, xs[xi], detail::mix_seed(seeds[s], 7, xi));
    r.records[cell].seed = seeds[s];
  });
  return r;
}

// ---------------------------------------------------------------------------
// Reports

struct Report {
  nlohmann::ordered_json json;
  std::string csv;
};

inline nlohmann::ordered_json report_header(const std::string& kind, const nlohmann::ordered_json& config) {
  nlohmann::ordered_json j;
  j["experiment"] = kind;
  j["config_hash"] = fnv1a_hex(config.dump());
  j["versions"] = module_versions();
  j["config"] = config;
  return j;
}

inline Report split_report(const SplitMatrixResult& r, const nlohmann::ordered_json& config) {
  Report rep{report_header("split", config), "seed,train,test,accuracy\n"};
  const auto n = r.names.size();
  auto& j = rep.json;
  j["networks"] = r.names;
  nlohmann::ordered_json raw = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < r.seeds.size(); ++s)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        raw.push_back({{"seed", r.seeds[s]}, {"train", r.names[a]}, {"test", r.names[b]}, {"accuracy", r.accuracy[s][a][b]}});
        rep.csv += std::to_string(r.seeds[s]) + "," + r.names[a] + "," + r.names[b] + "," +
                   detail::format_double(r.accuracy[s][a][b]) + "\n";
      }
  j["per_seed"] = raw;
  nlohmann::ordered_json mean = nlohmann::ordered_json::array(), rows = nlohmann::ordered_json::array(),
                         cols = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < n; ++a) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    double rs = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      row.push_back(r.mean(a, b));
      rs += r.mean(a, b);
    }
    mean.push_back(row);
    rows.push_back(rs / static_cast<double>(n));
  }
  double overall = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    double cs = 0.0;
    for (std::size_t a = 0; a < n; ++a) cs += r.mean(a, b);
    cols.push_back(cs / static_cast<double>(n));
    overall += cs / static_cast<double>(n);
  }
  j["mean_matrix"] = mean;
  j["row_average"] = rows;
  j["average_split"] = cols;  // per test network, uniform over training networks
  j["overall_average"] = overall / static_cast<double>(n);
  return rep;
}

inline Report joint_report(const JointResult& r, const nlohmann::ordered_json& config, const std::string& kind) {
  Report rep{report_header(kind, config), "seed,train_set,test,accuracy\n"};
  auto& j = rep.json;
  std::string set;
  for (const auto& n : r.train_set) set += (set.empty() ? "" : "+") + n;
  j["train_set"] = r.train_set;
  nlohmann::ordered_json raw = nlohmann::ordered_json::array();
  std::vector<std::string> tests;
  for (const auto& rec : r.records) {
    raw.push_back({{"train_set", set}, {"test", rec.test}, {"seed", rec.seed}, {"accuracy", rec.accuracy}});
    rep.csv += std::to_string(rec.seed) + "," + set + "," + rec.test + "," + detail::format_double(rec.accuracy) + "\n";
    if (std::find(tests.begin(), tests.end(), rec.test) == tests.end()) tests.push_back(rec.test);
  }
  j["per_seed"] = raw;
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const auto& t : tests) {
    std::vector<double> v;
    for (const auto& rec : r.records)
      if (rec.test == t) v.push_back(rec.accuracy);
    summary.push_back({{"test", t}, {"mean", detail::mean_of(v)}, {"std", detail::std_of(v)}});
  }
  j["summary"] = summary;
  if (kind == "augjoint") j["augmented_pairs_per_seed"] = r.augmented_pairs;
  j["notes"] = r.notes;
  return rep;
}

inline Report ratio_report(const RatioSweepResult& r, const nlohmann::ordered_json& config) {
  Report rep{report_header("ratio", config), "ratio,seed,train_edges,test_edges,accuracy\n"};
  auto& j = rep.json;
  j["network"] = r.network;
  nlohmann::ordered_json raw = nlohmann::ordered_json::array();
  for (const auto& rec : r.records) {
    nlohmann::ordered_json e{{"ratio", rec.ratio}, {"seed", rec.seed}, {"train_edges", rec.train_edges},
                             {"test_edges", rec.test_edges}};
    e["accuracy"] = rec.accuracy ? nlohmann::ordered_json(*rec.accuracy) : nlohmann::ordered_json(nullptr);
    raw.push_back(e);
    rep.csv += detail::format_double(rec.ratio) + "," + std::to_string(rec.seed) + "," + std::to_string(rec.train_edges) + "," +
               std::to_string(rec.test_edges) + "," + (rec.accuracy ? detail::format_double(*rec.accuracy) : "") + "\n";
  }
  j["per_seed"] = raw;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const auto& s : r.summary()) curve.push_back({{"ratio", s.ratio}, {"mean", s.mean}, {"std", s.std}, {"n", s.n}});
  j["curve"] = curve;
  j["notes"] = r.notes;
  return rep;
}

inline Report equivalence_report(const EquivalenceResult& r, const nlohmann::ordered_json& config) {
  Report rep{report_header("equiv", config), "x,seed,meanfield_std,meanfield_bias,rank_rmse,theoretical\n"};
  auto& j = rep.json;
  j["M"] = r.m;
  nlohmann::ordered_json raw = nlohmann::ordered_json::array();
  for (const auto& rec : r.records) {
    raw.push_back({{"x", rec.x},
                   {"seed", rec.seed},
                   {"meanfield_std", rec.meanfield_std},
                   {"meanfield_bias", rec.meanfield_bias},
                   {"rank_rmse", rec.rank_rmse}});
    rep.csv += detail::format_double(rec.x) + "," + std::to_string(rec.seed) + "," + detail::format_double(rec.meanfield_std) +
               "," + detail::format_double(rec.meanfield_bias) + "," + detail::format_double(rec.rank_rmse) + "," + detail::format_double(theoretical_error(rec.x, r.m)) + "\n";
  }
  j["per_seed"] = raw;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const auto& row : r.table())
    table.push_back({{"x", row.x}, {"meanfield_std", row.meanfield_std}, {"rank_rmse", row.rank_rmse},
                     {"theoretical", row.theoretical}});
  j["table"] = table;
  return rep;
}

// ---------------------------------------------------------------------------
// Config files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << data;
}

inline TemporalNetwork load_network(const std::filesystem::path& path) { return parse_edge_list(read_file(path)); }

inline NamedNetwork load_named(const std::filesystem::path& path) {
  return prepare_network(path.stem().string(), load_network(path));
}

// sample_*.tsv files of an augmentation directory, in name order.
inline std::vector<TemporalNetwork> load_augmented_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("augmented directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with("sample_") && e.path().extension() == ".tsv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TemporalNetwork> out;
  for (const auto& f : files) out.push_back(load_network(f));
  return out;
}

struct ExperimentConfig {
  std::vector<std::string> training_networks;
  std::vector<std::string> augmented_dirs;  // aligned with training_networks
  std::vector<std::string> test_networks;
  ExperimentParams params{};
  AugmentConfig diffusion{};
  std::vector<double> ratios{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t equiv_m = 500;
  std::vector<double> equiv_x{0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
  std::string report;  // output path without extension
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::unordered_set<std::string> known{"training_networks", "augmented_dirs", "test_networks", "pair_cap",
                                                     "eval_cap", "augmented_pair_cap", "cpnn", "diffusion", "seeds",
                                                     "threads", "ratios", "equiv", "report"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ConfigError("unknown config field '" + k + "'");
  ExperimentConfig c;
  detail::read_opt(j, "training_networks", c.training_networks);
  detail::read_opt(j, "augmented_dirs", c.augmented_dirs);
  detail::read_opt(j, "test_networks", c.test_networks);
  detail::read_opt(j, "pair_cap", c.params.pair_cap);
  detail::read_opt(j, "eval_cap", c.params.eval_cap);
  detail::read_opt(j, "augmented_pair_cap", c.params.augmented_pair_cap);
  detail::read_opt(j, "seeds", c.params.seeds);
  detail::read_opt(j, "threads", c.params.threads);
  detail::read_opt(j, "ratios", c.ratios);
  detail::read_opt(j, "report", c.report);
  if (j.contains("cpnn")) {
    const auto& k = j["cpnn"];
    if (!k.is_object()) throw ConfigError("'cpnn' must be an object");
    detail::read_opt(k, "lr", c.params.cpnn.lr);
    detail::read_opt(k, "epochs", c.params.cpnn.epochs);
    detail::read_opt(k, "batch", c.params.cpnn.batch);
    detail::read_opt(k, "lambda", c.params.cpnn.lambda);
  }
  if (j.contains("diffusion")) {
    const auto& k = j["diffusion"];
    if (!k.is_object()) throw ConfigError("'diffusion' must be an object");
    auto& d = c.diffusion;
    detail::read_opt(k, "training_samples", d.training_samples);
    detail::read_opt(k, "min_fraction", d.min_fraction);
    detail::read_opt(k, "T", d.schedule.steps);
    detail::read_opt(k, "beta_start", d.schedule.beta_start);
    detail::read_opt(k, "beta_end", d.schedule.beta_end);
    detail::read_opt(k, "layers", d.denoiser.layers);
    detail::read_opt(k, "hidden", d.denoiser.hidden);
    detail::read_opt(k, "step_dim", d.denoiser.step_dim);
    detail::read_opt(k, "full_attention", d.denoiser.full_attention);
    detail::read_opt(k, "epochs", d.train.epochs);
    detail::read_opt(k, "batch", d.train.batch);
    detail::read_opt(k, "lr", d.train.lr);
    detail::read_opt(k, "seed", d.seed);
    if (k.contains("variance")) {
      const auto& v = k["variance"];
      if (v == "beta") {
        d.reverse.variance = ReverseVariance::Beta;
      } else if (v == "alpha_bar") {
        d.reverse.variance = ReverseVariance::AlphaBar;
      } else {
        throw ConfigError("diffusion.variance must be \"alpha_bar\" or \"beta\"");
      }
    }
  }
  if (j.contains("equiv")) {
    const auto& k = j["equiv"];
    if (!k.is_object()) throw ConfigError("'equiv' must be an object");
    detail::read_opt(k, "M", c.equiv_m);
    detail::read_opt(k, "x", c.equiv_x);
  }
  if (c.params.seeds.empty()) throw ConfigError("'seeds' must not be empty");
  if (c.params.pair_cap == 0 || c.params.eval_cap == 0) throw ConfigError("pair caps must be positive");
  if (c.params.cpnn.epochs <= 0 || c.params.cpnn.batch == 0 || !(c.params.cpnn.lr > 0.0) || c.params.cpnn.lambda < 0.0)
    throw ConfigError("'cpnn' needs positive lr, epochs and batch and non-negative lambda");
  if (c.augmented_dirs.size() > c.training_networks.size())
    throw ConfigError("more augmented_dirs than training_networks");
  return c;
}

// Normalized config used for hashing: every field with its effective value.
// The thread count is excluded since it does not affect results.
inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["training_networks"] = c.training_networks;
  j["augmented_dirs"] = c.augmented_dirs;
  j["test_networks"] = c.test_networks;
  const auto p = detail::params_json(c.params);
  for (const auto& [k, v] : p.items()) j[k] = v;
  j["diffusion"] = to_json(c.diffusion);
  j["ratios"] = c.ratios;
  j["equiv"] = {{"M", c.equiv_m}, {"x", c.equiv_x}};
  j["report"] = c.report;
  return j;
}

inline void check_paths(const ExperimentConfig& c) {
  for (const auto* list : {&c.training_networks, &c.test_networks})
    for (const auto& p : *list)
      if (!std::filesystem::is_regular_file(p)) throw ConfigError("network file not readable: " + p);
  for (const auto& p : c.augmented_dirs)
    if (!std::filesystem::is_directory(p)) throw ConfigError("augmented directory not found: " + p);
}

}  // namespace netchrono
