#include <gtest/gtest.h>

#include <netchrono/experiments.hpp>
#include <netchrono/synthgen.hpp>

using namespace netchrono;

namespace {

NamedNetwork synth(const std::string& name, SynthModel model, std::size_t n, std::uint64_t seed) {
  SynthConfig c;
  c.model = model;
  c.n = n;
  c.m = 2;
  c.seed = seed;
  return prepare_network(name, generate(c));
}

ExperimentParams quick() {
  ExperimentParams p;
  p.pair_cap = 1500;
  p.eval_cap = 1500;
  p.cpnn.epochs = 8;
  p.cpnn.batch = 64;
  p.seeds = {1, 2, 3};
  return p;
}

}  // namespace

TEST(Split, SingleNetworkIsOneByOne) {
  const std::vector<NamedNetwork> nets{synth("ba", SynthModel::BA, 40, 1)};
  const auto r = run_split_matrix(nets, quick());
  ASSERT_EQ(r.accuracy.size(), 3u);
  ASSERT_EQ(r.accuracy[0].size(), 1u);
  EXPECT_GT(r.mean(0, 0), 0.0);
  EXPECT_LE(r.mean(0, 0), 1.0);
}

TEST(Split, DuplicatedNetworkIsNearlySymmetric) {
  const auto a = synth("a", SynthModel::BA, 80, 4);
  const std::vector<NamedNetwork> nets{a, prepare_network("b", a.net)};
  auto p = quick();
  p.seeds = {1, 2, 3, 4, 5};
  const auto r = run_split_matrix(nets, p);
  EXPECT_NEAR(r.mean(0, 1), r.mean(1, 0), 0.02);
  EXPECT_NEAR(r.mean(0, 0), r.mean(1, 1), 0.02);
}

TEST(Split, ThreadCountDoesNotChangeResults) {
  const std::vector<NamedNetwork> nets{synth("ba", SynthModel::BA, 50, 1), synth("fit", SynthModel::Fitness, 50, 2)};
  auto p = quick();
  p.threads = 1;
  const auto serial = run_split_matrix(nets, p);
  p.threads = 4;
  EXPECT_EQ(run_split_matrix(nets, p).accuracy, serial.accuracy);
}

TEST(Joint, SingleTrainingNetworkEqualsSplit) {
  const std::vector<NamedNetwork> nets{synth("ba", SynthModel::BA, 50, 3)};
  const auto p = quick();
  const auto split = run_split_matrix(nets, p);
  const auto joint = run_joint(nets, nets, p);
  ASSERT_EQ(joint.records.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(joint.records[s].accuracy, split.accuracy[s][0][0]);
}

TEST(Joint, EmptyAugmentationIsNoOp) {
  const std::vector<NamedNetwork> train{synth("ba", SynthModel::BA, 50, 3), synth("pso", SynthModel::PSO, 50, 3)};
  const std::vector<NamedNetwork> test{synth("fit", SynthModel::Fitness, 50, 3)};
  const auto p = quick();
  const std::vector<AugmentedSet> none{{0, {}}};
  const auto plain = run_joint(train, test, p);
  const auto aug = run_augmented_joint(train, none, test, p);
  ASSERT_EQ(plain.records.size(), aug.records.size());
  for (std::size_t i = 0; i < plain.records.size(); ++i) EXPECT_EQ(plain.records[i].accuracy, aug.records[i].accuracy);
}

TEST(Joint, ReportListsEveryCell) {
  const std::vector<NamedNetwork> train{synth("ba", SynthModel::BA, 40, 3), synth("pso", SynthModel::PSO, 40, 3)};
  const std::vector<NamedNetwork> test{synth("fit", SynthModel::Fitness, 40, 3), train[0]};
  const auto p = quick();
  const auto r = run_joint(train, test, p);
  const auto rep = joint_report(r, nlohmann::ordered_json{{"k", 1}}, "joint");
  ASSERT_EQ(rep.json["per_seed"].size(), 6u);
  for (const auto& rec : rep.json["per_seed"]) {
    EXPECT_EQ(rec["train_set"], "ba+pso");
    EXPECT_TRUE(rec.contains("test"));
    EXPECT_TRUE(rec.contains("seed"));
    EXPECT_TRUE(rec.contains("accuracy"));
  }
  EXPECT_EQ(rep.json["config_hash"], fnv1a_hex(R"({"k":1})"));
  EXPECT_TRUE(rep.json["versions"].contains("cli"));
  EXPECT_EQ(std::count(rep.csv.begin(), rep.csv.end(), '\n'), 7);
}

TEST(Augmented, AlignmentAndDedup) {
  const auto src = synth("ba", SynthModel::BA, 30, 5);
  // same edges, reversed order and swapped endpoints, new timestamps
  std::vector<RawEdge> raw;
  for (auto k = src.net.edge_count(); k-- > 0;) {
    const auto& e = src.net.edge(k);
    raw.push_back({src.net.node_id(e.v), src.net.node_id(e.u), static_cast<double>(k % 7)});
  }
  const auto other = TemporalNetwork::from_raw(raw);
  const auto ts = align_timestamps(src.net, other);
  for (EdgeIndex k = 0; k < src.net.edge_count(); ++k) EXPECT_EQ(ts[k], static_cast<double>(k % 7));

  EXPECT_THROW(align_timestamps(src.net, parse_edge_list("x y 1\n")), ConfigError);

  // an augmented dataset built from the real timestamps is removed entirely
  const auto real = build_pair_dataset(src.net, src.features.standardized, {100000, 1});
  const auto same = build_pair_dataset(src.net, src.features.standardized, {100000, 2});
  EXPECT_EQ(dedup_augmented(same, real).size(), 0u);
  // reversed timestamps contradict every real pair, so nothing is dropped
  std::vector<double> rev(src.net.edge_count());
  for (EdgeIndex k = 0; k < rev.size(); ++k) rev[k] = -src.net.edge(k).t;
  std::vector<EdgeIndex> all(rev.size());
  std::iota(all.begin(), all.end(), EdgeIndex{0});
  const auto flipped = build_pair_dataset(all, rev, src.features.standardized, {100000, 3});
  EXPECT_EQ(dedup_augmented(flipped, real).size(), flipped.size());
}

TEST(Ratio, SkipsWhenOneSideHasNoPairs) {
  const auto net = prepare_network("tiny", parse_edge_list("a b 1\nb c 2\nc d 3\nd e 4\n"));
  auto p = quick();
  p.seeds = {1};
  const std::vector<double> ratios{0.1, 0.5};
  const auto r = run_ratio_sweep(net, ratios, p);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_FALSE(r.records[0].accuracy.has_value());
  EXPECT_TRUE(r.records[1].accuracy.has_value());
  ASSERT_EQ(r.notes.size(), 1u);
  EXPECT_NE(r.notes[0].find("skipped"), std::string::npos);
  EXPECT_THROW(run_ratio_sweep(net, std::vector<double>{1.0}, p), ConfigError);
}

TEST(Ratio, SplitSizesFollowRatio) {
  const auto net = synth("ba", SynthModel::BA, 60, 2);
  auto p = quick();
  p.seeds = {1, 2};
  const std::vector<double> ratios{0.2, 0.5};
  const auto r = run_ratio_sweep(net, ratios, p);
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.train_edges + rec.test_edges, net.net.edge_count());
    EXPECT_EQ(rec.train_edges, static_cast<std::size_t>(std::ceil(rec.ratio * net.net.edge_count() - 1e-9)));
  }
  const auto sum = r.summary();
  ASSERT_EQ(sum.size(), 2u);
  EXPECT_EQ(sum[0].ratio, 0.2);
}

TEST(Equivalence, PerfectComparatorAndTheoryColumn) {
  const std::vector<double> xs{0.9, 1.0};
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto r = run_equivalence_sim(100, xs, seeds, 2);
  const auto table = r.table();
  ASSERT_EQ(table.size(), 2u);
  EXPECT_NEAR(table[0].theoretical, 0.0375, 1e-12);
  EXPECT_EQ(table[1].theoretical, 0.0);
  EXPECT_NEAR(table[1].meanfield_std, 0.0, 1e-12);
  EXPECT_EQ(table[1].rank_rmse, 0.0);
  // the perfect comparator shows only the constant -1/M offset
  EXPECT_NEAR(r.records[2].meanfield_bias, -0.01, 1e-12);
  EXPECT_THROW(run_equivalence_sim(100, std::vector<double>{0.5}, seeds), ConfigError);
}

TEST(Equivalence, SpreadMatchesTheory) {
  const std::vector<double> xs{0.6, 0.75, 0.9};
  std::vector<std::uint64_t> seeds(20);
  std::iota(seeds.begin(), seeds.end(), 1);
  for (const auto& row : run_equivalence_sim(500, xs, seeds).table()) {
    const double ratio = row.meanfield_std / row.theoretical;
    EXPECT_GE(ratio, 0.85) << "x = " << row.x;
    EXPECT_LE(ratio, 1.15) << "x = " << row.x;
  }
}

TEST(Reports, ByteIdenticalAcrossRuns) {
  const std::vector<NamedNetwork> nets{synth("ba", SynthModel::BA, 40, 1), synth("fit", SynthModel::Fitness, 40, 2)};
  const auto p = quick();
  const nlohmann::ordered_json cfg{{"seeds", p.seeds}};
  const auto a = split_report(run_split_matrix(nets, p), cfg);
  const auto b = split_report(run_split_matrix(nets, p), cfg);
  EXPECT_EQ(a.json.dump(2), b.json.dump(2));
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_TRUE(a.json.contains("average_split"));
  EXPECT_EQ(a.json["per_seed"].size(), 12u);
}

TEST(Config, ParsesAndRejects) {
  const auto j = nlohmann::json::parse(R"({
    "training_networks": ["a.tsv"], "test_networks": ["b.tsv"], "pair_cap": 10,
    "cpnn": {"epochs": 3, "lr": 0.01}, "diffusion": {"T": 50, "hidden": 16},
    "seeds": [7, 8], "threads": 2, "equiv": {"M": 100, "x": [0.9]}
  })");
  const auto c = parse_experiment_config(j);
  EXPECT_EQ(c.params.pair_cap, 10u);
  EXPECT_EQ(c.params.cpnn.epochs, 3);
  EXPECT_EQ(c.diffusion.schedule.steps, 50u);
  EXPECT_EQ(c.diffusion.denoiser.hidden, 16u);
  EXPECT_EQ(c.params.seeds, (std::vector<std::uint64_t>{7, 8}));
  EXPECT_EQ(c.equiv_m, 100u);

  // the thread count does not enter the normalized config
  auto j2 = j;
  j2["threads"] = 9;
  EXPECT_EQ(to_json(parse_experiment_config(j2)).dump(), to_json(c).dump());
  EXPECT_EQ(to_json(c).dump().find("threads"), std::string::npos);

  EXPECT_THROW(parse_experiment_config(nlohmann::json::parse(R"({"bogus": 1})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(nlohmann::json::parse(R"({"seeds": []})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(nlohmann::json::parse(R"({"pair_cap": "many"})")), ConfigError);
  EXPECT_THROW(parse_experiment_config(nlohmann::json::parse(R"({"cpnn": {"lr": -1}})")), ConfigError);
  EXPECT_THROW(check_paths(c), ConfigError);
}

TEST(Seeds, MixIsStableAndSpreads) {
  EXPECT_EQ(detail::mix_seed(1, 2, 3), detail::mix_seed(1, 2, 3));
  EXPECT_NE(detail::mix_seed(1, 2, 3), detail::mix_seed(1, 3, 2));
  EXPECT_NE(detail::mix_seed(1, 2), detail::mix_seed(2, 2));
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
}
