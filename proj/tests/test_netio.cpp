#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <netchrono/netio.hpp>

#include "oracles.hpp"

using namespace netchrono;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

using oracle::distinguishable;

TemporalNetwork random_network(std::mt19937_64& rng, std::size_t n, std::size_t m, int snapshots) {
  std::vector<RawEdge> raw;
  std::uniform_int_distribution<std::size_t> node(0, n - 1);
  std::uniform_int_distribution<int> snap(1, snapshots);
  while (raw.size() < m) {
    const auto a = node(rng), b = node(rng);
    if (a == b) continue;
    raw.push_back({"v" + std::to_string(a), "v" + std::to_string(b), static_cast<double>(snap(rng))});
  }
  return TemporalNetwork::from_raw(raw);
}

}  // namespace

TEST(Parse, TriangleWithComments) {
  const auto net = parse_edge_list("# header\na\tb\t1\nb\tc\t2\n\na\tc\t3\n");
  EXPECT_EQ(net.node_count(), 3u);
  EXPECT_EQ(net.edge_count(), 3u);
  EXPECT_EQ(net.node_id(0), "a");
  EXPECT_EQ(net.node_id(2), "c");
  EXPECT_EQ(net.edge(2).t, 3.0);
}

TEST(Parse, DuplicateKeepsEarliest) {
  const auto net = parse_edge_list("a b 5\nb a 2\na b 9\n");
  ASSERT_EQ(net.edge_count(), 1u);
  EXPECT_EQ(net.edge(0).t, 2.0);
}

TEST(Parse, ErrorsCarryLineNumber) {
  try {
    parse_edge_list("a\tb\t1\nx\tx\t2\n");
    FAIL() << "self-loop accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    parse_edge_list("a\tb\t1\n# c\nc\td\tnan\n");
    FAIL() << "non-finite timestamp accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_edge_list("a\tb\n"), ParseError);
  EXPECT_THROW(parse_edge_list("a\tb\t1x\n"), ParseError);
}

TEST(Parse, EmptyInputGivesEmptyNetwork) {
  const auto net = parse_edge_list("# nothing\n");
  EXPECT_EQ(net.edge_count(), 0u);
  EXPECT_EQ(net.node_count(), 0u);
}

TEST(Network, ConstructorRejectsBadEdges) {
  EXPECT_THROW(TemporalNetwork({"a", "b"}, {{0, 0, 1.0}}), DomainError);
  EXPECT_THROW(TemporalNetwork({"a", "b"}, {{0, 1, 1.0}, {1, 0, 2.0}}), DomainError);
  EXPECT_THROW(TemporalNetwork({"a", "b"}, {{0, 2, 1.0}}), DomainError);
  EXPECT_THROW(TemporalNetwork({"a", "b"}, {{0, 1, INFINITY}}), DomainError);
}

TEST(Network, RoundTripIsCanonical) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = random_network(rng, 15, 40, 6);
    const auto text = write_edge_list(net);
    const auto again = parse_edge_list(text);
    EXPECT_EQ(write_edge_list(again), text);
    ASSERT_EQ(again.edge_count(), net.edge_count());
    for (EdgeIndex k = 0; k < net.edge_count(); ++k) {
      const auto& e = net.edge(k);
      std::optional<EdgeIndex> found;
      for (NodeIndex a = 0; a < again.node_count(); ++a)
        for (NodeIndex b = 0; b < again.node_count(); ++b)
          if (again.node_id(a) == net.node_id(e.u) && again.node_id(b) == net.node_id(e.v)) found = again.find_edge(a, b);
      ASSERT_TRUE(found.has_value());
      EXPECT_EQ(again.edge(*found).t, e.t);
    }
  }
}

TEST(Network, CanonicalWriterSortsByTimeThenIds) {
  const auto net = parse_edge_list("c\td\t2\nb\ta\t1\na\tc\t1\n");
  EXPECT_EQ(write_edge_list(net), "a\tc\t1\nb\ta\t1\nc\td\t2\n");
}

TEST(Distinguishable, Examples) {
  auto dp = distinguishable_pairs(parse_edge_list("a b 1\nb c 1\nc d 1\n"));
  EXPECT_EQ(dp.count, 0u);
  EXPECT_EQ(dp.ratio, 0.0);
  dp = distinguishable_pairs(parse_edge_list("a b 1\nb c 2\nc d 3\n"));
  EXPECT_EQ(dp.count, 3u);
  EXPECT_EQ(dp.ratio, 1.0);
  EXPECT_THROW(distinguishable_pairs(parse_edge_list("a b 1\n")), DomainError);
}

TEST(Distinguishable, MatchesDoubleLoop) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = random_network(rng, 12, 2 + trial, 1 + trial % 7);
    const auto dp = distinguishable_pairs(net);
    const auto brute = distinguishable(net);
    EXPECT_EQ(dp.count, brute);
    const double all = static_cast<double>(net.edge_count()) * (net.edge_count() - 1) / 2.0;
    EXPECT_DOUBLE_EQ(dp.ratio, static_cast<double>(brute) / all);
  }
}

TEST(Distinguishable, Fixtures) {
  const auto air = parse_edge_list(slurp(std::string(NETCHRONO_TEST_DATA) + "/airplane_like.tsv"));
  EXPECT_EQ(air.edge_count(), 125u);
  EXPECT_EQ(snapshot_count(air), 5u);
  EXPECT_EQ(distinguishable_pairs(air).count, distinguishable(air));
  const auto worm = parse_edge_list(slurp(std::string(NETCHRONO_TEST_DATA) + "/worm_like.tsv"));
  EXPECT_NEAR(distinguishable_pairs(worm).ratio, 0.606, 1e-3);
}

TEST(Stats, JsonKeysInOrder) {
  const auto j = to_json(network_stats(parse_edge_list("a b 1\nb c 2\nc a 2\n")));
  EXPECT_EQ(j.dump(), R"({"N":3,"M":3,"E_d":2,"P_Ed":0.6666666666666666,"S":2})");
}

TEST(Subnetwork, SizeAndTimestampsPreserved) {
  std::mt19937_64 rng(2);
  const auto net = random_network(rng, 30, 100, 10);
  for (double frac : {0.5, 0.73, 1.0}) {
    const auto sub = sample_subnetwork(net, frac, 17);
    EXPECT_EQ(sub.edge_count(), static_cast<std::size_t>(std::ceil(frac * net.edge_count())));
    for (const auto& e : sub.edges()) {
      NodeIndex a = 0, b = 0;
      for (NodeIndex i = 0; i < net.node_count(); ++i) {
        if (net.node_id(i) == sub.node_id(e.u)) a = i;
        if (net.node_id(i) == sub.node_id(e.v)) b = i;
      }
      const auto k = net.find_edge(a, b);
      ASSERT_TRUE(k.has_value());
      EXPECT_EQ(net.edge(*k).t, e.t);
    }
    for (NodeIndex i = 0; i < sub.node_count(); ++i) EXPECT_GT(sub.degree(i), 0u);
  }
  EXPECT_EQ(write_edge_list(sample_subnetwork(net, 1.0, 3)), write_edge_list(net));
  EXPECT_EQ(write_edge_list(sample_subnetwork(net, 0.6, 3)), write_edge_list(sample_subnetwork(net, 0.6, 3)));
  EXPECT_THROW(sample_subnetwork(net, 0.3, 1), DomainError);
  EXPECT_THROW(sample_subnetwork(net, 1.2, 1), DomainError);
}

TEST(Positions, MeanRankTies) {
  const std::vector<double> ts{3, 1, 1, 7};
  const auto p = normalized_positions(ts);
  EXPECT_EQ(p.alpha, (std::vector<double>{0.75, 0.375, 0.375, 1.0}));
}

TEST(Positions, SumAndRange) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> d(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ts(1 + trial);
    for (auto& t : ts) t = d(rng);
    const auto p = normalized_positions(ts);
    const double m = static_cast<double>(ts.size());
    double sum = 0.0;
    for (double a : p.alpha) {
      sum += a;
      EXPECT_GT(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
    EXPECT_NEAR(sum, (m + 1.0) / 2.0, 1e-9);
    for (std::size_t i = 0; i < ts.size(); ++i)
      for (std::size_t j = 0; j < ts.size(); ++j)
        if (ts[i] < ts[j]) { EXPECT_LT(p.alpha[i], p.alpha[j]); }
  }
}
