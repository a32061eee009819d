#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <netchrono/topoevodiff.hpp>

using namespace netchrono;

namespace {

std::vector<double> normals(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Ten edges with a few distinct structural roles.
TemporalNetwork ten_edges() {
  return parse_edge_list(
      "a b 1\nb c 1\nc a 2\nc d 2\nd e 3\ne f 3\nf d 4\nf g 4\ng h 5\nb h 5\n");
}

DenoiserConfig small_config() {
  DenoiserConfig c;
  c.layers = 2;
  c.hidden = 8;
  c.step_dim = 4;
  return c;
}

}  // namespace

TEST(Schedule, TwoStepHandProduct) {
  const auto s = make_schedule(2, 0.1, 0.2);
  ASSERT_EQ(s.steps(), 2u);
  EXPECT_NEAR(s.alpha_bar_at(1), 0.9, 1e-15);
  EXPECT_NEAR(s.alpha_bar_at(2), 0.72, 1e-15);
}

TEST(Schedule, RejectsBadRanges) {
  EXPECT_THROW(make_schedule(1, 0.1, 0.2), DomainError);
  EXPECT_THROW(make_schedule(10, 0.0, 0.0), DomainError);
  EXPECT_THROW(make_schedule(10, 0.2, 0.1), DomainError);
  EXPECT_THROW(make_schedule(10, 0.1, 1.0), DomainError);
}

TEST(Schedule, MonotoneAndDefaultEndpoint) {
  const auto s = make_schedule(ScheduleConfig{});
  for (std::size_t t = 2; t <= s.steps(); ++t) {
    EXPECT_GT(s.beta_at(t), 0.0);
    EXPECT_LT(s.alpha_bar_at(t), s.alpha_bar_at(t - 1));
  }
  // product of (1 - beta_t) over the linear ramp, evaluated independently
  long double prod = 1.0L;
  for (int i = 0; i < 200; ++i) prod *= 1.0L - (1e-4L + (0.02L - 1e-4L) * i / 199.0L);
  EXPECT_NEAR(s.alpha_bar.back(), static_cast<double>(prod), 1e-12);
  // the T=200 ramp stops short of pure noise; the longer ramp gets there
  EXPECT_NEAR(s.alpha_bar.back(), 0.13218, 1e-5);
  EXPECT_FALSE(s.reaches_noise());
  EXPECT_TRUE(make_schedule(1000, 1e-4, 0.02).reaches_noise());
}

TEST(Forward, ZeroNoiseScalesF0) {
  const auto s = make_schedule(ScheduleConfig{});
  const std::vector<double> f0{-1.0, 0.25, 1.0}, zero(3, 0.0);
  const auto ft = forward_diffuse(f0, 37, s, zero);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(ft[i], std::sqrt(s.alpha_bar_at(37)) * f0[i]);
  EXPECT_THROW(forward_diffuse(f0, 0, s, zero), DomainError);
  EXPECT_THROW(forward_diffuse(f0, 201, s, zero), DomainError);
  EXPECT_THROW(forward_diffuse(f0, 1, s, std::vector<double>(2)), DomainError);
}

TEST(Forward, TwoStepCompositionMatchesClosedForm) {
  const auto s = make_schedule(ScheduleConfig{});
  std::mt19937_64 rng(1);
  for (std::size_t t = 2; t <= 200; t += 17) {
    const auto f0 = normals(rng, 20);
    const auto n1 = normals(rng, 20), n2 = normals(rng, 20);
    // F^{t} = sqrt(a_t) (sqrt(abar_{t-1}) F0 + sqrt(1-abar_{t-1}) n1) + sqrt(b_t) n2
    const auto composed = diffuse_step(forward_diffuse(f0, t - 1, s, n1), t, s, n2);
    const double c1 = std::sqrt(s.alpha_at(t) * (1.0 - s.alpha_bar_at(t - 1)));
    const double c2 = std::sqrt(s.beta_at(t));
    std::vector<double> combined(20);
    for (std::size_t i = 0; i < 20; ++i) combined[i] = (c1 * n1[i] + c2 * n2[i]) / std::sqrt(c1 * c1 + c2 * c2);
    const auto closed = forward_diffuse(f0, t, s, combined);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(composed[i], closed[i], 1e-10);
  }
}

TEST(Forward, FinalStepDecorrelates) {
  // the default T=200 ramp keeps sqrt(abar_T) ~ 0.37 of the signal, so the
  // check runs on a ramp that reaches pure noise
  const auto s = make_schedule(1000, 1e-4, 0.02);
  std::mt19937_64 rng(2);
  const auto f0 = normals(rng, 1000);
  const auto ft = forward_diffuse(f0, s.steps(), s, normals(rng, 1000));
  EXPECT_LT(std::abs(correlation(f0, ft)), 0.1);
  const auto short_ramp = make_schedule(ScheduleConfig{});
  const auto ft200 = forward_diffuse(f0, 200, short_ramp, normals(rng, 1000));
  EXPECT_GT(correlation(f0, ft200), 0.2);
}

TEST(Denoiser, ZeroModelPredictsZero) {
  const auto s = make_schedule(ScheduleConfig{});
  const auto model = make_denoiser(DenoiserConfig{}, s);
  const auto g = make_denoiser_graph(ten_edges());
  std::mt19937_64 rng(3);
  const auto eps = denoiser_forward(model, g, normals(rng, 10), 50);
  for (double e : eps) EXPECT_EQ(e, 0.0);
  EXPECT_THROW(denoiser_forward(model, g, normals(rng, 9), 50), DomainError);
  EXPECT_THROW(denoiser_forward(model, g, normals(rng, 10), 0), DomainError);
}

TEST(Denoiser, EquivariantUnderRelabeling) {
  const auto net = ten_edges();
  const auto s = make_schedule(ScheduleConfig{});
  std::mt19937_64 rng(4);
  const auto model = make_denoiser(DenoiserConfig{}, s, &rng);
  for (bool full : {false, true}) {
    std::vector<std::size_t> node_perm(net.node_count()), edge_perm(net.edge_count());
    std::iota(node_perm.begin(), node_perm.end(), 0);
    std::iota(edge_perm.begin(), edge_perm.end(), 0);
    std::shuffle(node_perm.begin(), node_perm.end(), rng);
    std::shuffle(edge_perm.begin(), edge_perm.end(), rng);
    std::vector<std::string> ids(net.node_count());
    for (NodeIndex i = 0; i < net.node_count(); ++i) ids[node_perm[i]] = "q" + net.node_id(i);
    std::vector<Edge> edges(net.edge_count());
    for (EdgeIndex k = 0; k < net.edge_count(); ++k) {
      const auto& e = net.edge(k);
      edges[edge_perm[k]] = {static_cast<NodeIndex>(node_perm[e.v]), static_cast<NodeIndex>(node_perm[e.u]), e.t};
    }
    const TemporalNetwork other(ids, edges);
    const auto f = normals(rng, 10);
    std::vector<double> fp(10);
    for (std::size_t k = 0; k < 10; ++k) fp[edge_perm[k]] = f[k];
    const auto a = denoiser_forward(model, make_denoiser_graph(net, full), f, 120);
    const auto b = denoiser_forward(model, make_denoiser_graph(other, full), fp, 120);
    for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(a[k], b[edge_perm[k]], 1e-10);
  }
}

TEST(Denoiser, ConditioningIsReadOnly) {
  const auto s = make_schedule(ScheduleConfig{});
  std::mt19937_64 rng(5);
  const auto model = make_denoiser(small_config(), s, &rng);
  const auto g = make_denoiser_graph(ten_edges());
  const ad::Matrix before = g.conditioning;
  const auto sample = DiffusionSample{g, encode_order(ten_edges())};
  std::vector<ad::Matrix> grads;
  for (const auto& p : model.params) grads.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
  denoiser_loss(model, sample, 30, normals(rng, 10), s, &grads);
  EXPECT_EQ(sample.graph.conditioning, before);
}

TEST(Denoiser, LossGradientMatchesFiniteDifferences) {
  const auto s = make_schedule(ScheduleConfig{});
  std::mt19937_64 rng(6);
  auto model = make_denoiser(small_config(), s, &rng);
  const DiffusionSample sample{make_denoiser_graph(ten_edges()), encode_order(ten_edges())};
  for (std::size_t t : {3u, 90u, 200u}) {
    const auto noise = normals(rng, 10);
    std::vector<ad::Matrix> grads;
    for (const auto& p : model.params) grads.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
    denoiser_loss(model, sample, t, noise, s, &grads);
    const double eps = 1e-6;
    std::size_t checked = 0, bad = 0;
    for (std::size_t i = 0; i < model.params.size(); ++i) {
      for (Eigen::Index c = 0; c < model.params[i].size(); ++c) {
        double& w = model.params[i].data()[c];
        const double keep = w;
        w = keep + eps;
        const double up = denoiser_loss(model, sample, t, noise, s);
        w = keep - eps;
        const double down = denoiser_loss(model, sample, t, noise, s);
        w = keep;
        const double fd = (up - down) / (2 * eps);
        const double g = grads[i].data()[c];
        const double scale = std::max({std::abs(fd), std::abs(g), 1e-4});
        ++checked;
        // a ReLU kink inside the +-eps window can break a single coordinate
        if (std::abs(fd - g) / scale >= 1e-3) ++bad;
      }
    }
    EXPECT_GT(checked, 500u);
    EXPECT_LE(bad, checked / 200) << "t = " << t;
  }
}

TEST(Reverse, ZeroDenoiserSingleStep) {
  const auto s = make_schedule(2, 0.1, 0.2);
  std::mt19937_64 rng(7);
  const std::vector<double> start{0.3, -1.2};
  NoisePredictor zero = [](std::span<const double> f, std::size_t) { return std::vector<double>(f.size(), 0.0); };
  const auto out = reverse_from(s, start, zero, rng, {false, ReverseVariance::AlphaBar}, 1);
  EXPECT_DOUBLE_EQ(out[0], 0.3 / std::sqrt(0.9));
  EXPECT_DOUBLE_EQ(out[1], -1.2 / std::sqrt(0.9));
}

TEST(Reverse, TeacherForcedOracleRecoversF0) {
  const auto s = make_schedule(ScheduleConfig{});
  std::mt19937_64 rng(8);
  const auto f0 = encode_order(ten_edges());
  // forward chain with stored per-step noise
  std::vector<std::vector<double>> states{f0};
  for (std::size_t t = 1; t <= s.steps(); ++t) states.push_back(diffuse_step(states.back(), t, s, normals(rng, 10)));
  // eps such that the deterministic reverse step lands on the stored F^{t-1}
  NoisePredictor oracle = [&](std::span<const double> f, std::size_t t) {
    const double coef = s.beta_at(t) / std::sqrt(1.0 - s.alpha_bar_at(t));
    std::vector<double> eps(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) eps[i] = (f[i] - std::sqrt(s.alpha_at(t)) * states[t - 1][i]) / coef;
    return eps;
  };
  const auto out = reverse_from(s, states.back(), oracle, rng, {false, ReverseVariance::AlphaBar}, s.steps());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(out[i], f0[i], 1e-6);
}

TEST(Reverse, CleanSignalOracleRecoversF0) {
  const auto s = make_schedule(ScheduleConfig{});
  const auto f0 = encode_order(ten_edges());
  // eps implied by the current state and the known clean signal
  NoisePredictor oracle = [&](std::span<const double> f, std::size_t t) {
    std::vector<double> eps(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      eps[i] = (f[i] - std::sqrt(s.alpha_bar_at(t)) * f0[i]) / std::sqrt(1.0 - s.alpha_bar_at(t));
    return eps;
  };
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    const auto out = reverse_sample(s, 10, oracle, rng, {false, ReverseVariance::AlphaBar});
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(out[i], f0[i], 1e-6);
    const auto noisy = reverse_sample(s, 10, oracle, rng);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(noisy[i], f0[i], 1e-6);
  }
}

TEST(Reverse, DeterministicPerSeedAndShape) {
  const auto s = make_schedule(ScheduleConfig{});
  std::mt19937_64 rng(9);
  const auto model = make_denoiser(small_config(), s, &rng);
  const auto g = make_denoiser_graph(ten_edges());
  const auto a = sample_timestamps(model, g, s, 42);
  const auto b = sample_timestamps(model, g, s, 42);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, sample_timestamps(model, g, s, 43));
  EXPECT_THROW(sample_timestamps(model, g, make_schedule(100, 1e-4, 0.02), 1), DomainError);
}

TEST(Train, ZeroSignalImproves) {
  const auto s = make_schedule(ScheduleConfig{});
  const auto net = ten_edges();
  const DiffusionSample zero{make_denoiser_graph(net), std::vector<double>(10, 0.0)};
  DiffusionTrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch = 1;
  cfg.seed = 3;
  const auto res = train_denoiser(std::vector<DiffusionSample>{zero}, s, small_config(), cfg);
  const double head = std::accumulate(res.loss_trace.begin(), res.loss_trace.begin() + 20, 0.0) / 20;
  const double tail = std::accumulate(res.loss_trace.end() - 20, res.loss_trace.end(), 0.0) / 20;
  EXPECT_LT(tail, head);
  EXPECT_LT(res.loss_trace.back(), res.loss_trace.front());
}

TEST(Train, DeterministicLossTrace) {
  const auto s = make_schedule(ScheduleConfig{});
  const DiffusionSample sample{make_denoiser_graph(ten_edges()), encode_order(ten_edges())};
  DiffusionTrainConfig cfg;
  cfg.epochs = 5;
  const std::vector<DiffusionSample> data{sample, sample};
  const auto a = train_denoiser(data, s, small_config(), cfg);
  const auto b = train_denoiser(data, s, small_config(), cfg);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.model.params, b.model.params);
}

TEST(Train, RejectsUnnormalizedTargets) {
  const auto s = make_schedule(ScheduleConfig{});
  DiffusionSample bad{make_denoiser_graph(ten_edges()), std::vector<double>(10, 0.0)};
  bad.f0[3] = 1.5;
  EXPECT_THROW(train_denoiser(std::vector<DiffusionSample>{bad}, s, small_config(), {}), DomainError);
}

// One 5-edge sample, many noise draws per update. Every 5-edge graph has a
// symmetry swapping two edges, so mirror-image edges share a timestamp; the
// denoiser cannot tell them apart from topology alone.
TEST(Train, OverfitsSingleSample) {
  const auto s = make_schedule(ScheduleConfig{});
  const auto net = parse_edge_list("a b 1\nd e 1\nb c 2\nc d 2\nb d 3\n");
  const auto sample = make_diffusion_sample(net);
  DiffusionTrainConfig cfg;
  cfg.epochs = 1500;
  cfg.batch = 8;
  cfg.lr = 1e-3;
  cfg.seed = 5;
  DenoiserConfig dc;
  dc.hidden = 32;
  const auto res = train_denoiser(std::vector<DiffusionSample>(8, sample), s, dc, cfg);

  // expected loss over every step, four noise draws each
  std::mt19937_64 rng(99);
  double loss = 0.0;
  for (std::size_t t = 1; t <= s.steps(); ++t)
    for (int k = 0; k < 4; ++k) loss += denoiser_loss(res.model, sample, t, normals(rng, 5), s);
  loss /= 4.0 * static_cast<double>(s.steps());
  EXPECT_LT(loss, 0.1);

  const auto g = make_denoiser_graph(net);
  std::vector<double> mean(5, 0.0);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto v = sample_timestamps(res.model, g, s, seed);
    for (std::size_t k = 0; k < 5; ++k) mean[k] += v[k] / 100;
  }
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(mean[k], sample.f0[k], 0.15) << "edge " << k;
}

TEST(Augment, EncodeDecode) {
  const auto net = parse_edge_list("a b 3\nb c 1\nc d 2\nd e 2\n");
  EXPECT_EQ(encode_order(net), (std::vector<double>{1.0, -1.0, 0.0, 0.0}));
  EXPECT_EQ(decode_order(std::vector<double>{0.3, -2.0, 0.3, 0.1}), (std::vector<double>{0.75, 0.25, 1.0, 0.5}));
}

TEST(Augment, FixedTopologyDifferentOrders) {
  const auto net = ten_edges();
  AugmentConfig cfg;
  cfg.training_samples = 6;
  cfg.denoiser = small_config();
  cfg.train.epochs = 3;
  cfg.seed = 11;
  const auto res = generate_augmented(net, 4, cfg);
  ASSERT_EQ(res.networks.size(), 4u);
  bool any_differs = false;
  for (const auto& aug : res.networks) {
    ASSERT_EQ(aug.edge_count(), net.edge_count());
    for (EdgeIndex k = 0; k < net.edge_count(); ++k) {
      EXPECT_EQ(aug.edge(k).u, net.edge(k).u);
      EXPECT_EQ(aug.edge(k).v, net.edge(k).v);
    }
    EXPECT_EQ(aug.node_ids(), net.node_ids());
    auto ts = aug.timestamps();
    std::sort(ts.begin(), ts.end());
    for (std::size_t r = 0; r < ts.size(); ++r) EXPECT_DOUBLE_EQ(ts[r], (r + 1.0) / ts.size());
    if (aug.timestamps() != res.networks[0].timestamps()) any_differs = true;
  }
  EXPECT_TRUE(any_differs);
  EXPECT_EQ(write_edge_list(generate_augmented(net, 4, cfg).networks[2]), write_edge_list(res.networks[2]));
  EXPECT_THROW(generate_augmented(net, 0, cfg), DomainError);
  EXPECT_THROW(generate_augmented(parse_edge_list("a b 1\nb c 1\n"), 1, cfg), DomainError);
}
