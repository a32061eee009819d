// netchrono command-line interface.
//
// Exit codes: 0 success, 1 unexpected failure, 2 bad configuration or
// input, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <netchrono/netchrono.hpp>

namespace fs = std::filesystem;
using namespace netchrono;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

nlohmann::json read_json(const fs::path& path) {
  const auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_file(path, j.dump(2) + "\n"); }

bool is_csv(const fs::path& p) { return p.extension() == ".csv"; }

PairwiseMatrix read_matrix(const fs::path& path) {
  const auto bytes = read_file(path);
  return is_csv(path) ? matrix_from_csv(bytes) : matrix_from_binary(bytes);
}

void write_matrix(const fs::path& path, const PairwiseMatrix& p) {
  write_file(path, is_csv(path) ? matrix_to_csv(p) : matrix_to_binary(p));
}

// ---------------------------------------------------------------------------

int cmd_stats(const std::string& input, const std::string& out) {
  const auto j = to_json(network_stats(load_network(input)));
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(out, j);
  }
  return 0;
}

int cmd_features(const std::string& input, const fs::path& output) {
  const auto net = load_network(input);
  const auto f = edge_embeddings(net);
  std::string csv = "u,v";
  for (std::size_t c = 1; c <= kEdgeFeatureDim; ++c) csv += ",f" + std::to_string(c);
  csv += "\n";
  for (EdgeIndex k = 0; k < net.edge_count(); ++k) {
    const auto& e = net.edge(k);
    csv += net.node_id(e.u) + "," + net.node_id(e.v);
    for (double x : f.standardized[k]) csv += "," + detail::format_double(x);
    csv += "\n";
  }
  write_file(output, csv);
  nlohmann::ordered_json side;
  side["source"] = input;
  side["mean"] = f.stats.mean;
  side["std"] = f.stats.stddev;
  auto sidecar = output;
  sidecar.replace_extension(".json");
  write_json(sidecar, side);
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out) {
  const auto cfg = parse_experiment_config(read_json(config_path));
  if (cfg.training_networks.empty()) throw ConfigError("train: 'training_networks' is empty");
  check_paths(cfg);
  const auto seed = cfg.params.seeds.front();
  std::vector<PairDataset> data;
  std::vector<std::pair<std::string, Standardization>> stats;
  for (std::size_t i = 0; i < cfg.training_networks.size(); ++i) {
    const auto n = load_named(cfg.training_networks[i]);
    data.push_back(build_pair_dataset(n.net, n.features.standardized, {cfg.params.pair_cap, detail::mix_seed(seed, 1, i)}, n.name));
    stats.emplace_back(n.name, n.features.stats);
  }
  auto tc = cfg.params.cpnn;
  tc.seed = seed;
  auto res = train(data, tc);
  res.model.standardization = std::move(stats);
  auto j = to_json(res.model);
  j["loss_trace"] = res.loss_trace;
  write_json(out, j);
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input, const fs::path& out, std::size_t cap) {
  const auto model = cpnn_from_json(read_json(model_path));
  const auto net = load_network(input);
  const auto f = edge_embeddings(net);
  write_matrix(out, pairwise_matrix(model, f.standardized, cap));
  return 0;
}

nlohmann::ordered_json eval_json(const Evaluation& ev) {
  nlohmann::ordered_json j;
  j["accuracy"] = ev.accuracy ? nlohmann::ordered_json(*ev.accuracy) : nlohmann::ordered_json(nullptr);
  j["rmse"] = ev.rmse;
  j["nrmse"] = ev.nrmse ? nlohmann::ordered_json(*ev.nrmse) : nlohmann::ordered_json(nullptr);
  j["M"] = ev.edges;
  j["E_d"] = ev.distinguishable;
  return j;
}

int cmd_order(const std::string& matrix, const std::string& out, bool hard, const std::string& truth,
              const std::string& report) {
  const auto p = read_matrix(matrix);
  const auto est = borda_order(p, hard);
  std::vector<std::size_t> rank(p.size());
  for (std::size_t r = 0; r < est.ranking.size(); ++r) rank[est.ranking[r]] = r + 1;
  std::string csv = "edge_id,score,rank,alpha_hat\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    csv += std::to_string(i) + "," + detail::format_double(est.scores[i]) + "," + std::to_string(rank[i]) + "," +
           detail::format_double(est.alpha_hat[i]) + "\n";
  }
  write_file(out, csv);
  if (!truth.empty()) {
    const auto net = load_network(truth);
    const auto j = eval_json(evaluate(est, normalized_positions(net)));
    if (report.empty()) {
      std::cout << j.dump(2) << "\n";
    } else {
      write_json(report, j);
    }
  }
  return 0;
}

std::vector<double> read_order_csv(const fs::path& path) {
  const auto text = read_file(path);
  std::vector<double> alpha;
  std::size_t pos = 0, line_no = 0;
  std::optional<std::size_t> column;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const auto line = detail::trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    for (std::size_t s = 0;;) {
      const auto c = line.find(',', s);
      cells.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    if (!column) {
      for (std::size_t c = 0; c < cells.size(); ++c)
        if (cells[c] == "alpha_hat") column = c;
      if (!column) throw ParseError(line_no, "order file lacks an alpha_hat column");
      continue;
    }
    if (*column >= cells.size()) throw ParseError(line_no, "short row");
    const auto v = detail::parse_double(cells[*column]);
    if (!v) throw ParseError(line_no, "malformed alpha_hat");
    alpha.push_back(*v);
  }
  return alpha;
}

int cmd_eval(const std::string& order, const std::string& truth, const std::string& out) {
  const auto alpha = read_order_csv(order);
  const auto net = load_network(truth);
  if (alpha.size() != net.edge_count()) throw ConfigError("order and truth network have different edge counts");
  const auto j = eval_json(evaluate(alpha, normalized_positions(net)));
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(out, j);
  }
  return 0;
}

int cmd_augment(const std::string& input, std::size_t count, const fs::path& out_dir, const std::string& config,
                std::optional<std::uint64_t> seed) {
  AugmentConfig cfg;
  if (!config.empty()) cfg = parse_experiment_config(read_json(config)).diffusion;
  if (seed) cfg.seed = *seed;
  if (count == 0) throw ConfigError("--count must be positive");
  const auto net = load_network(input);
  const auto res = generate_augmented(net, count, cfg);
  fs::create_directories(out_dir);
  const auto width = std::to_string(count - 1).size();
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < res.networks.size(); ++k) {
    auto idx = std::to_string(k);
    idx.insert(0, width - idx.size(), '0');
    const auto name = "sample_" + idx + ".tsv";
    write_file(out_dir / name, write_edge_list(res.networks[k]));
    files.push_back(name);
  }
  nlohmann::ordered_json m;
  m["source"] = input;
  m["seed"] = cfg.seed;
  m["schedule"] = {{"T", cfg.schedule.steps}, {"beta_start", cfg.schedule.beta_start}, {"beta_end", cfg.schedule.beta_end}};
  m["denoiser"] = {{"layers", cfg.denoiser.layers},
                   {"hidden", cfg.denoiser.hidden},
                   {"step_dim", cfg.denoiser.step_dim},
                   {"full_attention", cfg.denoiser.full_attention}};
  m["config"] = to_json(cfg);
  m["count"] = count;
  m["samples"] = files;
  m["final_loss"] = res.loss_trace.empty() ? 0.0 : res.loss_trace.back();
  m["version"] = kVersion;
  write_json(out_dir / "manifest.json", m);
  return 0;
}

struct SynthArgs {
  std::string model = "ba";
  std::size_t n = 100, m = 2;
  std::uint64_t seed = 1;
  double temperature = 0.1, fading = 0.5;
  std::string fitness = "uniform";
  double fa = 0.0, fb = 1.0;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  SynthConfig c;
  const auto model = parse_synth_model(a.model);
  if (!model) throw ConfigError("unknown model '" + a.model + "' (expected ba, pso or fitness)");
  c.model = *model;
  c.n = a.n;
  c.m = a.m;
  c.seed = a.seed;
  c.pso = {a.temperature, a.fading};
  if (a.fitness == "uniform") {
    c.fitness = {FitnessDistribution::Kind::Uniform, a.fa, a.fb};
  } else if (a.fitness == "exponential") {
    c.fitness = {FitnessDistribution::Kind::Exponential, a.fa > 0.0 ? a.fa : 1.0, 0.0};
  } else if (a.fitness == "constant") {
    c.fitness = {FitnessDistribution::Kind::Constant, a.fa > 0.0 ? a.fa : 1.0, 0.0};
  } else {
    throw ConfigError("unknown fitness distribution '" + a.fitness + "'");
  }
  const auto text = write_edge_list(generate(c));
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file(a.out, text);
  }
  return 0;
}

std::vector<NamedNetwork> load_all(const std::vector<std::string>& paths) {
  std::vector<NamedNetwork> out;
  for (const auto& p : paths) out.push_back(load_named(p));
  return out;
}

int cmd_exp(const std::string& kind, const std::string& config_path, std::string out) {
  const auto cfg = parse_experiment_config(read_json(config_path));
  check_paths(cfg);
  if (out.empty()) out = cfg.report;
  if (out.empty()) throw ConfigError("no report path: set 'report' in the config or pass --out");
  const auto cj = to_json(cfg);
  Report rep;
  if (kind == "split") {
    if (cfg.training_networks.empty()) throw ConfigError("split: 'training_networks' is empty");
    const auto nets = load_all(cfg.training_networks);
    rep = split_report(run_split_matrix(nets, cfg.params), cj);
  } else if (kind == "joint" || kind == "augjoint") {
    if (cfg.training_networks.empty()) throw ConfigError(kind + ": 'training_networks' is empty");
    const auto train = load_all(cfg.training_networks);
    const auto test = load_all(cfg.test_networks.empty() ? cfg.training_networks : cfg.test_networks);
    std::vector<AugmentedSet> aug;
    if (kind == "augjoint") {
      for (std::size_t i = 0; i < cfg.augmented_dirs.size(); ++i) {
        AugmentedSet s{i, {}};
        for (const auto& a : load_augmented_dir(cfg.augmented_dirs[i])) s.timestamps.push_back(align_timestamps(train[i].net, a));
        aug.push_back(std::move(s));
      }
    }
    const auto r = run_augmented_joint(train, aug, test, cfg.params);
    for (const auto& n : r.notes) std::cerr << "warning: " << n << "\n";
    rep = joint_report(r, cj, kind);
  } else if (kind == "ratio") {
    if (cfg.training_networks.size() != 1) throw ConfigError("ratio: exactly one training network is required");
    const auto net = load_named(cfg.training_networks.front());
    const auto r = run_ratio_sweep(net, cfg.ratios, cfg.params);
    for (const auto& n : r.notes) std::cerr << "note: " << n << "\n";
    rep = ratio_report(r, cj);
  } else if (kind == "equiv") {
    rep = equivalence_report(run_equivalence_sim(cfg.equiv_m, cfg.equiv_x, cfg.params.seeds, cfg.params.threads), cj);
  } else {
    throw ConfigError("unknown experiment '" + kind + "'");
  }
  fs::path base(out);
  if (base.extension() == ".json") base.replace_extension();
  write_json(fs::path(base.string() + ".json"), rep.json);
  write_file(fs::path(base.string() + ".csv"), rep.csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge generation-order inference for temporal networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("netchrono ") + kVersion);

  std::string input, output, config, model, matrix, truth, report, out_dir;
  std::size_t count = 100, cap = kDefaultMatrixCap;
  bool hard = false;
  std::uint64_t seed_value = 0;

  auto* stats = app.add_subcommand("stats", "Print N, M, E_d, P_Ed and snapshot count");
  stats->add_option("--input", input, "Edge-list file")->required();
  stats->add_option("--out", output, "Write JSON here instead of stdout");

  auto* features = app.add_subcommand("features", "Standardized 12-dimensional edge features");
  features->add_option("--input", input, "Edge-list file")->required();
  features->add_option("--output,--out", output, "CSV output; mean/std go to a .json sidecar")->required();

  auto* trn = app.add_subcommand("train", "Train a pairwise comparator");
  trn->add_option("--config", config, "Experiment config JSON")->required();
  trn->add_option("--out", output, "Checkpoint JSON")->required();

  auto* pred = app.add_subcommand("predict", "Pairwise before-probability matrix for a network");
  pred->add_option("--model", model, "Checkpoint JSON")->required();
  pred->add_option("--input", input, "Edge-list file")->required();
  pred->add_option("--out", output, "Matrix file (.csv or flat binary)")->required();
  pred->add_option("--cap", cap, "Maximum edge count for a full matrix");

  auto* ord = app.add_subcommand("order", "Aggregate a pairwise matrix into an edge order");
  ord->add_option("--matrix", matrix, "Matrix file (.csv or flat binary)")->required();
  ord->add_option("--out", output, "Order CSV")->required();
  ord->add_flag("--hard", hard, "Threshold probabilities at 0.5 before counting");
  ord->add_option("--truth", truth, "Edge-list with true timestamps, same edge order");
  ord->add_option("--report", report, "Evaluation JSON (requires --truth)");

  auto* ev = app.add_subcommand("eval", "Score an order CSV against true timestamps");
  ev->add_option("--order", matrix, "Order CSV with an alpha_hat column")->required();
  ev->add_option("--truth", truth, "Edge-list with true timestamps")->required();
  ev->add_option("--out", output, "Report JSON");

  auto* aug = app.add_subcommand("augment", "Generate augmented edge orders with the diffusion model");
  aug->add_option("--input", input, "Edge-list file")->required();
  aug->add_option("--count", count, "Number of augmented networks");
  aug->add_option("--out-dir", out_dir, "Output directory")->required();
  aug->add_option("--config", config, "Config JSON with a 'diffusion' section");
  auto* seed_opt = aug->add_option("--seed", seed_value, "Diffusion seed");

  SynthArgs sa;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic temporal network");
  syn->add_option("--model", sa.model, "ba, pso or fitness");
  syn->add_option("--n", sa.n, "Node count");
  syn->add_option("--m", sa.m, "Edges per arriving node");
  syn->add_option("--seed", sa.seed, "Seed");
  syn->add_option("--temperature", sa.temperature, "PSO temperature");
  syn->add_option("--fading", sa.fading, "PSO popularity fading exponent");
  syn->add_option("--fitness", sa.fitness, "uniform, exponential or constant");
  syn->add_option("--fitness-a", sa.fa, "Lower bound, rate or constant value");
  syn->add_option("--fitness-b", sa.fb, "Upper bound of the uniform distribution");
  syn->add_option("--out", sa.out, "Edge-list output (stdout if omitted)");

  std::string exp_kind;
  auto* exp = app.add_subcommand("exp", "Run an experiment");
  exp->add_option("kind", exp_kind, "split, joint, augjoint, ratio or equiv")
      ->required()
      ->check(CLI::IsMember({"split", "joint", "augjoint", "ratio", "equiv"}));
  exp->add_option("--config", config, "Experiment config JSON")->required();
  exp->add_option("--out", output, "Report path without extension (overrides 'report')");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*stats) return cmd_stats(input, output);
    if (*features) return cmd_features(input, output);
    if (*trn) return cmd_train(config, output);
    if (*pred) return cmd_predict(model, input, output, cap);
    if (*ord) return cmd_order(matrix, output, hard, truth, report);
    if (*ev) return cmd_eval(matrix, truth, output);
    if (*aug) {
      return cmd_augment(input, count, out_dir, config,
                         seed_opt->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt);
    }
    if (*syn) return cmd_synth(sa);
    if (*exp) return cmd_exp(exp_kind, config, output);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
