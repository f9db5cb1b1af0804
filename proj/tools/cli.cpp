#include "cli.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "greenspoof/budget.hpp"
#include "greenspoof/embedding_store.hpp"
#include "greenspoof/features.hpp"
#include "greenspoof/metrics.hpp"
#include "greenspoof/selection.hpp"

namespace fs = std::filesystem;

namespace greenspoof::cli {

namespace {

class MissingInput : public std::runtime_error {
 public:
  explicit MissingInput(const fs::path& p) : std::runtime_error(fmt::format("no such input: {}", p.string())) {}
};

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw MissingInput(p);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string read_file(const fs::path& p) {
  require_file(p);
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw RunError(fmt::format("cannot write {}", p.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw RunError(fmt::format("write failed: {}", p.string()));
}

/// Inputs and the options that determine outputs. Output locations and
/// scheduling (--jobs) are deliberately absent so that equal manifests mean
/// equal results.
struct Manifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = kDefaultSeed;
  nlohmann::json options = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();

  void add_input(const std::string& key, const fs::path& p) { inputs[key] = sha256_hex(read_file(p)); }

  nlohmann::json to_json() const {
    return {{"tool", "greenspoof"},  {"version", kVersion}, {"command", command},
            {"config", config_path}, {"seed", seed},        {"options", options},
            {"inputs", inputs}};
  }
  std::string digest() const { return sha256_hex(to_json().dump()); }
  void write(const fs::path& p) const {
    auto j = to_json();
    j["digest"] = digest();
    write_file(p, j.dump(2) + "\n");
  }
};

LayerDataset<PooledVector> load_pooled(const fs::path& gaie, const std::optional<fs::path>& protocol,
                                       Partition partition, std::optional<int> expect_layer = std::nullopt) {
  require_file(gaie);
  auto file = read_embedding_file(gaie);
  if (expect_layer && file.header.layer != *expect_layer) {
    throw FormatError(fmt::format("{}: header layer {} but expected layer {}", gaie.string(), file.header.layer,
                                  *expect_layer));
  }
  std::vector<ProtocolEntry> entries;
  if (protocol) {
    require_file(*protocol);
    entries = parse_protocol_file(*protocol);
  }
  const bool allow_unlabeled = partition == Partition::eval && !protocol;
  auto pooled = pool_all(file.records);
  auto ds = assemble(std::move(pooled), entries, partition, allow_unlabeled);
  ds.layer = file.header.layer;
  return ds;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_layers(const std::string& spec) {
  std::vector<int> layers;
  for (const auto& item : split_list(spec)) {
    const auto dash = item.find('-');
    try {
      if (dash != std::string::npos) {
        const int a = std::stoi(item.substr(0, dash));
        const int b = std::stoi(item.substr(dash + 1));
        for (int l = a; l <= b; ++l) layers.push_back(l);
      } else {
        layers.push_back(std::stoi(item));
      }
    } catch (const std::logic_error&) {
      throw UsageError(fmt::format("bad layer list '{}'", spec));
    }
  }
  for (int l : layers) {
    if (l < 0 || l > kMaxLayer) throw UsageError(fmt::format("layer {} outside [0,{}]", l, kMaxLayer));
  }
  return layers;
}

GridSpec make_grid(const std::string& algorithm, std::uint64_t seed, bool standardize,
                   const std::optional<double>& threshold, const std::string& grid_override) {
  GridSpec g = default_grid(parse_algorithm(algorithm));
  g.seed = seed;
  g.standardize = standardize;
  g.threshold = threshold;
  if (!grid_override.empty()) {
    // "C=0.1,1;gamma=scale" -> axes
    std::map<std::string, std::vector<std::string>> axes;
    std::stringstream ss(grid_override);
    for (std::string axis; std::getline(ss, axis, ';');) {
      const auto eq = axis.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError(fmt::format("bad grid axis '{}'", axis));
      axes[axis.substr(0, eq)] = split_list(axis.substr(eq + 1));
    }
    g.cells = cartesian_grid(axes);
  }
  for (const auto& cell : g.cells) validate(TrainConfig{g.algorithm, cell, seed});
  return g;
}

// ---------------------------------------------------------------------------

struct CommonOptions {
  std::uint64_t seed = kDefaultSeed;
  std::size_t jobs = 1;
  bool standardize = false;
  std::optional<double> threshold;
  bool timings = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "Seed for all randomness")->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "Worker threads for grid cells / sweep pairs")->check(CLI::PositiveNumber);
  cmd->add_flag("--standardize", o.standardize, "Z-score features with train statistics");
  cmd->add_option("--threshold", o.threshold, "F1 decision threshold (default per algorithm)");
  cmd->add_flag("--timings", o.timings, "Record wall-clock columns (breaks byte-identical reruns)");
}

void common_to_manifest(const CommonOptions& o, Manifest& m) {
  m.seed = o.seed;
  m.options["standardize"] = o.standardize;
  m.options["threshold"] = o.threshold ? nlohmann::json(*o.threshold) : nlohmann::json("default");
  m.options["timings"] = o.timings;
}

int cmd_pool(const fs::path& in_file, const fs::path& out_file, std::ostream& out) {
  require_file(in_file);
  auto file = read_embedding_file(in_file);
  std::vector<EmbeddingRecord> pooled;
  pooled.reserve(file.records.size());
  for (const auto& r : file.records) pooled.push_back(to_record(pool(r), r.label));
  write_embeddings(pooled, file.header, out_file);
  out << fmt::format("pooled {} records (layer {}, dim {}) -> {}\n", pooled.size(), file.header.layer,
                     file.header.dim, out_file.string());
  return kOk;
}

struct TrainArgs {
  std::string algorithm;
  std::string grid;
  fs::path train, train_protocol, dev, dev_protocol, model_out, csv_out;
  CommonOptions common;
};

int cmd_train(const TrainArgs& a, const std::string& config_path, std::ostream& out, std::ostream& err) {
  const auto grid = make_grid(a.algorithm, a.common.seed, a.common.standardize, a.common.threshold, a.grid);
  auto train = load_pooled(a.train, a.train_protocol, Partition::train);
  auto dev = load_pooled(a.dev, a.dev_protocol, Partition::dev, train.layer);

  Manifest m;
  m.command = "train";
  m.config_path = config_path;
  common_to_manifest(a.common, m);
  m.options["algorithm"] = a.algorithm;
  m.options["grid"] = nlohmann::json::array();
  for (const auto& c : grid.cells) m.options["grid"].push_back(canonical_string(c));
  m.add_input("train", a.train);
  m.add_input("train_protocol", a.train_protocol);
  m.add_input("dev", a.dev);
  m.add_input("dev_protocol", a.dev_protocol);

  const auto result = run_grid(grid, train, dev, nullptr, RunOptions{a.common.jobs});
  for (const auto& c : result.cells) {
    if (!c.completed || c.status != "ok") err << fmt::format("cell {}: {}\n", canonical_string(c.hyperparameters), c.status);
  }
  {
    if (a.model_out.has_parent_path()) fs::create_directories(a.model_out.parent_path());
    std::ofstream mo(a.model_out, std::ios::binary | std::ios::trunc);
    if (!mo) throw RunError(fmt::format("cannot write {}", a.model_out.string()));
    save_pipeline(*result.winner, mo);
  }
  ReportOptions ro{a.common.timings, m.digest()};
  const fs::path csv = a.csv_out.empty() ? fs::path(a.model_out.string() + ".grid.csv") : a.csv_out;
  write_file(csv, emit_report(result, ReportFormat::cells_csv, ro));
  write_file(fs::path(csv).replace_extension(".md"), emit_report(result, ReportFormat::markdown, ro));
  write_file(fs::path(csv).replace_extension(".json"), to_json(result, a.common.timings).dump(2) + "\n");
  m.write(a.model_out.string() + ".manifest.json");
  const auto& chosen = result.chosen_cell();
  out << fmt::format("chose {} {} (dev F1 {:.4f}, dev EER {:.2f}%, {} params) -> {}\n", to_string(grid.algorithm),
                     canonical_string(chosen.hyperparameters), chosen.dev_f1, 100.0 * chosen.dev_eer,
                     chosen.param_count, a.model_out.string());
  return kOk;
}

struct EvalArgs {
  fs::path model, eval, eval_protocol, scores_out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  require_file(a.model);
  std::ifstream mi(a.model, std::ios::binary);
  const auto pipeline = load_pipeline(mi);
  std::optional<fs::path> protocol;
  if (!a.eval_protocol.empty()) protocol = a.eval_protocol;
  const auto eval = load_pooled(a.eval, protocol, Partition::eval);
  if (!eval.items.empty() && eval.items.front().payload.values.size() != pipeline.scorer.dim()) {
    throw FormatError(fmt::format("eval dim {} != model dim {}", eval.items.front().payload.values.size(),
                                  pipeline.scorer.dim()));
  }
  const auto scores = pipeline.score_all(eval);
  if (!a.scores_out.empty()) write_file(a.scores_out, score_csv(eval, scores));

  bool labeled = !eval.items.empty() && eval.fully_labeled();
  if (labeled) {
    std::vector<Label> labels;
    for (const auto& it : eval.items) labels.push_back(it.label);
    const auto n_bona = std::ranges::count(labels, Label::bonafide);
    labeled = n_bona > 0 && static_cast<std::size_t>(n_bona) < labels.size();
    if (labeled) {
      const metrics::ScoredSet set(scores, std::move(labels));
      const double threshold = pipeline.scorer.default_threshold();
      out << fmt::format("EER {:.2f}%\nF1 {:.4f} (threshold {})\n", 100.0 * metrics::eer(set),
                         metrics::f1(set, threshold), threshold);
    }
  }
  if (!labeled) out << "metrics suppressed: eval set is unlabeled or single-class\n";
  out << fmt::format("scored {} utterances\n", scores.size());
  return kOk;
}

struct SweepArgs {
  std::string algorithms = "knn,logreg,svm_rbf,gaussian_nb,decision_tree,mlp";
  std::string layers = "0-12";
  fs::path data_root;
  fs::path report_dir;
  std::string train_protocol = "train.protocol";
  std::string dev_protocol = "dev.protocol";
  std::string eval_protocol = "eval.protocol";
  double input_seconds = 3.5;
  std::vector<std::string> grid_overrides;  // "algorithm:axis=v1,v2;axis=..."
  CommonOptions common;
};

int cmd_sweep(const SweepArgs& a, const std::string& config_path, std::ostream& out, std::ostream& err) {
  fs::path root = a.data_root;
  if (root.empty()) {
    if (const char* env = std::getenv("GREENSPOOF_DATA_ROOT")) root = env;
  }
  if (root.empty()) throw UsageError("sweep: no data root (use --data-root or GREENSPOOF_DATA_ROOT)");
  if (!fs::is_directory(root)) throw MissingInput(root);

  std::map<std::string, std::string> overrides;
  for (const auto& o : a.grid_overrides) {
    const auto colon = o.find(':');
    if (colon == std::string::npos) throw UsageError(fmt::format("bad --grid '{}'", o));
    overrides[o.substr(0, colon)] = o.substr(colon + 1);
  }
  std::vector<GridSpec> grids;
  for (const auto& name : split_list(a.algorithms)) {
    auto it = overrides.find(name);
    grids.push_back(make_grid(name, a.common.seed, a.common.standardize, a.common.threshold,
                              it == overrides.end() ? "" : it->second));
  }
  if (grids.empty()) throw UsageError("sweep: no algorithms");
  const auto layers = parse_layers(a.layers);
  if (layers.empty()) throw UsageError("sweep: no layers");

  Manifest m;
  m.command = "sweep";
  m.config_path = config_path;
  common_to_manifest(a.common, m);
  m.options["algorithms"] = split_list(a.algorithms);
  m.options["layers"] = layers;
  m.options["input_seconds"] = a.input_seconds;
  m.options["grid_overrides"] = overrides;

  const std::optional<fs::path> train_proto = root / a.train_protocol;
  const std::optional<fs::path> dev_proto = root / a.dev_protocol;
  std::optional<fs::path> eval_proto;
  if (fs::is_regular_file(root / a.eval_protocol)) eval_proto = root / a.eval_protocol;
  m.add_input(a.train_protocol, *train_proto);
  m.add_input(a.dev_protocol, *dev_proto);
  if (eval_proto) m.add_input(a.eval_protocol, *eval_proto);

  std::map<int, LayerSplits> data;
  for (int l : layers) {
    const auto tr = root / fmt::format("train_{}.gaie", l);
    const auto dv = root / fmt::format("dev_{}.gaie", l);
    const auto ev = root / fmt::format("eval_{}.gaie", l);
    if (!fs::is_regular_file(tr) || !fs::is_regular_file(dv) || !fs::is_regular_file(ev)) {
      err << fmt::format("warning: layer {} files missing, skipped\n", l);
      continue;
    }
    for (const auto& p : {tr, dv, ev}) m.add_input(p.filename().string(), p);
    data.emplace(l, LayerSplits{load_pooled(tr, train_proto, Partition::train, l),
                                load_pooled(dv, dev_proto, Partition::dev, l),
                                load_pooled(ev, eval_proto, Partition::eval, l)});
  }
  if (data.empty()) throw FormatError("sweep: no layer has train/dev/eval files");

  const auto result = run_sweep(grids, layers, data, RunOptions{a.common.jobs});
  if (result.completed_count() == 0) throw RunError("sweep: no (algorithm, layer) pair completed");
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";

  const ReportOptions ro{a.common.timings, m.digest()};
  const auto& dir = a.report_dir;
  fs::create_directories(dir);
  write_file(dir / "report.csv", emit_report(result, ReportFormat::csv, ro));
  write_file(dir / "cells.csv", emit_report(result, ReportFormat::cells_csv, ro));
  write_file(dir / "summary.md", emit_report(result, ReportFormat::markdown, ro));
  write_file(dir / "boxplot_by_algorithm.csv", emit_report(result, ReportFormat::boxplot_by_algorithm, ro));
  write_file(dir / "boxplot_by_layer.csv", emit_report(result, ReportFormat::boxplot_by_layer, ro));
  write_file(dir / "results.json", to_json(result, a.common.timings).dump(2) + "\n");
  if (a.common.timings) write_file(dir / "timings.csv", timings_csv(result));

  const auto best = result.best();
  if (best) {
    const auto alg_index = static_cast<std::size_t>(
        std::ranges::find(result.algorithms, best->first) - result.algorithms.begin());
    const auto layer_index =
        static_cast<std::size_t>(std::ranges::find(result.layers, best->second) - result.layers.begin());
    const auto& winner = *result.entries[alg_index][layer_index].result;
    const auto& splits = data.at(best->second);
    const auto report = budget::cost_report(grids[alg_index], {splits.train.size(), splits.dev.size(), splits.eval.size()},
                                            budget::SliceSpec{best->second}, budget::EncoderConfig::base(),
                                            a.input_seconds, winner.chosen_cell().param_count);
    write_file(dir / "budget.json", budget::to_json(report).dump(2) + "\n");
    out << fmt::format("best: {} on layer {} (EER {:.2f}%), slice {:.2f} GMACs, {} frozen params\n",
                       to_string(best->first), best->second,
                       100.0 * winner.eval_eer.value_or(winner.chosen_cell().dev_eer), report.e_proxy_gmacs,
                       report.frozen_param_count);
  }
  m.write(dir / "manifest.json");
  out << fmt::format("{} (algorithm, layer) results -> {}\n", result.completed_count(), dir.string());
  return kOk;
}

struct BudgetArgs {
  int keep_layers = 12;
  double seconds = 3.5;
  std::string algorithm = "svm_rbf";
  std::size_t train_size = 0;
  std::optional<std::int64_t> trainable;
  fs::path out_file;
};

int cmd_budget(const BudgetArgs& a, std::ostream& out) {
  const auto grid = default_grid(parse_algorithm(a.algorithm));
  const auto report = budget::cost_report(grid, {a.train_size, 0, 0}, budget::SliceSpec{a.keep_layers},
                                          budget::EncoderConfig::base(), a.seconds, a.trainable);
  auto j = budget::to_json(report);
  const auto cfg = budget::EncoderConfig::base();
  const auto macs = budget::slice_mac_breakdown(cfg, {a.keep_layers}, a.seconds);
  const auto params = budget::slice_param_breakdown(cfg, {a.keep_layers});
  j["mac_breakdown"] = {{"frames", macs.frames},
                        {"conv_encoder", macs.conv_encoder},
                        {"feature_projection", macs.feature_projection},
                        {"positional_conv", macs.positional_conv},
                        {"attention_projections", macs.attention_projections},
                        {"attention_scores", macs.attention_scores},
                        {"ffn", macs.ffn},
                        {"total", macs.total}};
  j["param_breakdown"] = {{"conv_encoder", params.conv_encoder},
                          {"feature_projection", params.feature_projection},
                          {"positional_conv", params.positional_conv},
                          {"encoder_norm", params.encoder_norm},
                          {"per_transformer_layer", params.per_transformer_layer},
                          {"transformer_layers", params.transformer_layers},
                          {"total", params.total}};
  const auto text = j.dump(2) + "\n";
  if (a.out_file.empty()) {
    out << text;
  } else {
    write_file(a.out_file, text);
  }
  return kOk;
}

struct ReportArgs {
  fs::path results;
  std::string format = "markdown";
  fs::path out_file;
  fs::path pca_input;
  fs::path pca_protocol;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::string text;
  if (!a.pca_input.empty()) {
    std::optional<fs::path> proto;
    if (!a.pca_protocol.empty()) proto = a.pca_protocol;
    text = pca_scatter_csv(load_pooled(a.pca_input, proto, Partition::eval));
  } else {
    if (a.results.empty()) throw UsageError("report: need --results or --pca");
    const auto format = parse_report_format(a.format);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(a.results));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(fmt::format("{}: {}", a.results.string(), e.what()));
    }
    text = j.contains("entries") ? emit_report(sweep_result_from_json(j), format)
                                 : emit_report(grid_result_from_json(j), format);
  }
  if (a.out_file.empty()) {
    out << text;
  } else {
    write_file(a.out_file, text);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spoofing detection on frozen SSL embeddings with classical back-ends", "greenspoof"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::string config_path;
  app.set_config("--config", "", "INI/TOML configuration; command-line flags win")->check(CLI::ExistingFile);

  fs::path pool_in, pool_out;
  auto* pool_cmd = app.add_subcommand("pool", "Frame-average a GAIE file into a pooled GAIE file");
  pool_cmd->add_option("input", pool_in, "Frame-level GAIE file")->required();
  pool_cmd->add_option("output", pool_out, "Pooled GAIE file (frames=1)")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Grid-search one algorithm on train/dev and save the winner");
  train_cmd->add_option("--algorithm", ta.algorithm, "knn|logreg|svm_rbf|gaussian_nb|decision_tree|mlp")->required();
  train_cmd->add_option("--grid", ta.grid, "Override grid, e.g. \"C=0.1,1;gamma=scale\"");
  train_cmd->add_option("--train", ta.train)->required();
  train_cmd->add_option("--train-protocol", ta.train_protocol)->required();
  train_cmd->add_option("--dev", ta.dev)->required();
  train_cmd->add_option("--dev-protocol", ta.dev_protocol)->required();
  train_cmd->add_option("--model-out", ta.model_out)->required();
  train_cmd->add_option("--csv-out", ta.csv_out, "Per-cell CSV (default <model-out>.grid.csv)");
  add_common(train_cmd, ta.common);

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Score an eval set with a saved model");
  eval_cmd->add_option("--model", ea.model)->required();
  eval_cmd->add_option("--eval", ea.eval)->required();
  eval_cmd->add_option("--eval-protocol", ea.eval_protocol, "Omit for unlabeled sets");
  eval_cmd->add_option("--scores-out", ea.scores_out, "CSV: utt_id,score,label");

  SweepArgs sa;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid search every (algorithm, layer) pair");
  sweep_cmd->add_option("--algorithms", sa.algorithms, "Comma-separated list")->capture_default_str();
  sweep_cmd->add_option("--layers", sa.layers, "e.g. 0-12 or 1,2,5")->capture_default_str();
  sweep_cmd->add_option("--data-root", sa.data_root, "Directory with {partition}_{layer}.gaie (env GREENSPOOF_DATA_ROOT)");
  sweep_cmd->add_option("--report-dir", sa.report_dir)->required();
  sweep_cmd->add_option("--train-protocol", sa.train_protocol, "Relative to the data root")->capture_default_str();
  sweep_cmd->add_option("--dev-protocol", sa.dev_protocol)->capture_default_str();
  sweep_cmd->add_option("--eval-protocol", sa.eval_protocol)->capture_default_str();
  sweep_cmd->add_option("--seconds", sa.input_seconds, "Average utterance length for the budget report")
      ->capture_default_str();
  sweep_cmd->add_option("--grid", sa.grid_overrides, "Per-algorithm grid override: \"svm_rbf:C=1;gamma=scale\"");
  add_common(sweep_cmd, sa.common);

  BudgetArgs ba;
  auto* budget_cmd = app.add_subcommand("budget", "Parameter/MAC cost of an encoder slice");
  budget_cmd->add_option("--keep-layers", ba.keep_layers)->check(CLI::Range(0, 12))->capture_default_str();
  budget_cmd->add_option("--seconds", ba.seconds)->check(CLI::PositiveNumber)->capture_default_str();
  budget_cmd->add_option("--algorithm", ba.algorithm, "Downstream algorithm (sets H)")->capture_default_str();
  budget_cmd->add_option("--train-size", ba.train_size, "D: training-set cardinality");
  budget_cmd->add_option("--trainable-params", ba.trainable);
  budget_cmd->add_option("--out", ba.out_file);

  ReportArgs ra;
  auto* report_cmd = app.add_subcommand("report", "Render saved results or a PCA scatter");
  report_cmd->add_option("--results", ra.results, "results.json from train or sweep");
  report_cmd->add_option("--format", ra.format,
                         "markdown|csv|cells_csv|boxplot_by_algorithm|boxplot_by_layer")->capture_default_str();
  report_cmd->add_option("--out", ra.out_file);
  report_cmd->add_option("--pca", ra.pca_input, "GAIE file to project onto 2 principal components");
  report_cmd->add_option("--pca-protocol", ra.pca_protocol);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return kOk;
    // CLI11 reports a missing --config file as a validation error.
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  if (auto* opt = app.get_config_ptr(); opt && opt->count() > 0) config_path = opt->as<std::string>();

  try {
    if (pool_cmd->parsed()) return cmd_pool(pool_in, pool_out, out);
    if (train_cmd->parsed()) return cmd_train(ta, config_path, out, err);
    if (eval_cmd->parsed()) return cmd_eval(ea, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sa, config_path, out, err);
    if (budget_cmd->parsed()) return cmd_budget(ba, out);
    if (report_cmd->parsed()) return cmd_report(ra, out);
  } catch (const MissingInput& e) {
    err << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << fmt::format("no such input: {}\n", e.path1().string());
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace greenspoof::cli
