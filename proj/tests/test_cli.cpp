#include <doctest.h>

#include <sstream>

#include "cli.hpp"
#include "greenspoof/metrics.hpp"
#include "greenspoof/budget.hpp"
#include "greenspoof/selection.hpp"
#include "support.hpp"

using namespace greenspoof;
using testsupport::ScratchDir;
using testsupport::slurp;

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "greenspoof");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

/// Writes {partition}_{layer}.gaie for the given layers plus the three
/// protocol files. Layer 2 carries the signal; other layers are weaker.
void write_data_root(const fs::path& root, const std::vector<int>& layers, std::size_t dim = 4) {
  fs::create_directories(root);
  std::map<std::string, std::vector<ProtocolEntry>> protocols;
  for (int layer : layers) {
    const double separation = layer == 2 ? 6.0 : 0.5 + 0.1 * layer;
    std::uint64_t seed = 100 + static_cast<std::uint64_t>(layer);
    for (auto [name, part, n] : {std::tuple{"train", Partition::train, 60}, std::tuple{"dev", Partition::dev, 30},
                                 std::tuple{"eval", Partition::eval, 40}}) {
      testsupport::BlobSpec spec{dim, separation, 0.5, seed += 7, layer};
      const auto ds = testsupport::gaussian_blobs(static_cast<std::size_t>(n), spec, part, name);
      testsupport::write_gaie(root / fmt::format("{}_{}.gaie", name, layer), ds);
      protocols[name] = testsupport::protocol_for(ds);
    }
  }
  for (const auto& [name, entries] : protocols) testsupport::write_protocol(root / (name + ".protocol"), entries);
}

}  // namespace

TEST_CASE("pool preserves record count") {
  ScratchDir dir("pool");
  auto records = testsupport::random_records(12, 6, 4, 1);
  write_embeddings(records, GaieHeader{6, 4}, dir / "in.gaie");
  const auto r = run({"pool", (dir / "in.gaie").string(), (dir / "out.gaie").string()});
  CHECK(r.code == 0);
  const auto pooled = read_embedding_file(dir / "out.gaie");
  REQUIRE(pooled.records.size() == 12);
  CHECK(pooled.header.layer == 4);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(pooled.records[i].frames == 1);
    CHECK(pooled.records[i].label == records[i].label);
  }
}

TEST_CASE("exit codes for bad inputs") {
  ScratchDir dir("codes");
  const auto missing = run({"pool", (dir / "nope.gaie").string(), (dir / "out.gaie").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("no such input") != std::string::npos);

  std::ofstream(dir / "bad.gaie", std::ios::binary) << "NOPE0000000000000000000000";
  const auto corrupt = run({"pool", (dir / "bad.gaie").string(), (dir / "out.gaie").string()});
  CHECK(corrupt.code == 3);
  CHECK(corrupt.err.find("magic") != std::string::npos);

  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"budget", "--keep-layers", "13"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("train, rerun, and eval") {
  ScratchDir dir("train");
  write_data_root(dir.path(), {2});
  const auto root = dir.path();
  auto train_args = [&](const std::string& tag) {
    return std::vector<std::string>{"train",
                                    "--algorithm", "logreg",
                                    "--train", (root / "train_2.gaie").string(),
                                    "--train-protocol", (root / "train.protocol").string(),
                                    "--dev", (root / "dev_2.gaie").string(),
                                    "--dev-protocol", (root / "dev.protocol").string(),
                                    "--model-out", (root / (tag + ".model")).string(),
                                    "--csv-out", (root / (tag + ".csv")).string()};
  };
  const auto first = run(train_args("a"));
  REQUIRE(first.code == 0);
  CHECK(fs::exists(root / "a.model"));
  const auto csv = slurp(root / "a.csv");
  CHECK(line_count(csv) == 4);  // header + 3 cells
  CHECK(run(train_args("b")).code == 0);
  CHECK(slurp(root / "b.csv") == csv);
  CHECK(slurp(root / "b.model") == slurp(root / "a.model"));

  const auto ev = run({"eval", "--model", (root / "a.model").string(), "--eval", (root / "eval_2.gaie").string(),
                       "--eval-protocol", (root / "eval.protocol").string(), "--scores-out",
                       (root / "scores.csv").string()});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("EER 0.00%") != std::string::npos);

  // The printed EER is the metrics-module value on the emitted scores.
  std::istringstream scores(slurp(root / "scores.csv"));
  std::string line;
  std::getline(scores, line);
  std::vector<double> s;
  std::vector<Label> l;
  while (std::getline(scores, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    s.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    l.push_back(line.substr(c2 + 1) == "bonafide" ? Label::bonafide : Label::spoof);
  }
  CHECK(s.size() == 40);
  CHECK(ev.out.find(fmt::format("EER {:.2f}%", 100.0 * metrics::eer(metrics::ScoredSet(s, l)))) != std::string::npos);

  const auto unlabeled = run({"eval", "--model", (root / "a.model").string(), "--eval",
                              (root / "eval_2.gaie").string(), "--scores-out", (root / "u.csv").string()});
  CHECK(unlabeled.code == 0);
  CHECK(unlabeled.out.find("metrics suppressed") != std::string::npos);
  CHECK(unlabeled.out.find("EER") == std::string::npos);
  CHECK(line_count(slurp(root / "u.csv")) == 41);

  // Dimension mismatch.
  write_data_root(root / "wide", {2}, 5);
  CHECK(run({"eval", "--model", (root / "a.model").string(), "--eval", (root / "wide" / "eval_2.gaie").string()}).code != 0);
}

TEST_CASE("configuration file and flag precedence") {
  ScratchDir dir("config");
  write_data_root(dir.path(), {2});
  const auto root = dir.path();
  {
    std::ofstream cfg(root / "bad.toml");
    cfg << "[train]\nalgorithm = \"random_forest\"\n";
  }
  const std::vector<std::string> base{"--train", (root / "train_2.gaie").string(),
                                      "--train-protocol", (root / "train.protocol").string(),
                                      "--dev", (root / "dev_2.gaie").string(),
                                      "--dev-protocol", (root / "dev.protocol").string(),
                                      "--model-out", (root / "m.model").string()};
  auto args = std::vector<std::string>{"--config", (root / "bad.toml").string(), "train"};
  args.insert(args.end(), base.begin(), base.end());
  const auto bad = run(args);
  CHECK(bad.code == 2);
  CHECK(bad.err.find("random_forest") != std::string::npos);

  args.insert(args.end(), {"--algorithm", "gaussian_nb"});
  const auto fixed = run(args);
  CHECK(fixed.code == 0);
  CHECK(fixed.out.find("gaussian_nb") != std::string::npos);
}

TEST_CASE("sweep over six algorithms and thirteen layers") {
  ScratchDir dir("sweep");
  std::vector<int> layers(13);
  std::iota(layers.begin(), layers.end(), 0);
  write_data_root(dir / "data", layers);
  auto sweep = [&](const std::string& jobs, const std::string& out) {
    return run({"sweep", "--data-root", (dir / "data").string(), "--report-dir", (dir / out).string(), "--jobs", jobs,
                "--grid", "mlp:hidden=8;max_epochs=30;lr0=0.01"});
  };
  const auto r1 = sweep("1", "r1");
  REQUIRE(r1.code == 0);
  const auto report = slurp(dir / "r1" / "report.csv");
  CHECK(line_count(report) == 79);
  CHECK(r1.out.find("layer 2") != std::string::npos);

  const auto budget_json = nlohmann::json::parse(slurp(dir / "r1" / "budget.json"));
  CHECK(budget_json["keep_layers"] == 2);
  CHECK(budget_json["E_proxy_gmacs"].get<double>() == budget::slice_macs(budget::EncoderConfig::base(), {2}, 3.5));

  const auto r8 = sweep("8", "r8");
  REQUIRE(r8.code == 0);
  for (const char* f : {"report.csv", "cells.csv", "summary.md", "boxplot_by_algorithm.csv", "boxplot_by_layer.csv",
                        "results.json", "budget.json", "manifest.json"}) {
    CAPTURE(f);
    CHECK(slurp(dir / "r1" / f) == slurp(dir / "r8" / f));
  }

  const auto rerender = run({"report", "--results", (dir / "r1" / "results.json").string(), "--format", "csv"});
  CHECK(rerender.code == 0);
  CHECK(rerender.out == report);
}

TEST_CASE("sweep errors") {
  ScratchDir dir("sweep_err");
  fs::create_directories(dir / "empty");
  std::ofstream(dir / "empty" / "train.protocol") << "";
  std::ofstream(dir / "empty" / "dev.protocol") << "";
  const auto empty = run({"sweep", "--data-root", (dir / "empty").string(), "--report-dir", (dir / "out").string()});
  CHECK(empty.code != 0);
  CHECK(run({"sweep", "--data-root", (dir / "missing").string(), "--report-dir", (dir / "out").string()}).code == 2);
}

TEST_CASE("budget and pca commands") {
  const auto b = run({"budget", "--keep-layers", "2", "--algorithm", "logreg", "--train-size", "10"});
  REQUIRE(b.code == 0);
  const auto j = nlohmann::json::parse(b.out);
  CHECK(j["H"] == 3);
  CHECK(j["D"] == 10);
  CHECK(j["frozen_param_count"] == budget::slice_params(budget::EncoderConfig::base(), {2}));

  ScratchDir dir("pca");
  write_data_root(dir.path(), {2});
  const auto p = run({"report", "--pca", (dir / "eval_2.gaie").string()});
  CHECK(p.code == 0);
  CHECK(line_count(p.out) == 41);
}
