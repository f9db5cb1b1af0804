#include <doctest.h>

#include <sstream>

#include "greenspoof/errors.hpp"
#include "greenspoof/metrics.hpp"
#include "greenspoof/selection.hpp"
#include "support.hpp"

using namespace greenspoof;
using testsupport::BlobSpec;
using testsupport::gaussian_blobs;

namespace {

struct Splits {
  LayerDataset<PooledVector> train, dev, eval;
};

Splits make_splits(std::size_t dim, double separation, std::uint64_t seed, int layer = 0) {
  BlobSpec spec{dim, separation, 0.5, seed, layer};
  Splits s;
  s.train = gaussian_blobs(120, spec, Partition::train, "tr");
  spec.seed += 1000;
  s.dev = gaussian_blobs(60, spec, Partition::dev, "dv");
  spec.seed += 1000;
  s.eval = gaussian_blobs(80, spec, Partition::eval, "ev");
  return s;
}

GridSpec grid(Algorithm a, std::vector<Hyperparameters> cells) {
  GridSpec g;
  g.algorithm = a;
  g.cells = std::move(cells);
  return g;
}

}  // namespace

TEST_CASE("published grid sizes") {
  CHECK(default_grid(Algorithm::knn).cells.size() == 3);
  CHECK(default_grid(Algorithm::logreg).cells.size() == 3);
  CHECK(default_grid(Algorithm::svm_rbf).cells.size() == 3);
  CHECK(default_grid(Algorithm::gaussian_nb).cells.size() == 1);
  CHECK(default_grid(Algorithm::decision_tree).cells.size() == 6);
  CHECK(default_grid(Algorithm::mlp).cells.size() == 8);
  CHECK(canonical_string(default_grid(Algorithm::logreg).cells[0]) == "C=0.2");
}

TEST_CASE("cartesian grid order") {
  const auto cells = cartesian_grid({{"a", {"1", "2"}}, {"b", {"x", "y"}}});
  REQUIRE(cells.size() == 4);
  CHECK(canonical_string(cells[0]) == "a=1;b=x");
  CHECK(canonical_string(cells[1]) == "a=1;b=y");
  CHECK(canonical_string(cells[3]) == "a=2;b=y");
}

TEST_CASE("single-cell grid") {
  const auto s = make_splits(4, 3.0, 1);
  const auto r = run_grid(grid(Algorithm::logreg, {{{"C", "1"}}}), s.train, s.dev, &s.eval);
  CHECK(r.chosen == 0);
  CHECK(r.cells[0].completed);
  REQUIRE(r.eval_eer.has_value());
  REQUIRE(r.eval_f1.has_value());
  CHECK(r.winner.has_value());
  CHECK(r.train_size == 120);
}

TEST_CASE("dev metrics are the metrics-module values") {
  const auto s = make_splits(4, 1.5, 2);
  const auto r = run_grid(grid(Algorithm::logreg, {{{"C", "1"}}}), s.train, s.dev, &s.eval);
  const auto scores = r.winner->score_all(s.dev);
  std::vector<Label> labels;
  for (const auto& it : s.dev.items) labels.push_back(it.label);
  const metrics::ScoredSet set(scores, labels);
  CHECK(r.cells[0].dev_eer == metrics::eer(set));
  CHECK(r.cells[0].dev_f1 == metrics::f1(set, 0.5));
}

TEST_CASE("F1 ties go to the smaller model, then the earlier cell") {
  const auto s = make_splits(3, 8.0, 3);
  auto g = grid(Algorithm::mlp, {{{"hidden", "12"}, {"lr0", "0.05"}, {"max_epochs", "30"}},
                                 {{"hidden", "4"}, {"lr0", "0.05"}, {"max_epochs", "30"}}});
  const auto r = run_grid(g, s.train, s.dev, nullptr);
  REQUIRE(r.cells[0].dev_f1 == 1.0);
  REQUIRE(r.cells[1].dev_f1 == 1.0);
  CHECK(r.chosen == 1);

  const auto equal = run_grid(grid(Algorithm::logreg, {{{"C", "10"}}, {{"C", "0.1"}}}), s.train, s.dev, nullptr);
  REQUIRE(equal.cells[0].dev_f1 == equal.cells[1].dev_f1);
  CHECK(equal.chosen == 0);
}

TEST_CASE("eval labels do not influence selection") {
  const auto s = make_splits(6, 1.0, 4);
  auto unlabeled = s.eval;
  for (auto& it : unlabeled.items) it.label = Label::unknown;
  const auto g = default_grid(Algorithm::logreg);
  const auto a = run_grid(g, s.train, s.dev, &s.eval);
  const auto b = run_grid(g, s.train, s.dev, &unlabeled);
  CHECK(a.chosen == b.chosen);
  CHECK(a.eval_eer.has_value());
  CHECK_FALSE(b.eval_eer.has_value());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].dev_f1 == b.cells[i].dev_f1);
    CHECK(a.cells[i].dev_eer == b.cells[i].dev_eer);
  }
  CHECK(a.winner->score_all(unlabeled) == b.winner->score_all(unlabeled));
}

TEST_CASE("chosen cell is reproducible and independent of --jobs") {
  const auto s = make_splits(5, 2.0, 5);
  const auto g = default_grid(Algorithm::logreg);
  const auto one = run_grid(g, s.train, s.dev, &s.eval, {1});
  const auto eight = run_grid(g, s.train, s.dev, &s.eval, {8});
  CHECK(one.chosen == eight.chosen);
  CHECK(to_json(one).dump() == to_json(eight).dump());
  CHECK(emit_report(one, ReportFormat::cells_csv) == emit_report(eight, ReportFormat::cells_csv));
}

TEST_CASE("invalid inputs") {
  const auto s = make_splits(3, 2.0, 6);
  auto unlabeled_dev = s.dev;
  unlabeled_dev.items[0].label = Label::unknown;
  CHECK_THROWS_AS(run_grid(default_grid(Algorithm::logreg), s.train, unlabeled_dev, nullptr), UsageError);
  auto overlap = s.dev;
  overlap.items[0].utt_id = s.train.items[0].utt_id;
  CHECK_THROWS_AS(run_grid(default_grid(Algorithm::logreg), s.train, overlap, nullptr), UsageError);
  CHECK_THROWS_AS(run_grid(grid(Algorithm::logreg, {}), s.train, s.dev, nullptr), UsageError);
}

TEST_CASE("failed cells are recorded and skipped") {
  const auto s = make_splits(3, 2.0, 7);
  // k larger than the training set cannot be fitted.
  const auto r = run_grid(grid(Algorithm::knn, {{{"k", "1000"}}, {{"k", "3"}}}), s.train, s.dev, nullptr);
  CHECK_FALSE(r.cells[0].completed);
  CHECK(r.cells[0].status.starts_with("failed"));
  CHECK(r.chosen == 1);
  CHECK_THROWS_AS(run_grid(grid(Algorithm::knn, {{{"k", "1000"}}}), s.train, s.dev, nullptr), RunError);
}

TEST_CASE("sweep shape and planted signal") {
  std::map<int, LayerSplits> data;
  auto signal = make_splits(4, 6.0, 8, 3);
  auto noise = make_splits(4, 0.0, 9, 7);
  data.emplace(3, LayerSplits{signal.train, signal.dev, signal.eval});
  data.emplace(7, LayerSplits{noise.train, noise.dev, noise.eval});
  const auto r = run_sweep({default_grid(Algorithm::logreg)}, {3, 7, 11}, data);
  REQUIRE(r.entries.size() == 1);
  REQUIRE(r.entries[0].size() == 3);
  CHECK(r.completed_count() == 2);
  CHECK_FALSE(r.entries[0][2].result.has_value());
  CHECK(r.warnings.size() == 1);
  const auto best = r.best();
  REQUIRE(best.has_value());
  CHECK(best->second == 3);
}

TEST_CASE("reports") {
  const auto s = make_splits(768, 4.0, 10);
  const auto r = run_grid(grid(Algorithm::logreg, {{{"C", "0.1"}}}), s.train, s.dev, &s.eval);
  const auto csv = emit_report(r, ReportFormat::csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.starts_with("algorithm,layer,hyperparameters,"));
  const auto md = emit_report(r, ReportFormat::markdown, {false, "abc123"});
  CHECK(md.find("| 769 |") != std::string::npos);
  CHECK(md.find("abc123") != std::string::npos);
  CHECK(emit_report(r, ReportFormat::markdown) == emit_report(r, ReportFormat::markdown));
  CHECK_THROWS_AS(parse_report_format("pdf"), UsageError);

  const auto back = grid_result_from_json(to_json(r));
  CHECK(emit_report(back, ReportFormat::cells_csv) == emit_report(r, ReportFormat::cells_csv));
}

TEST_CASE("pipeline round trip keeps the standardizer") {
  const auto s = make_splits(4, 2.0, 11);
  auto g = default_grid(Algorithm::svm_rbf);
  g.standardize = true;
  const auto r = run_grid(g, s.train, s.dev, &s.eval);
  REQUIRE(r.winner->standardizer.has_value());
  std::stringstream buf;
  save_pipeline(*r.winner, buf);
  const auto back = load_pipeline(buf);
  CHECK(back.standardizer.has_value());
  CHECK(back.score_all(s.eval) == r.winner->score_all(s.eval));
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 8, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::ranges::all_of(hits, [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 4, [](std::size_t i) {
                    if (i == 5) throw RunError("boom");
                  }),
                  RunError);
}
