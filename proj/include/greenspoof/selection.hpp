#pragma once

// Brute-force grid search on the dev set, per-layer sweeps, and reports.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenspoof/classifiers.hpp"
#include "greenspoof/features.hpp"

namespace greenspoof {

struct GridSpec {
  Algorithm algorithm = Algorithm::logreg;
  std::vector<Hyperparameters> cells;  // enumeration order is selection order
  bool standardize = false;
  std::uint64_t seed = kDefaultSeed;
  /// F1 threshold for dev selection; the algorithm default when unset.
  std::optional<double> threshold;
  std::size_t svm_cache_bytes = std::size_t{256} << 20;

  double f1_threshold() const { return threshold.value_or(default_threshold(algorithm)); }
};

/// Cartesian product of `axes` (key -> values); the last key varies fastest,
/// keys in map order.
std::vector<Hyperparameters> cartesian_grid(const std::map<std::string, std::vector<std::string>>& axes);

/// The published search spaces: knn k={3,5,6}; logreg C={0.2,0.1,10};
/// svm_rbf C={0.2,0.1,1}; gaussian_nb var_smoothing=1e-9; decision_tree
/// criterion={gini,entropy} x max_depth={50,100,150}; mlp hidden={50,100} x
/// batch_size={32,64} x learning_rate={constant,invscaling}, alpha=1e-4.
GridSpec default_grid(Algorithm algorithm);

/// Human-readable training-cost descriptor for budget reports.
std::string downstream_cost_descriptor(Algorithm algorithm);

/// Fitted model plus the standardizer it was trained behind, if any.
struct Pipeline {
  std::optional<Standardizer> standardizer;
  TrainedScorer scorer;

  double score(const PooledVector& v) const;
  std::vector<double> score_all(const LayerDataset<PooledVector>& data) const;
};

void save_pipeline(const Pipeline& p, std::ostream& out);
Pipeline load_pipeline(std::istream& in);

struct CellRecord {
  Hyperparameters hyperparameters;
  bool completed = false;
  std::string status;  // "ok", "iteration_cap", or "failed: <reason>"
  double dev_f1 = 0.0;
  double dev_eer = 0.0;  // fraction
  std::int64_t param_count = 0;
  double train_seconds = 0.0;
  long peak_rss_kb = 0;
};

struct GridResult {
  Algorithm algorithm = Algorithm::logreg;
  int layer = 0;
  bool standardize = false;
  double f1_threshold = 0.5;
  std::size_t train_size = 0;
  std::vector<CellRecord> cells;
  std::size_t chosen = 0;
  std::optional<double> eval_eer;  // absent without a labeled eval set
  std::optional<double> eval_f1;
  std::optional<Pipeline> winner;  // not persisted in JSON

  const CellRecord& chosen_cell() const { return cells.at(chosen); }
};

struct RunOptions {
  std::size_t jobs = 1;
};

/// Fits every cell on train, scores dev, picks max dev F1 (ties: fewer
/// parameters, then earlier cell), then scores eval once with the winner.
/// `eval` may be null or unlabeled. Throws RunError if every cell fails.
GridResult run_grid(const GridSpec& spec, const LayerDataset<PooledVector>& train,
                    const LayerDataset<PooledVector>& dev, const LayerDataset<PooledVector>* eval,
                    const RunOptions& options = {});

struct LayerSplits {
  LayerDataset<PooledVector> train;
  LayerDataset<PooledVector> dev;
  LayerDataset<PooledVector> eval;
};

struct SweepEntry {
  int layer = 0;
  std::optional<GridResult> result;  // empty when the layer was unavailable
};

struct SweepResult {
  std::vector<Algorithm> algorithms;
  std::vector<int> layers;
  /// entries[a][l] for algorithms[a] and layers[l].
  std::vector<std::vector<SweepEntry>> entries;
  std::vector<std::string> warnings;

  /// Lowest eval EER (dev EER when eval is unlabeled); ties resolved by
  /// algorithm order, then layer order.
  std::optional<std::pair<Algorithm, int>> best() const;
  std::size_t completed_count() const;
};

/// One run_grid per (grid, layer). Layers absent from `data` are skipped
/// with a warning.
SweepResult run_sweep(const std::vector<GridSpec>& grids, const std::vector<int>& layers,
                      const std::map<int, LayerSplits>& data, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { csv, cells_csv, markdown, boxplot_by_algorithm, boxplot_by_layer };

ReportFormat parse_report_format(std::string_view name);

struct ReportOptions {
  bool include_timings = false;  // train_seconds is wall-clock, hence non-deterministic
  std::string manifest_digest;   // echoed in Markdown footers when non-empty
};

/// csv: one row per chosen cell. cells_csv: every cell. Box plots apply to
/// sweeps only.
std::string emit_report(const GridResult& result, ReportFormat format, const ReportOptions& options = {});
std::string emit_report(const SweepResult& result, ReportFormat format, const ReportOptions& options = {});

/// Per-cell timing and memory log (utt-independent, non-deterministic).
std::string timings_csv(const SweepResult& result);
std::string timings_csv(const GridResult& result);

/// utt_id,label,pc1,pc2 from a 2-component PCA of the pooled vectors.
std::string pca_scatter_csv(const LayerDataset<PooledVector>& data);

/// utt_id,score,label
std::string score_csv(const LayerDataset<PooledVector>& data, const std::vector<double>& scores);

/// Timing fields are zeroed unless `include_timings` is set, so the JSON is
/// reproducible by default.
nlohmann::json to_json(const GridResult& r, bool include_timings = false);
nlohmann::json to_json(const SweepResult& r, bool include_timings = false);
GridResult grid_result_from_json(const nlohmann::json& j);
SweepResult sweep_result_from_json(const nlohmann::json& j);

/// Runs fn(0..n-1) on at most `jobs` threads. The first exception is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace greenspoof
