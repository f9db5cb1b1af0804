#include "greenspoof/selection.hpp"

#include <sys/resource.h>

#include <array>
#include <atomic>
#include <chrono>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "greenspoof/metrics.hpp"
#include "greenspoof/serialize.hpp"

namespace greenspoof {

std::vector<Hyperparameters> cartesian_grid(const std::map<std::string, std::vector<std::string>>& axes) {
  std::vector<Hyperparameters> cells{Hyperparameters{}};
  for (const auto& [key, values] : axes) {
    if (values.empty()) throw UsageError(fmt::format("grid axis '{}' has no values", key));
    std::vector<Hyperparameters> next;
    next.reserve(cells.size() * values.size());
    for (const auto& cell : cells) {
      for (const auto& v : values) {
        auto c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

GridSpec default_grid(Algorithm algorithm) {
  GridSpec g;
  g.algorithm = algorithm;
  switch (algorithm) {
    case Algorithm::knn: g.cells = cartesian_grid({{"k", {"3", "5", "6"}}}); break;
    case Algorithm::logreg: g.cells = cartesian_grid({{"C", {"0.2", "0.1", "10"}}}); break;
    case Algorithm::svm_rbf: g.cells = cartesian_grid({{"C", {"0.2", "0.1", "1"}}}); break;
    case Algorithm::gaussian_nb: g.cells = cartesian_grid({{"var_smoothing", {"1e-9"}}}); break;
    case Algorithm::decision_tree:
      g.cells = cartesian_grid({{"criterion", {"gini", "entropy"}}, {"max_depth", {"50", "100", "150"}}});
      break;
    case Algorithm::mlp:
      g.cells = cartesian_grid({{"hidden", {"50", "100"}},
                                {"batch_size", {"32", "64"}},
                                {"learning_rate", {"constant", "invscaling"}},
                                {"alpha", {"0.0001"}}});
      break;
  }
  return g;
}

std::string downstream_cost_descriptor(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::knn: return "knn: no training; stores D x dim values, O(D x dim) per query";
    case Algorithm::logreg: return "logreg: full-batch gradient descent, O(iterations x D x dim)";
    case Algorithm::svm_rbf: return "svm_rbf: SMO, O(D^2 x dim) kernel evaluations + O(iterations x D)";
    case Algorithm::gaussian_nb: return "gaussian_nb: two passes, O(D x dim)";
    case Algorithm::decision_tree: return "decision_tree: greedy CART, O(depth x dim x D log D)";
    case Algorithm::mlp: return "mlp: mini-batch SGD, O(epochs x D x dim x hidden)";
  }
  return "";
}

// ---------------------------------------------------------------------------
// Pipeline

double Pipeline::score(const PooledVector& v) const {
  return standardizer ? scorer.score(transform(*standardizer, v)) : scorer.score(v);
}

std::vector<double> Pipeline::score_all(const LayerDataset<PooledVector>& data) const {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& it : data.items) out.push_back(score(it.payload));
  return out;
}

namespace {
constexpr std::array<char, 4> kPipelineMagic = {'G', 'S', 'P', 'L'};
}

void save_pipeline(const Pipeline& p, std::ostream& out) {
  out.write(kPipelineMagic.data(), kPipelineMagic.size());
  BinaryWriter w(out);
  w.u8(p.standardizer ? 1 : 0);
  if (p.standardizer) {
    w.f64s(p.standardizer->mean);
    w.f64s(p.standardizer->scale);
  }
  save_model(p.scorer, out);
}

Pipeline load_pipeline(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kPipelineMagic) throw FormatError("bad magic (not a pipeline file)");
  BinaryReader r(in);
  std::optional<Standardizer> standardizer;
  if (r.u8()) {
    Standardizer s;
    s.mean = r.f64s();
    s.scale = r.f64s();
    if (s.mean.size() != s.scale.size()) throw FormatError("pipeline: standardizer shape mismatch");
    standardizer = std::move(s);
  }
  auto scorer = load_model(in);
  if (standardizer && standardizer->dim() != scorer.dim()) {
    throw FormatError("pipeline: standardizer dim differs from model dim");
  }
  return {std::move(standardizer), std::move(scorer)};
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

namespace {

long peak_rss_kb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

void require_labeled(const LayerDataset<PooledVector>& d, std::string_view what) {
  if (d.items.empty()) throw UsageError(fmt::format("run_grid: {} set is empty", what));
  if (!d.fully_labeled()) throw UsageError(fmt::format("run_grid: {} set has unlabeled items", what));
}

void require_disjoint(const LayerDataset<PooledVector>& a, const LayerDataset<PooledVector>& b) {
  // both sorted by utt_id
  auto ia = a.items.begin();
  auto ib = b.items.begin();
  while (ia != a.items.end() && ib != b.items.end()) {
    if (ia->utt_id == ib->utt_id) {
      throw UsageError(fmt::format("run_grid: utt_id {} appears in two partitions", ia->utt_id));
    }
    (ia->utt_id < ib->utt_id ? ++ia : ++ib);
  }
}

std::vector<Label> labels_of(const LayerDataset<PooledVector>& d) {
  std::vector<Label> out;
  out.reserve(d.size());
  for (const auto& it : d.items) out.push_back(it.label);
  return out;
}

}  // namespace

GridResult run_grid(const GridSpec& spec, const LayerDataset<PooledVector>& train_in,
                    const LayerDataset<PooledVector>& dev_in, const LayerDataset<PooledVector>* eval_in,
                    const RunOptions& options) {
  if (spec.cells.empty()) throw UsageError("run_grid: empty grid");
  require_labeled(train_in, "train");
  require_labeled(dev_in, "dev");
  require_disjoint(train_in, dev_in);
  if (eval_in) {
    require_disjoint(train_in, *eval_in);
    require_disjoint(dev_in, *eval_in);
  }
  if (dev_in.layer != train_in.layer || (eval_in && !eval_in->items.empty() && eval_in->layer != train_in.layer)) {
    throw UsageError("run_grid: datasets come from different layers");
  }

  std::optional<Standardizer> standardizer;
  if (spec.standardize) standardizer = fit_standardizer(train_in);
  auto prepared = [&](const LayerDataset<PooledVector>& d) {
    return standardizer ? to_samples(transform(*standardizer, d)) : to_samples(d);
  };
  const Samples train = prepared(train_in);
  const Samples dev = prepared(dev_in);
  const auto dev_labels = labels_of(dev_in);

  GridResult result;
  result.algorithm = spec.algorithm;
  result.layer = train_in.layer;
  result.standardize = spec.standardize;
  result.f1_threshold = spec.f1_threshold();
  result.train_size = train_in.size();
  result.cells.resize(spec.cells.size());
  std::vector<std::optional<TrainedScorer>> models(spec.cells.size());

  parallel_for(spec.cells.size(), options.jobs, [&](std::size_t c) {
    auto& cell = result.cells[c];
    cell.hyperparameters = spec.cells[c];
    TrainConfig config{spec.algorithm, spec.cells[c], spec.seed, spec.svm_cache_bytes};
    try {
      const auto start = std::chrono::steady_clock::now();
      auto model = fit(config, train, &dev);
      cell.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const metrics::ScoredSet scored(model.score_all(dev), dev_labels);
      cell.dev_f1 = metrics::f1(scored, result.f1_threshold);
      cell.dev_eer = metrics::eer(scored);
      cell.param_count = model.param_count();
      cell.status = std::string(to_string(model.status()));
      cell.completed = true;
      models[c] = std::move(model);
    } catch (const std::exception& e) {
      cell.completed = false;
      cell.status = fmt::format("failed: {}", e.what());
    }
    cell.peak_rss_kb = peak_rss_kb();
  });

  std::optional<std::size_t> chosen;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const auto& cell = result.cells[c];
    if (!cell.completed) continue;
    if (!chosen) {
      chosen = c;
      continue;
    }
    const auto& best = result.cells[*chosen];
    if (cell.dev_f1 > best.dev_f1 || (cell.dev_f1 == best.dev_f1 && cell.param_count < best.param_count)) {
      chosen = c;
    }
  }
  if (!chosen) {
    throw RunError(fmt::format("run_grid: all {} cells failed for {} (first: {})", result.cells.size(),
                               to_string(spec.algorithm), result.cells.front().status));
  }
  result.chosen = *chosen;
  result.winner = Pipeline{standardizer, std::move(*models[*chosen])};

  if (eval_in && !eval_in->items.empty() && eval_in->fully_labeled()) {
    const metrics::ScoredSet scored(result.winner->score_all(*eval_in), labels_of(*eval_in));
    result.eval_eer = metrics::eer(scored);
    result.eval_f1 = metrics::f1(scored, result.f1_threshold);
  }
  return result;
}

// ---------------------------------------------------------------------------

std::optional<std::pair<Algorithm, int>> SweepResult::best() const {
  std::optional<std::pair<Algorithm, int>> out;
  double best_eer = 2.0;
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    for (const auto& e : entries[a]) {
      if (!e.result) continue;
      const double v = e.result->eval_eer.value_or(e.result->chosen_cell().dev_eer);
      if (v < best_eer) {
        best_eer = v;
        out = std::pair{algorithms[a], e.layer};
      }
    }
  }
  return out;
}

std::size_t SweepResult::completed_count() const {
  std::size_t n = 0;
  for (const auto& row : entries) {
    for (const auto& e : row) n += e.result.has_value();
  }
  return n;
}

SweepResult run_sweep(const std::vector<GridSpec>& grids, const std::vector<int>& layers,
                      const std::map<int, LayerSplits>& data, const RunOptions& options) {
  if (grids.empty() || layers.empty()) throw UsageError("run_sweep: nothing to sweep");
  std::set<int> seen;
  for (int l : layers) {
    if (!seen.insert(l).second) throw UsageError(fmt::format("run_sweep: layer {} requested twice", l));
  }
  SweepResult out;
  for (const auto& g : grids) out.algorithms.push_back(g.algorithm);
  out.layers = layers;
  out.entries.assign(grids.size(), std::vector<SweepEntry>(layers.size()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!data.contains(layers[l])) out.warnings.push_back(fmt::format("layer {}: no data, skipped", layers[l]));
  }

  std::vector<std::string> failures(grids.size() * layers.size());
  parallel_for(grids.size() * layers.size(), options.jobs, [&](std::size_t job) {
    const std::size_t a = job / layers.size();
    const std::size_t l = job % layers.size();
    auto& entry = out.entries[a][l];
    entry.layer = layers[l];
    auto it = data.find(layers[l]);
    if (it == data.end()) return;
    try {
      entry.result = run_grid(grids[a], it->second.train, it->second.dev, &it->second.eval, RunOptions{1});
    } catch (const RunError& e) {
      failures[job] = fmt::format("{} layer {}: {}", to_string(grids[a].algorithm), layers[l], e.what());
    }
  });
  for (auto& f : failures) {
    if (!f.empty()) out.warnings.push_back(std::move(f));
  }
  return out;
}

}  // namespace greenspoof
