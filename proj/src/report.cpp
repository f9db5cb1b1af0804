#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "greenspoof/selection.hpp"

namespace greenspoof {

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "cells_csv") return ReportFormat::cells_csv;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  if (name == "boxplot_by_algorithm") return ReportFormat::boxplot_by_algorithm;
  if (name == "boxplot_by_layer") return ReportFormat::boxplot_by_layer;
  throw UsageError(fmt::format("unknown report format '{}'", name));
}

namespace {

constexpr std::string_view kCsvHeader =
    "algorithm,layer,hyperparameters,dev_f1,dev_eer_pct,eval_f1,eval_eer_pct,param_count,train_seconds,status\n";

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string pct(double fraction) { return fmt::format("{:.4f}", 100.0 * fraction); }
std::string opt_pct(const std::optional<double>& v) { return v ? pct(*v) : "NA"; }
std::string opt_f1(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "NA"; }

void append_cell_row(std::string& out, const GridResult& r, std::size_t c, const ReportOptions& opt) {
  const auto& cell = r.cells[c];
  const bool chosen = c == r.chosen;
  out += fmt::format("{},{},{},", to_string(r.algorithm), r.layer, csv_field(canonical_string(cell.hyperparameters)));
  if (cell.completed) {
    out += fmt::format("{:.6f},{},", cell.dev_f1, pct(cell.dev_eer));
  } else {
    out += "NA,NA,";
  }
  out += chosen ? fmt::format("{},{},", opt_f1(r.eval_f1), opt_pct(r.eval_eer)) : "NA,NA,";
  out += cell.completed ? fmt::format("{},", cell.param_count) : "NA,";
  out += opt.include_timings ? fmt::format("{:.3f},", cell.train_seconds) : "NA,";
  out += csv_field(cell.status);
  out += '\n';
}

std::string param_convention(const GridResult& r) {
  switch (r.algorithm) {
    case Algorithm::knn: return fmt::format("0 trainable; stores {} training vectors", r.train_size);
    case Algorithm::logreg: return "dim + 1";
    case Algorithm::svm_rbf: return "support vectors + bias";
    case Algorithm::gaussian_nb: return "2 x 2 x dim + 2";
    case Algorithm::decision_tree: return "2 x internal nodes + leaves";
    case Algorithm::mlp: {
      auto it = r.chosen_cell().hyperparameters.find("outputs");
      const std::string outputs = it == r.chosen_cell().hyperparameters.end() ? "1" : it->second;
      return fmt::format("dim*h + h + h*o + o with o = {} ({})", outputs,
                         outputs == "2" ? "softmax pair" : "single sigmoid");
    }
  }
  return "";
}

std::string system_name(const GridResult& r) { return fmt::format("layer {} + {}", r.layer, to_string(r.algorithm)); }

std::string summary_row(const GridResult& r) {
  return fmt::format("| {} | {} | No | frozen SSL layer {} (pooled) | {} |\n", system_name(r),
                     r.chosen_cell().param_count, r.layer, opt_pct(r.eval_eer));
}

constexpr std::string_view kSummaryHeader =
    "| System | #params | GPU | Front-end | EER (%) |\n|---|---|---|---|---|\n";

std::string footer(const ReportOptions& opt) {
  std::string out =
      "\nNotes: EER and F1 use bonafide as the positive class; a score >= threshold is classified bonafide. "
      "#params counts trainable downstream parameters only.\n";
  if (!opt.manifest_digest.empty()) out += fmt::format("\nManifest digest: `{}`\n", opt.manifest_digest);
  return out;
}

std::string grid_markdown(const GridResult& r, const ReportOptions& opt) {
  std::string out = fmt::format("# Grid search: {} on layer {}\n\n", to_string(r.algorithm), r.layer);
  out += kSummaryHeader;
  out += summary_row(r);
  out += fmt::format("\nChosen cell: `{}` (dev F1 {:.6f}, dev EER {}%), eval F1 {}.\n",
                     canonical_string(r.chosen_cell().hyperparameters), r.chosen_cell().dev_f1,
                     pct(r.chosen_cell().dev_eer), opt_f1(r.eval_f1));
  out += fmt::format("F1 threshold: {}. Standardized features: {}. Parameter convention: {}.\n\n",
                     r.f1_threshold, r.standardize ? "yes" : "no", param_convention(r));
  out += "| Hyperparameters | dev F1 | dev EER (%) | #params | status |\n|---|---|---|---|---|\n";
  for (const auto& cell : r.cells) {
    if (cell.completed) {
      out += fmt::format("| `{}` | {:.6f} | {} | {} | {} |\n", canonical_string(cell.hyperparameters), cell.dev_f1,
                         pct(cell.dev_eer), cell.param_count, cell.status);
    } else {
      out += fmt::format("| `{}` | NA | NA | NA | {} |\n", canonical_string(cell.hyperparameters), cell.status);
    }
  }
  return out + footer(opt);
}

std::string sweep_markdown(const SweepResult& s, const ReportOptions& opt) {
  std::string out = "# Layer sweep\n\n";
  out += "Best layer per algorithm:\n\n";
  out += kSummaryHeader;
  for (std::size_t a = 0; a < s.algorithms.size(); ++a) {
    const GridResult* best = nullptr;
    for (const auto& e : s.entries[a]) {
      if (!e.result) continue;
      const double v = e.result->eval_eer.value_or(e.result->chosen_cell().dev_eer);
      if (!best || v < best->eval_eer.value_or(best->chosen_cell().dev_eer)) best = &*e.result;
    }
    if (best) out += summary_row(*best);
  }
  if (auto b = s.best()) {
    out += fmt::format("\nLowest EER: {} on layer {}.\n", to_string(b->first), b->second);
  }

  out += "\nEval EER (%) by algorithm and layer:\n\n| Algorithm |";
  for (int l : s.layers) out += fmt::format(" L{} |", l);
  out += "\n|---|";
  for (std::size_t l = 0; l < s.layers.size(); ++l) out += "---|";
  out += '\n';
  for (std::size_t a = 0; a < s.algorithms.size(); ++a) {
    out += fmt::format("| {} |", to_string(s.algorithms[a]));
    for (const auto& e : s.entries[a]) out += e.result ? fmt::format(" {} |", opt_pct(e.result->eval_eer)) : " absent |";
    out += '\n';
  }

  out += "\nSelected cells:\n\n| Algorithm | Layer | Hyperparameters | F1 threshold | Standardized | #params convention |\n"
         "|---|---|---|---|---|---|\n";
  for (std::size_t a = 0; a < s.algorithms.size(); ++a) {
    for (const auto& e : s.entries[a]) {
      if (!e.result) continue;
      const auto& r = *e.result;
      out += fmt::format("| {} | {} | `{}` | {} | {} | {} |\n", to_string(r.algorithm), r.layer,
                         canonical_string(r.chosen_cell().hyperparameters), r.f1_threshold,
                         r.standardize ? "yes" : "no", param_convention(r));
    }
  }
  if (!s.warnings.empty()) {
    out += "\nWarnings:\n\n";
    for (const auto& w : s.warnings) out += fmt::format("- {}\n", w);
  }
  return out + footer(opt);
}

std::string boxplot(const SweepResult& s, bool by_algorithm) {
  std::string out = "group,member,eval_eer_pct,eval_f1\n";
  auto row = [&](std::size_t a, std::size_t l) {
    const auto& e = s.entries[a][l];
    const std::string alg(to_string(s.algorithms[a]));
    const std::string layer = std::to_string(s.layers[l]);
    const std::string eer = e.result ? opt_pct(e.result->eval_eer) : "NA";
    const std::string f1 = e.result ? opt_f1(e.result->eval_f1) : "NA";
    out += by_algorithm ? fmt::format("{},{},{},{}\n", alg, layer, eer, f1)
                        : fmt::format("{},{},{},{}\n", layer, alg, eer, f1);
  };
  if (by_algorithm) {
    for (std::size_t a = 0; a < s.algorithms.size(); ++a)
      for (std::size_t l = 0; l < s.layers.size(); ++l) row(a, l);
  } else {
    for (std::size_t l = 0; l < s.layers.size(); ++l)
      for (std::size_t a = 0; a < s.algorithms.size(); ++a) row(a, l);
  }
  return out;
}

}  // namespace

std::string emit_report(const GridResult& r, ReportFormat format, const ReportOptions& opt) {
  switch (format) {
    case ReportFormat::csv:
    case ReportFormat::cells_csv: {
      std::string out(kCsvHeader);
      for (std::size_t c = 0; c < r.cells.size(); ++c) append_cell_row(out, r, c, opt);
      return out;
    }
    case ReportFormat::markdown: return grid_markdown(r, opt);
    case ReportFormat::boxplot_by_algorithm:
    case ReportFormat::boxplot_by_layer: throw UsageError("box-plot reports need a sweep result");
  }
  throw UsageError("unknown report format");
}

std::string emit_report(const SweepResult& s, ReportFormat format, const ReportOptions& opt) {
  switch (format) {
    case ReportFormat::csv:
    case ReportFormat::cells_csv: {
      std::string out(kCsvHeader);
      for (std::size_t a = 0; a < s.algorithms.size(); ++a) {
        for (const auto& e : s.entries[a]) {
          if (!e.result) continue;
          if (format == ReportFormat::csv) {
            append_cell_row(out, *e.result, e.result->chosen, opt);
          } else {
            for (std::size_t c = 0; c < e.result->cells.size(); ++c) append_cell_row(out, *e.result, c, opt);
          }
        }
      }
      return out;
    }
    case ReportFormat::markdown: return sweep_markdown(s, opt);
    case ReportFormat::boxplot_by_algorithm: return boxplot(s, true);
    case ReportFormat::boxplot_by_layer: return boxplot(s, false);
  }
  throw UsageError("unknown report format");
}

namespace {
constexpr std::string_view kTimingsHeader = "algorithm,layer,hyperparameters,train_seconds,peak_rss_kb\n";

std::string timing_rows(const GridResult& r) {
  std::string out;
  for (const auto& cell : r.cells) {
    out += fmt::format("{},{},{},{:.6f},{}\n", to_string(r.algorithm), r.layer,
                       csv_field(canonical_string(cell.hyperparameters)), cell.train_seconds, cell.peak_rss_kb);
  }
  return out;
}

}  // namespace

std::string timings_csv(const GridResult& r) { return std::string(kTimingsHeader) + timing_rows(r); }

std::string timings_csv(const SweepResult& s) {
  std::string out(kTimingsHeader);
  for (const auto& row : s.entries) {
    for (const auto& e : row) {
      if (e.result) out += timing_rows(*e.result);
    }
  }
  return out;
}

std::string score_csv(const LayerDataset<PooledVector>& data, const std::vector<double>& scores) {
  if (scores.size() != data.size()) throw UsageError("score_csv: score count differs from dataset size");
  std::string out = "utt_id,score,label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += fmt::format("{},{:.17g},{}\n", csv_field(data.items[i].utt_id), scores[i], to_string(data.items[i].label));
  }
  return out;
}

std::string pca_scatter_csv(const LayerDataset<PooledVector>& data) {
  if (data.size() < 2) throw UsageError("pca: need at least 2 vectors");
  const Samples s = to_samples(data);
  const Eigen::RowVectorXd mean = s.x.colwise().mean();
  const Eigen::MatrixXd centered = s.x.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(s.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const auto d = cov.rows();
  Eigen::MatrixXd basis(d, 2);
  for (int k = 0; k < 2; ++k) {
    // eigenvalues ascending; flip so the largest-magnitude loading is positive
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    if (d > k) v = eig.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    if (v.size() > 0) v.cwiseAbs().maxCoeff(&arg);
    if (v.size() > 0 && v[arg] < 0) v = -v;
    basis.col(k) = v;
  }
  const Eigen::MatrixXd proj = centered * basis;
  std::string out = "utt_id,label,pc1,pc2\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out += fmt::format("{},{},{:.9g},{:.9g}\n", csv_field(data.items[i].utt_id), to_string(data.items[i].label),
                       proj(r, 0), proj(r, 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
std::optional<double> opt_from(const nlohmann::json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

}  // namespace

nlohmann::json to_json(const GridResult& r, bool include_timings) {
  nlohmann::json j;
  j["algorithm"] = to_string(r.algorithm);
  j["layer"] = r.layer;
  j["standardize"] = r.standardize;
  j["f1_threshold"] = r.f1_threshold;
  j["train_size"] = r.train_size;
  j["chosen"] = r.chosen;
  j["eval_eer"] = opt_json(r.eval_eer);
  j["eval_f1"] = opt_json(r.eval_f1);
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"hyperparameters", canonical_string(c.hyperparameters)},
                     {"completed", c.completed},
                     {"status", c.status},
                     {"dev_f1", c.dev_f1},
                     {"dev_eer", c.dev_eer},
                     {"param_count", c.param_count},
                     {"train_seconds", include_timings ? c.train_seconds : 0.0},
                     {"peak_rss_kb", include_timings ? c.peak_rss_kb : 0L}});
  }
  return j;
}

GridResult grid_result_from_json(const nlohmann::json& j) {
  try {
    GridResult r;
    r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    r.layer = j.at("layer").get<int>();
    r.standardize = j.at("standardize").get<bool>();
    r.f1_threshold = j.at("f1_threshold").get<double>();
    r.train_size = j.at("train_size").get<std::size_t>();
    r.chosen = j.at("chosen").get<std::size_t>();
    r.eval_eer = opt_from(j.at("eval_eer"));
    r.eval_f1 = opt_from(j.at("eval_f1"));
    for (const auto& c : j.at("cells")) {
      CellRecord cell;
      cell.hyperparameters = parse_hyperparameters(c.at("hyperparameters").get<std::string>());
      cell.completed = c.at("completed").get<bool>();
      cell.status = c.at("status").get<std::string>();
      cell.dev_f1 = c.at("dev_f1").get<double>();
      cell.dev_eer = c.at("dev_eer").get<double>();
      cell.param_count = c.at("param_count").get<std::int64_t>();
      cell.train_seconds = c.at("train_seconds").get<double>();
      cell.peak_rss_kb = c.at("peak_rss_kb").get<long>();
      r.cells.push_back(std::move(cell));
    }
    if (r.chosen >= r.cells.size()) throw FormatError("grid result: chosen index out of range");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("grid result JSON: {}", e.what()));
  }
}

nlohmann::json to_json(const SweepResult& s, bool include_timings) {
  nlohmann::json j;
  auto& algs = j["algorithms"] = nlohmann::json::array();
  for (auto a : s.algorithms) algs.push_back(to_string(a));
  j["layers"] = s.layers;
  j["warnings"] = s.warnings;
  auto& entries = j["entries"] = nlohmann::json::array();
  for (const auto& row : s.entries) {
    auto jr = nlohmann::json::array();
    for (const auto& e : row) jr.push_back(e.result ? to_json(*e.result, include_timings) : nlohmann::json(nullptr));
    entries.push_back(std::move(jr));
  }
  return j;
}

SweepResult sweep_result_from_json(const nlohmann::json& j) {
  try {
    SweepResult s;
    for (const auto& a : j.at("algorithms")) s.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    s.layers = j.at("layers").get<std::vector<int>>();
    s.warnings = j.at("warnings").get<std::vector<std::string>>();
    const auto& entries = j.at("entries");
    if (entries.size() != s.algorithms.size()) throw FormatError("sweep result: entry rows != algorithms");
    for (const auto& row : entries) {
      if (row.size() != s.layers.size()) throw FormatError("sweep result: entry columns != layers");
      std::vector<SweepEntry> out;
      for (std::size_t l = 0; l < row.size(); ++l) {
        SweepEntry e;
        e.layer = s.layers[l];
        if (!row[l].is_null()) e.result = grid_result_from_json(row[l]);
        out.push_back(std::move(e));
      }
      s.entries.push_back(std::move(out));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("sweep result JSON: {}", e.what()));
  }
}

}  // namespace greenspoof
