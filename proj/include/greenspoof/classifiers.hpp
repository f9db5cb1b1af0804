#pragma once

// Six downstream classifiers behind one fit/score contract. Every score is
// oriented so that higher means more bonafide.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "greenspoof/embedding_store.hpp"
#include "greenspoof/features.hpp"

namespace greenspoof {

enum class Algorithm : std::uint8_t { knn = 0, logreg = 1, svm_rbf = 2, gaussian_nb = 3, decision_tree = 4, mlp = 5 };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::knn,         Algorithm::logreg,        Algorithm::svm_rbf,
                                               Algorithm::gaussian_nb, Algorithm::decision_tree, Algorithm::mlp};

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

/// Hyperparameter name -> value text. Ordered, so iteration is canonical.
using Hyperparameters = std::map<std::string, std::string>;

/// "k1=v1;k2=v2" in key order; "-" when empty.
std::string canonical_string(const Hyperparameters& hp);
Hyperparameters parse_hyperparameters(std::string_view canonical);

inline constexpr std::uint64_t kDefaultSeed = 1919;

struct TrainConfig {
  Algorithm algorithm = Algorithm::logreg;
  Hyperparameters hyperparameters;
  std::uint64_t seed = kDefaultSeed;
  /// Kernel cache budget for svm_rbf; not a model hyperparameter.
  std::size_t svm_cache_bytes = std::size_t{256} << 20;
};

/// Throws UsageError on names or values outside the algorithm's schema.
void validate(const TrainConfig& config);

/// Dense design matrix plus labels, rows in dataset order.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Samples {
  RowMatrix x;
  std::vector<Label> y;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())};
  }
};

Samples to_samples(const LayerDataset<PooledVector>& dataset);

enum class FitStatus : std::uint8_t { converged = 0, iteration_cap = 1 };

std::string_view to_string(FitStatus status);

class BinaryWriter;
class BinaryReader;

/// Fitted state of one algorithm. Immutable after construction.
class Model {
 public:
  virtual ~Model() = default;
  virtual Algorithm algorithm() const = 0;
  virtual std::size_t dim() const = 0;
  /// Unchecked: x.size() == dim().
  virtual double score(std::span<const double> x) const = 0;
  virtual std::int64_t param_count() const = 0;
  virtual void save(BinaryWriter& out) const = 0;
};

/// A fitted classifier with its provenance and convergence status.
class TrainedScorer {
 public:
  TrainedScorer(TrainConfig config, std::shared_ptr<const Model> model, FitStatus status, std::string warning = {});

  Algorithm algorithm() const { return config_.algorithm; }
  const TrainConfig& config() const { return config_; }
  FitStatus status() const { return status_; }
  const std::string& warning() const { return warning_; }
  const Model& model() const { return *model_; }
  std::size_t dim() const { return model_->dim(); }

  double score(std::span<const double> x) const;
  double score(const PooledVector& v) const { return score(v.values); }
  std::vector<double> score_all(const Samples& samples) const;
  std::int64_t param_count() const { return model_->param_count(); }

  /// F1 operating threshold: 0.5 for probability-like scores, 0 for margins.
  double default_threshold() const;

  /// Concrete model access for inspection, e.g. as<SvmModel>().
  template <class M>
  const M* as() const {
    return dynamic_cast<const M*>(model_.get());
  }

 private:
  TrainConfig config_;
  std::shared_ptr<const Model> model_;
  FitStatus status_;
  std::string warning_;
};

double default_threshold(Algorithm algorithm);

/// Fits `config` on `train`. `dev`, when given, drives MLP early stopping.
/// Throws UsageError for single-class or unlabeled training data.
TrainedScorer fit(const TrainConfig& config, const Samples& train, const Samples* dev = nullptr);

inline double score(const TrainedScorer& model, const PooledVector& x) { return model.score(x); }
inline std::int64_t param_count(const TrainedScorer& model) { return model.param_count(); }

void save_model(const TrainedScorer& model, std::ostream& out);
TrainedScorer load_model(std::istream& in);

}  // namespace greenspoof
