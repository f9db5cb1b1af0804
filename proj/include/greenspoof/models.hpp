#pragma once

// Concrete fitted models. Most callers only need classifiers.hpp; these are
// exposed for inspection (support vectors, tree shape, gradients).

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "greenspoof/classifiers.hpp"

namespace greenspoof {

/// +1 for bonafide, -1 for spoof.
inline double signed_label(Label l) { return l == Label::bonafide ? 1.0 : -1.0; }

// ---------------------------------------------------------------------------
// k-nearest neighbours

class KnnModel final : public Model {
 public:
  KnnModel(RowMatrix x, std::vector<std::uint8_t> is_bona, int k);

  Algorithm algorithm() const override { return Algorithm::knn; }
  std::size_t dim() const override { return static_cast<std::size_t>(x_.cols()); }
  /// Fraction of the k nearest (Euclidean) training points that are bonafide;
  /// distance ties go to the lower training index.
  double score(std::span<const double> x) const override;
  std::int64_t param_count() const override { return 0; }
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<KnnModel> load(BinaryReader& in);

  int k() const { return k_; }
  std::size_t stored_points() const { return static_cast<std::size_t>(x_.rows()); }

 private:
  RowMatrix x_;
  std::vector<std::uint8_t> is_bona_;
  int k_;
};

// ---------------------------------------------------------------------------
// L2-regularised logistic regression

struct LogRegOptions {
  double c = 1.0;  // penalty weight is 1/C against the example-summed loss
  double tol = 1e-6;
  int max_iter = 10000;
};

struct LogRegFitInfo {
  int iterations = 0;
  double gradient_norm = 0.0;
  double objective = 0.0;
  FitStatus status = FitStatus::converged;
};

/// J(w, b) = sum_i log(1 + exp(-y_i (w.x_i + b))) + ||w||^2 / (2C), y in {-1,+1}.
/// The bias is not penalised.
class LogRegObjective {
 public:
  LogRegObjective(const Samples& data, double c);
  /// `theta` = [w; b]. Returns J and writes the gradient into `grad`.
  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const;
  double value(const Eigen::VectorXd& theta) const;
  Eigen::Index size() const { return x_.cols() + 1; }

 private:
  const RowMatrix& x_;
  Eigen::VectorXd y_;
  double inv_c_;
};

class LogRegModel final : public Model {
 public:
  LogRegModel(Eigen::VectorXd weights, double bias) : w_(std::move(weights)), b_(bias) {}

  static std::pair<std::unique_ptr<LogRegModel>, LogRegFitInfo> fit(const Samples& data, const LogRegOptions& opt);

  Algorithm algorithm() const override { return Algorithm::logreg; }
  std::size_t dim() const override { return static_cast<std::size_t>(w_.size()); }
  /// Sigmoid probability of bonafide.
  double score(std::span<const double> x) const override;
  std::int64_t param_count() const override { return w_.size() + 1; }
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<LogRegModel> load(BinaryReader& in);

  const Eigen::VectorXd& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  Eigen::VectorXd w_;
  double b_;
};

// ---------------------------------------------------------------------------
// RBF-kernel SVM trained with SMO

struct SmoOptions {
  double c = 1.0;
  double gamma = 0.0;  // must be set (> 0) by the caller
  double tol = 1e-3;
  std::size_t max_iter = 10'000'000;
  std::size_t cache_bytes = std::size_t{256} << 20;
  bool record_dual_trace = false;
};

struct SmoFitInfo {
  std::size_t iterations = 0;
  double final_gap = 0.0;  // max KKT violation m(a) - M(a) at exit
  std::vector<double> alpha;
  std::vector<double> dual_trace;  // dual objective after each iteration
  FitStatus status = FitStatus::converged;
};

/// gamma = 1 / (dim * mean per-feature variance), the "scale" heuristic.
double scale_gamma(const Samples& data);

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

class SvmModel final : public Model {
 public:
  SvmModel(RowMatrix support, Eigen::VectorXd coef, double bias, double gamma);

  static std::pair<std::unique_ptr<SvmModel>, SmoFitInfo> fit(const Samples& data, const SmoOptions& opt);

  Algorithm algorithm() const override { return Algorithm::svm_rbf; }
  std::size_t dim() const override { return static_cast<std::size_t>(sv_.cols()); }
  /// sum_i alpha_i y_i K(x_i, x) + b.
  double score(std::span<const double> x) const override;
  std::int64_t param_count() const override { return sv_.rows() + 1; }
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<SvmModel> load(BinaryReader& in);

  const RowMatrix& support_vectors() const { return sv_; }
  /// alpha_i * y_i per support vector.
  const Eigen::VectorXd& dual_coef() const { return coef_; }
  double bias() const { return b_; }
  double gamma() const { return gamma_; }

 private:
  RowMatrix sv_;
  Eigen::VectorXd coef_;
  double b_;
  double gamma_;
};

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

class GaussianNbModel final : public Model {
 public:
  struct ClassStats {
    std::vector<double> mean;
    std::vector<double> var;  // smoothing already added
    double log_prior = 0.0;
  };

  GaussianNbModel(ClassStats bona, ClassStats spoof, double epsilon);
  static std::unique_ptr<GaussianNbModel> fit(const Samples& data, double var_smoothing);

  Algorithm algorithm() const override { return Algorithm::gaussian_nb; }
  std::size_t dim() const override { return bona_.mean.size(); }
  /// log P(x|bona) + log P(bona) - log P(x|spoof) - log P(spoof).
  double score(std::span<const double> x) const override;
  std::int64_t param_count() const override { return 2 * 2 * static_cast<std::int64_t>(dim()) + 2; }
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<GaussianNbModel> load(BinaryReader& in);

  const ClassStats& bonafide() const { return bona_; }
  const ClassStats& spoof() const { return spoof_; }
  double epsilon() const { return epsilon_; }

 private:
  ClassStats bona_;
  ClassStats spoof_;
  double epsilon_;
};

// ---------------------------------------------------------------------------
// CART decision tree

enum class SplitCriterion : std::uint8_t { gini = 0, entropy = 1 };

class DecisionTreeModel final : public Model {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 for leaves
    double threshold = 0.0;     // x[feature] <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t bona = 0;
    std::uint32_t total = 0;
  };

  DecisionTreeModel(std::vector<Node> nodes, std::size_t dim);
  static std::unique_ptr<DecisionTreeModel> fit(const Samples& data, SplitCriterion criterion, int max_depth);

  Algorithm algorithm() const override { return Algorithm::decision_tree; }
  std::size_t dim() const override { return dim_; }
  /// Bonafide fraction of the reached leaf.
  double score(std::span<const double> x) const override;
  std::int64_t param_count() const override;
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<DecisionTreeModel> load(BinaryReader& in);

  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;
  std::size_t leaf_count() const;

 private:
  std::vector<Node> nodes_;
  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// One-hidden-layer perceptron

enum class LearningRateSchedule : std::uint8_t { constant = 0, invscaling = 1 };

struct MlpOptions {
  int hidden = 100;
  int outputs = 1;  // 1: sigmoid unit, 2: softmax pair
  int batch_size = 32;
  LearningRateSchedule schedule = LearningRateSchedule::constant;
  double lr0 = 0.001;
  double alpha = 1e-4;  // L2 factor
  int max_epochs = 200;
  int patience = 10;
  double plateau_tol = 1e-4;
  std::uint64_t seed = kDefaultSeed;
};

struct MlpFitInfo {
  int epochs = 0;
  double best_loss = 0.0;
  FitStatus status = FitStatus::converged;
};

/// Weights laid out as W1 (hidden x dim, row-major), b1, W2 (outputs x hidden,
/// row-major), b2 in one flat vector.
class MlpNetwork {
 public:
  MlpNetwork(std::size_t dim, int hidden, int outputs);

  std::size_t dim() const { return dim_; }
  int hidden() const { return hidden_; }
  int outputs() const { return outputs_; }
  Eigen::Index param_size() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  void init_glorot(std::mt19937_64& rng);

  /// Bonafide probability for one input.
  double predict(std::span<const double> x) const;

  /// Batch objective: mean cross-entropy + alpha/(2n) * ||W||^2 (biases not
  /// penalised). Gradient is written into `grad` when non-null.
  double loss(const RowMatrix& x, std::span<const double> targets, double alpha, Eigen::VectorXd* grad) const;

 private:
  std::size_t dim_;
  int hidden_;
  int outputs_;
  Eigen::VectorXd params_;
};

class MlpModel final : public Model {
 public:
  explicit MlpModel(MlpNetwork net) : net_(std::move(net)) {}

  static std::pair<std::unique_ptr<MlpModel>, MlpFitInfo> fit(const Samples& train, const Samples* dev,
                                                              const MlpOptions& opt);

  Algorithm algorithm() const override { return Algorithm::mlp; }
  std::size_t dim() const override { return net_.dim(); }
  double score(std::span<const double> x) const override { return net_.predict(x); }
  std::int64_t param_count() const override { return net_.param_size(); }
  void save(BinaryWriter& out) const override;
  static std::unique_ptr<MlpModel> load(BinaryReader& in);

  const MlpNetwork& network() const { return net_; }

 private:
  MlpNetwork net_;
};

/// dim*h + h + h*outputs + outputs.
constexpr std::int64_t mlp_param_count(std::int64_t dim, std::int64_t hidden, std::int64_t outputs) {
  return dim * hidden + hidden + hidden * outputs + outputs;
}

}  // namespace greenspoof
