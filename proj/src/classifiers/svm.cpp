#include <algorithm>
#include <cmath>
#include <limits>
#include <list>

#include <fmt/format.h>

#include "greenspoof/models.hpp"
#include "greenspoof/serialize.hpp"

namespace greenspoof {

double scale_gamma(const Samples& data) {
  const auto n = static_cast<double>(data.size());
  const auto d = static_cast<double>(data.dim());
  const Eigen::RowVectorXd mean = data.x.colwise().mean();
  const double mean_var = (data.x.rowwise() - mean).array().square().sum() / (n * d);
  return mean_var > 0.0 ? 1.0 / (d * mean_var) : 1.0 / d;
}

namespace {

/// Rows of the kernel matrix, either fully precomputed or held in an LRU
/// cache sized by a byte budget.
class KernelCache {
 public:
  KernelCache(const RowMatrix& x, double gamma, std::size_t budget_bytes)
      : x_(x), gamma_(gamma), n_(static_cast<std::size_t>(x.rows())), slot_of_(n_, kNone) {
    const std::size_t row_bytes = n_ * sizeof(double);
    capacity_ = std::max<std::size_t>(2, budget_bytes / std::max<std::size_t>(row_bytes, 1));
    capacity_ = std::min(capacity_, n_);
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = 1.0;  // K(x, x) = exp(0)
  }

  double diag(std::size_t i) const { return diag_[i]; }

  /// Valid until the next call to row().
  const double* row(std::size_t i) {
    if (slot_of_[i] != kNone) {
      auto& slot = slots_[slot_of_[i]];
      lru_.splice(lru_.begin(), lru_, slot.pos);
      return slot.values.data();
    }
    std::size_t s;
    if (slots_.size() < capacity_) {
      s = slots_.size();
      slots_.push_back({std::vector<double>(n_), {}, i});
    } else {
      s = lru_.back();
      lru_.pop_back();
      slot_of_[slots_[s].owner] = kNone;
      slots_[s].owner = i;
    }
    lru_.push_front(s);
    slots_[s].pos = lru_.begin();
    slot_of_[i] = s;
    auto& values = slots_[s].values;
    const auto d = static_cast<std::size_t>(x_.cols());
    const std::span<const double> xi(x_.data() + i * d, d);
    for (std::size_t j = 0; j < n_; ++j) values[j] = rbf_kernel(xi, {x_.data() + j * d, d}, gamma_);
    return values.data();
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Slot {
    std::vector<double> values;
    std::list<std::size_t>::iterator pos;
    std::size_t owner;
  };

  const RowMatrix& x_;
  double gamma_;
  std::size_t n_;
  std::size_t capacity_ = 0;
  std::vector<double> diag_;
  std::vector<std::size_t> slot_of_;
  std::vector<Slot> slots_;
  std::list<std::size_t> lru_;  // slot indices, most recent first
};

}  // namespace

// Minimises f(a) = 1/2 a'Qa - e'a, Q_ij = y_i y_j K_ij, subject to
// 0 <= a_i <= C and y'a = 0, which is the negated soft-margin dual. Working
// pairs are the maximal violating pair; the two-variable subproblem is solved
// analytically and clipped to the box.
std::pair<std::unique_ptr<SvmModel>, SmoFitInfo> SvmModel::fit(const Samples& data, const SmoOptions& opt) {
  if (!(opt.c > 0.0) || !(opt.gamma > 0.0)) throw UsageError("svm_rbf: C and gamma must be positive");
  const std::size_t n = data.size();
  const double c = opt.c;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = signed_label(data.y[i]);

  KernelCache kernel(data.x, opt.gamma, opt.cache_bytes);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Qa - e at a = 0
  constexpr double kTau = 1e-12;

  auto is_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
  auto is_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };
  auto dual_objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
    return -0.5 * f;
  };

  SmoFitInfo info;
  info.status = FitStatus::iteration_cap;
  std::size_t iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (is_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (is_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    info.final_gap = gmax - gmin;
    if (i == n || j == n || gmax - gmin < opt.tol) {
      info.status = FitStatus::converged;
      break;
    }

    // Copy row i before fetching row j: the cache may evict it.
    std::vector<double> ki(kernel.row(i), kernel.row(i) + n);
    const double* kj = kernel.row(j);
    const double qii = kernel.diag(i);
    const double qjj = kernel.diag(j);
    const double qij = y[i] * y[j] * ki[j];
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];

    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
    }
    if (opt.record_dual_trace) info.dual_trace.push_back(dual_objective());
  }
  info.iterations = iter;

  // rho: mean of y_i G_i over free vectors, else midpoint of the feasible range.
  double sum_free = 0.0;
  std::size_t n_free = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) sv.push_back(t);
  }
  RowMatrix support(static_cast<Eigen::Index>(sv.size()), data.x.cols());
  Eigen::VectorXd coef(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    support.row(static_cast<Eigen::Index>(k)) = data.x.row(static_cast<Eigen::Index>(sv[k]));
    coef[static_cast<Eigen::Index>(k)] = alpha[sv[k]] * y[sv[k]];
  }
  info.alpha = std::move(alpha);
  return {std::make_unique<SvmModel>(std::move(support), std::move(coef), -rho, opt.gamma), std::move(info)};
}

SvmModel::SvmModel(RowMatrix support, Eigen::VectorXd coef, double bias, double gamma)
    : sv_(std::move(support)), coef_(std::move(coef)), b_(bias), gamma_(gamma) {
  if (sv_.rows() != coef_.size()) throw UsageError("svm_rbf: coefficient count mismatch");
}

double SvmModel::score(std::span<const double> x) const {
  const auto d = static_cast<std::size_t>(sv_.cols());
  double f = b_;
  for (Eigen::Index k = 0; k < sv_.rows(); ++k) {
    f += coef_[k] * rbf_kernel({sv_.data() + static_cast<std::size_t>(k) * d, d}, x, gamma_);
  }
  return f;
}

void SvmModel::save(BinaryWriter& out) const {
  out.f64(gamma_);
  out.f64(b_);
  out.vector(coef_);
  out.matrix(sv_);
}

std::unique_ptr<SvmModel> SvmModel::load(BinaryReader& in) {
  const double gamma = in.f64();
  const double b = in.f64();
  auto coef = in.vector();
  auto sv = in.matrix();
  if (sv.rows() != coef.size()) throw FormatError("svm model: support/coefficient mismatch");
  return std::make_unique<SvmModel>(std::move(sv), std::move(coef), b, gamma);
}

}  // namespace greenspoof
