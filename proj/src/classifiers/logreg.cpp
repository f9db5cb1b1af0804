#include <cmath>

#include "greenspoof/models.hpp"
#include "greenspoof/serialize.hpp"

namespace greenspoof {

namespace {

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

LogRegObjective::LogRegObjective(const Samples& data, double c) : x_(data.x), y_(data.size()), inv_c_(1.0 / c) {
  for (std::size_t i = 0; i < data.size(); ++i) y_[static_cast<Eigen::Index>(i)] = signed_label(data.y[i]);
}

double LogRegObjective::value(const Eigen::VectorXd& theta) const {
  const auto d = x_.cols();
  const Eigen::VectorXd margin = ((x_ * theta.head(d)).array() + theta[d]).matrix().cwiseProduct(y_);
  double j = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) j += softplus(-margin[i]);
  return j + 0.5 * inv_c_ * theta.head(d).squaredNorm();
}

double LogRegObjective::evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
  const auto d = x_.cols();
  const Eigen::VectorXd margin = ((x_ * theta.head(d)).array() + theta[d]).matrix().cwiseProduct(y_);
  double j = 0.0;
  // dJ/dmargin_i = -sigmoid(-margin_i); chain through margin_i = y_i (w.x_i + b)
  Eigen::VectorXd r(margin.size());
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    j += softplus(-margin[i]);
    r[i] = -sigmoid(-margin[i]) * y_[i];
  }
  grad.resize(d + 1);
  grad.head(d) = x_.transpose() * r + inv_c_ * theta.head(d);
  grad[d] = r.sum();
  return j + 0.5 * inv_c_ * theta.head(d).squaredNorm();
}

std::pair<std::unique_ptr<LogRegModel>, LogRegFitInfo> LogRegModel::fit(const Samples& data,
                                                                        const LogRegOptions& opt) {
  // Full-batch gradient descent with Armijo backtracking. The trial step is
  // the Barzilai-Borwein step from the previous iterate (1 on the first).
  const LogRegObjective objective(data, opt.c);
  const auto p = objective.size();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad;
  double j = objective.evaluate(theta, grad);
  Eigen::VectorXd prev_theta, prev_grad;
  LogRegFitInfo info;
  info.status = FitStatus::iteration_cap;
  double step = 1.0 / std::max(1.0, grad.norm());

  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  Eigen::VectorXd trial, trial_grad;
  for (int it = 0; it < opt.max_iter; ++it) {
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) <= opt.tol) {
      info.status = FitStatus::converged;
      break;
    }
    if (it > 0) {
      const Eigen::VectorXd s = theta - prev_theta;
      const Eigen::VectorXd y = grad - prev_grad;
      const double sy = s.dot(y);
      if (sy > 0.0) step = s.squaredNorm() / sy;
    }
    double trial_j = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      trial = theta - step * grad;
      trial_j = objective.evaluate(trial, trial_grad);
      if (trial_j <= j - kArmijo * step * gnorm2) break;
      step *= kShrink;
    }
    if (!(trial_j <= j)) break;  // no descent possible at machine precision
    prev_theta = std::move(theta);
    prev_grad = std::move(grad);
    theta = trial;
    grad = trial_grad;
    j = trial_j;
    info.iterations = it + 1;
  }
  info.gradient_norm = grad.norm();
  if (info.gradient_norm <= opt.tol) info.status = FitStatus::converged;
  info.objective = j;
  const auto d = p - 1;
  return {std::make_unique<LogRegModel>(theta.head(d), theta[d]), info};
}

double LogRegModel::score(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return sigmoid(w_.dot(v) + b_);
}

void LogRegModel::save(BinaryWriter& out) const {
  out.vector(w_);
  out.f64(b_);
}

std::unique_ptr<LogRegModel> LogRegModel::load(BinaryReader& in) {
  auto w = in.vector();
  const double b = in.f64();
  return std::make_unique<LogRegModel>(std::move(w), b);
}

}  // namespace greenspoof
