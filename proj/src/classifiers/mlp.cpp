#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "greenspoof/models.hpp"
#include "greenspoof/serialize.hpp"

namespace greenspoof {

namespace {

using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

MlpNetwork::MlpNetwork(std::size_t dim, int hidden, int outputs)
    : dim_(dim), hidden_(hidden), outputs_(outputs),
      params_(Eigen::VectorXd::Zero(mlp_param_count(static_cast<std::int64_t>(dim), hidden, outputs))) {
  if (dim == 0 || hidden < 1 || (outputs != 1 && outputs != 2)) throw UsageError("mlp: bad network shape");
}

void MlpNetwork::init_glorot(std::mt19937_64& rng) {
  const auto d = static_cast<Eigen::Index>(dim_);
  const Eigen::Index h = hidden_;
  const Eigen::Index o = outputs_;
  auto fill = [&](Eigen::Index offset, Eigen::Index count, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index k = 0; k < count; ++k) params_[offset + k] = u(rng);
  };
  // weights and biases of each layer share the layer's bound
  fill(0, h * d + h, static_cast<double>(d), static_cast<double>(h));
  fill(h * d + h, o * h + o, static_cast<double>(h), static_cast<double>(o));
}

double MlpNetwork::predict(std::span<const double> x) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  const Eigen::Index h = hidden_;
  const ConstMatMap w1(params_.data(), h, d);
  const Eigen::Map<const Eigen::VectorXd> b1(params_.data() + h * d, h);
  const ConstMatMap w2(params_.data() + h * d + h, outputs_, h);
  const Eigen::Map<const Eigen::VectorXd> b2(params_.data() + h * d + h + outputs_ * h, outputs_);
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), d);
  const Eigen::VectorXd a1 = (w1 * v + b1).cwiseMax(0.0);
  const Eigen::VectorXd z2 = w2 * a1 + b2;
  if (outputs_ == 1) return sigmoid(z2[0]);
  return sigmoid(z2[1] - z2[0]);  // softmax probability of class 1
}

double MlpNetwork::loss(const RowMatrix& x, std::span<const double> targets, double alpha,
                        Eigen::VectorXd* grad) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  const Eigen::Index h = hidden_;
  const Eigen::Index o = outputs_;
  const Eigen::Index n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const ConstMatMap w1(params_.data(), h, d);
  const Eigen::Map<const Eigen::RowVectorXd> b1(params_.data() + h * d, h);
  const ConstMatMap w2(params_.data() + h * d + h, o, h);
  const Eigen::Map<const Eigen::RowVectorXd> b2(params_.data() + h * d + h + o * h, o);

  const RowMatrix z1 = (x * w1.transpose()).rowwise() + b1;
  const RowMatrix a1 = z1.cwiseMax(0.0);
  const RowMatrix z2 = (a1 * w2.transpose()).rowwise() + b2;

  // dz2 holds d(mean loss)/d z2
  RowMatrix dz2(n, o);
  double data_loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = targets[static_cast<std::size_t>(i)];
    if (o == 1) {
      data_loss += softplus(z2(i, 0)) - t * z2(i, 0);
      dz2(i, 0) = (sigmoid(z2(i, 0)) - t) * inv_n;
    } else {
      const double m = std::max(z2(i, 0), z2(i, 1));
      const double lse = m + std::log(std::exp(z2(i, 0) - m) + std::exp(z2(i, 1) - m));
      data_loss += lse - (t * z2(i, 1) + (1.0 - t) * z2(i, 0));
      const double p1 = std::exp(z2(i, 1) - lse);
      const double p0 = std::exp(z2(i, 0) - lse);
      dz2(i, 0) = (p0 - (1.0 - t)) * inv_n;
      dz2(i, 1) = (p1 - t) * inv_n;
    }
  }
  const double reg = 0.5 * alpha * inv_n * (w1.squaredNorm() + w2.squaredNorm());
  const double value = data_loss * inv_n + reg;
  if (!grad) return value;

  grad->resize(params_.size());
  MatMap gw1(grad->data(), h, d);
  Eigen::Map<Eigen::RowVectorXd> gb1(grad->data() + h * d, h);
  MatMap gw2(grad->data() + h * d + h, o, h);
  Eigen::Map<Eigen::RowVectorXd> gb2(grad->data() + h * d + h + o * h, o);

  gw2.noalias() = dz2.transpose() * a1;
  gw2 += alpha * inv_n * w2;
  gb2 = dz2.colwise().sum();
  RowMatrix dz1 = dz2 * w2;
  dz1.array() *= (z1.array() > 0.0).cast<double>();
  gw1.noalias() = dz1.transpose() * x;
  gw1 += alpha * inv_n * w1;
  gb1 = dz1.colwise().sum();
  return value;
}

std::pair<std::unique_ptr<MlpModel>, MlpFitInfo> MlpModel::fit(const Samples& train, const Samples* dev,
                                                              const MlpOptions& opt) {
  if (opt.batch_size < 1 || opt.max_epochs < 1 || !(opt.lr0 > 0.0)) throw UsageError("mlp: bad training options");
  std::mt19937_64 rng(opt.seed);
  MlpNetwork net(train.dim(), opt.hidden, opt.outputs);
  net.init_glorot(rng);

  const std::size_t n = train.size();
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = train.y[i] == Label::bonafide ? 1.0 : 0.0;
  std::vector<double> dev_targets;
  if (dev) {
    for (auto l : dev->y) dev_targets.push_back(l == Label::bonafide ? 1.0 : 0.0);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(opt.batch_size);
  RowMatrix batch;
  std::vector<double> batch_targets;
  Eigen::VectorXd grad;

  MlpFitInfo info;
  info.status = FitStatus::iteration_cap;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_params = net.params();
  int stale = 0;
  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    const double lr = opt.schedule == LearningRateSchedule::constant
                          ? opt.lr0
                          : opt.lr0 / std::sqrt(static_cast<double>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t m = std::min(bs, n - start);
      batch.resize(static_cast<Eigen::Index>(m), train.x.cols());
      batch_targets.resize(m);
      for (std::size_t k = 0; k < m; ++k) {
        batch.row(static_cast<Eigen::Index>(k)) = train.x.row(static_cast<Eigen::Index>(order[start + k]));
        batch_targets[k] = targets[order[start + k]];
      }
      epoch_loss += net.loss(batch, batch_targets, opt.alpha, &grad) * static_cast<double>(m);
      net.params() -= lr * grad;
    }
    epoch_loss /= static_cast<double>(n);
    const double monitored = dev ? net.loss(dev->x, dev_targets, 0.0, nullptr) : epoch_loss;
    info.epochs = epoch;
    if (!std::isfinite(monitored)) break;
    if (monitored < best - opt.plateau_tol) {
      stale = 0;
    } else {
      ++stale;
    }
    if (monitored < best) {
      best = monitored;
      if (dev) best_params = net.params();
    }
    if (stale >= opt.patience) {
      info.status = FitStatus::converged;
      break;
    }
  }
  if (dev) net.params() = best_params;
  info.best_loss = best;
  return {std::make_unique<MlpModel>(std::move(net)), info};
}

void MlpModel::save(BinaryWriter& out) const {
  out.u64(net_.dim());
  out.u32(static_cast<std::uint32_t>(net_.hidden()));
  out.u32(static_cast<std::uint32_t>(net_.outputs()));
  out.vector(net_.params());
}

std::unique_ptr<MlpModel> MlpModel::load(BinaryReader& in) {
  const auto dim = in.u64();
  const auto hidden = static_cast<int>(in.u32());
  const auto outputs = static_cast<int>(in.u32());
  MlpNetwork net(dim, hidden, outputs);
  auto params = in.vector();
  if (params.size() != net.param_size()) throw FormatError("mlp model: parameter count mismatch");
  net.params() = std::move(params);
  return std::make_unique<MlpModel>(std::move(net));
}

}  // namespace greenspoof
