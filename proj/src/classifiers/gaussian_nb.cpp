#include <cmath>

#include "greenspoof/models.hpp"
#include "greenspoof/serialize.hpp"

namespace greenspoof {

GaussianNbModel::GaussianNbModel(ClassStats bona, ClassStats spoof, double epsilon)
    : bona_(std::move(bona)), spoof_(std::move(spoof)), epsilon_(epsilon) {
  if (bona_.mean.size() != spoof_.mean.size() || bona_.var.size() != bona_.mean.size() ||
      spoof_.var.size() != spoof_.mean.size()) {
    throw UsageError("gaussian_nb: inconsistent class statistics");
  }
}

std::unique_ptr<GaussianNbModel> GaussianNbModel::fit(const Samples& data, double var_smoothing) {
  const std::size_t d = data.dim();
  const auto n = data.size();

  // epsilon = var_smoothing * largest per-feature variance of the whole set
  const Eigen::RowVectorXd all_mean = data.x.colwise().mean();
  const Eigen::RowVectorXd all_var =
      (data.x.rowwise() - all_mean).array().square().colwise().sum() / static_cast<double>(n);
  const double epsilon = var_smoothing * all_var.maxCoeff();

  auto stats_for = [&](Label label) {
    ClassStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), 0.0};
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (data.y[i] != label) continue;
      ++count;
      auto row = data.row(i);
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
    }
    for (double& m : s.mean) m /= static_cast<double>(count);
    for (std::size_t i = 0; i < n; ++i) {
      if (data.y[i] != label) continue;
      auto row = data.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        const double t = row[j] - s.mean[j];
        s.var[j] += t * t;
      }
    }
    for (double& v : s.var) v = v / static_cast<double>(count) + epsilon;
    s.log_prior = std::log(static_cast<double>(count) / static_cast<double>(n));
    return s;
  };
  return std::make_unique<GaussianNbModel>(stats_for(Label::bonafide), stats_for(Label::spoof), epsilon);
}

double GaussianNbModel::score(std::span<const double> x) const {
  // The -0.5 log(2 pi) terms cancel between the classes.
  double llr = bona_.log_prior - spoof_.log_prior;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double db = x[j] - bona_.mean[j];
    const double ds = x[j] - spoof_.mean[j];
    llr += -0.5 * (std::log(bona_.var[j]) + db * db / bona_.var[j]);
    llr -= -0.5 * (std::log(spoof_.var[j]) + ds * ds / spoof_.var[j]);
  }
  return llr;
}

void GaussianNbModel::save(BinaryWriter& out) const {
  out.f64(epsilon_);
  for (const auto* s : {&bona_, &spoof_}) {
    out.f64s(s->mean);
    out.f64s(s->var);
    out.f64(s->log_prior);
  }
}

std::unique_ptr<GaussianNbModel> GaussianNbModel::load(BinaryReader& in) {
  const double eps = in.f64();
  ClassStats cls[2];
  for (auto& s : cls) {
    s.mean = in.f64s();
    s.var = in.f64s();
    s.log_prior = in.f64();
  }
  return std::make_unique<GaussianNbModel>(std::move(cls[0]), std::move(cls[1]), eps);
}

}  // namespace greenspoof
