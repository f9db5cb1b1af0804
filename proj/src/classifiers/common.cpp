#include <array>
#include <bit>
#include <charconv>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "greenspoof/classifiers.hpp"
#include "greenspoof/models.hpp"
#include "greenspoof/serialize.hpp"
#include "hyper.hpp"

namespace greenspoof {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::knn: return "knn";
    case Algorithm::logreg: return "logreg";
    case Algorithm::svm_rbf: return "svm_rbf";
    case Algorithm::gaussian_nb: return "gaussian_nb";
    case Algorithm::decision_tree: return "decision_tree";
    case Algorithm::mlp: return "mlp";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : kAllAlgorithms) {
    if (to_string(a) == name) return a;
  }
  throw UsageError(fmt::format("unknown algorithm '{}'", name));
}

std::string_view to_string(FitStatus status) {
  return status == FitStatus::converged ? "ok" : "iteration_cap";
}

std::string canonical_string(const Hyperparameters& hp) {
  if (hp.empty()) return "-";
  std::string out;
  for (const auto& [k, v] : hp) {
    if (!out.empty()) out += ';';
    out += k;
    out += '=';
    out += v;
  }
  return out;
}

Hyperparameters parse_hyperparameters(std::string_view canonical) {
  Hyperparameters hp;
  if (canonical.empty() || canonical == "-") return hp;
  std::size_t pos = 0;
  while (pos <= canonical.size()) {
    const auto end = std::min(canonical.find(';', pos), canonical.size());
    const auto item = canonical.substr(pos, end - pos);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw UsageError(fmt::format("malformed hyperparameter '{}'", item));
    }
    hp[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
    pos = end + 1;
  }
  return hp;
}

// ---------------------------------------------------------------------------
// Hyperparameter schema

namespace detail {

double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end || !std::isfinite(v)) {
    throw UsageError(fmt::format("hyperparameter {}: '{}' is not a real number", key, text));
  }
  return v;
}

long parse_int(std::string_view key, std::string_view text) {
  long v = 0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end) {
    throw UsageError(fmt::format("hyperparameter {}: '{}' is not an integer", key, text));
  }
  return v;
}

namespace {

struct ParamRule {
  std::string_view name;
  void (*check)(std::string_view key, std::string_view value);
};

void positive_real(std::string_view k, std::string_view v) {
  if (!(parse_real(k, v) > 0.0)) throw UsageError(fmt::format("hyperparameter {} must be > 0", k));
}
void non_negative_real(std::string_view k, std::string_view v) {
  if (parse_real(k, v) < 0.0) throw UsageError(fmt::format("hyperparameter {} must be >= 0", k));
}
void positive_int(std::string_view k, std::string_view v) {
  if (parse_int(k, v) < 1) throw UsageError(fmt::format("hyperparameter {} must be >= 1", k));
}
void gamma_value(std::string_view k, std::string_view v) {
  if (v != "scale") positive_real(k, v);
}
void criterion_value(std::string_view k, std::string_view v) {
  if (v != "gini" && v != "entropy") throw UsageError(fmt::format("hyperparameter {}: gini or entropy", k));
}
void depth_value(std::string_view k, std::string_view v) {
  if (v != "none") positive_int(k, v);
}
void schedule_value(std::string_view k, std::string_view v) {
  if (v != "constant" && v != "invscaling") {
    throw UsageError(fmt::format("hyperparameter {}: constant or invscaling", k));
  }
}
void outputs_value(std::string_view k, std::string_view v) {
  const auto n = parse_int(k, v);
  if (n != 1 && n != 2) throw UsageError(fmt::format("hyperparameter {} must be 1 or 2", k));
}

std::span<const ParamRule> schema(Algorithm a) {
  static constexpr ParamRule knn[] = {{"k", positive_int}};
  static constexpr ParamRule logreg[] = {{"C", positive_real}, {"tol", positive_real}, {"max_iter", positive_int}};
  static constexpr ParamRule svm[] = {{"C", positive_real}, {"gamma", gamma_value}, {"tol", positive_real}};
  static constexpr ParamRule nb[] = {{"var_smoothing", non_negative_real}};
  static constexpr ParamRule tree[] = {{"criterion", criterion_value}, {"max_depth", depth_value}};
  static constexpr ParamRule mlp[] = {{"hidden", positive_int},        {"batch_size", positive_int},
                                      {"learning_rate", schedule_value}, {"alpha", non_negative_real},
                                      {"lr0", positive_real},            {"max_epochs", positive_int},
                                      {"outputs", outputs_value}};
  switch (a) {
    case Algorithm::knn: return knn;
    case Algorithm::logreg: return logreg;
    case Algorithm::svm_rbf: return svm;
    case Algorithm::gaussian_nb: return nb;
    case Algorithm::decision_tree: return tree;
    case Algorithm::mlp: return mlp;
  }
  return {};
}

}  // namespace

std::string_view get(const Hyperparameters& hp, std::string_view key, std::string_view fallback) {
  auto it = hp.find(std::string(key));
  return it == hp.end() ? fallback : std::string_view(it->second);
}

}  // namespace detail

void validate(const TrainConfig& config) {
  const auto rules = detail::schema(config.algorithm);
  for (const auto& [key, value] : config.hyperparameters) {
    auto it = std::ranges::find(rules, std::string_view(key), &detail::ParamRule::name);
    if (it == rules.end()) {
      throw UsageError(fmt::format("{}: unknown hyperparameter '{}'", to_string(config.algorithm), key));
    }
    it->check(key, value);
  }
}

// ---------------------------------------------------------------------------

Samples to_samples(const LayerDataset<PooledVector>& dataset) {
  Samples s;
  if (dataset.items.empty()) return s;
  const auto dim = dataset.items.front().payload.values.size();
  s.x.resize(static_cast<Eigen::Index>(dataset.size()), static_cast<Eigen::Index>(dim));
  s.y.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& v = dataset.items[i].payload.values;
    if (v.size() != dim) throw FormatError(fmt::format("item {} has dim {}, expected {}", dataset.items[i].utt_id, v.size(), dim));
    std::copy(v.begin(), v.end(), s.x.row(static_cast<Eigen::Index>(i)).data());
    s.y.push_back(dataset.items[i].label);
  }
  return s;
}

double default_threshold(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::svm_rbf:
    case Algorithm::gaussian_nb: return 0.0;
    default: return 0.5;
  }
}

TrainedScorer::TrainedScorer(TrainConfig config, std::shared_ptr<const Model> model, FitStatus status,
                             std::string warning)
    : config_(std::move(config)), model_(std::move(model)), status_(status), warning_(std::move(warning)) {}

double TrainedScorer::score(std::span<const double> x) const {
  if (x.size() != model_->dim()) {
    throw UsageError(fmt::format("score: input dim {} != model dim {}", x.size(), model_->dim()));
  }
  return model_->score(x);
}

std::vector<double> TrainedScorer::score_all(const Samples& samples) const {
  if (samples.size() > 0 && samples.dim() != model_->dim()) {
    throw UsageError(fmt::format("score: input dim {} != model dim {}", samples.dim(), model_->dim()));
  }
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = model_->score(samples.row(i));
  return out;
}

double TrainedScorer::default_threshold() const { return greenspoof::default_threshold(config_.algorithm); }

TrainedScorer fit(const TrainConfig& config, const Samples& train, const Samples* dev) {
  validate(config);
  if (train.size() == 0) throw UsageError("fit: empty training set");
  std::size_t n_bona = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.y[i] == Label::unknown) throw UsageError(fmt::format("fit: training item {} is unlabeled", i));
    if (train.y[i] == Label::bonafide) ++n_bona;
  }
  if (n_bona == 0 || n_bona == train.size()) throw UsageError("fit: training set has a single class");
  if (!train.x.allFinite()) throw UsageError("fit: non-finite features");
  if (dev && dev->size() > 0 && dev->dim() != train.dim()) throw UsageError("fit: dev dim differs from train dim");

  using detail::get;
  const auto& hp = config.hyperparameters;
  switch (config.algorithm) {
    case Algorithm::knn: {
      const auto k = detail::parse_int("k", get(hp, "k", "5"));
      std::vector<std::uint8_t> bona(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) bona[i] = train.y[i] == Label::bonafide;
      return {config, std::make_shared<KnnModel>(train.x, std::move(bona), static_cast<int>(k)),
              FitStatus::converged};
    }
    case Algorithm::logreg: {
      LogRegOptions opt;
      opt.c = detail::parse_real("C", get(hp, "C", "1"));
      opt.tol = detail::parse_real("tol", get(hp, "tol", "1e-6"));
      opt.max_iter = static_cast<int>(detail::parse_int("max_iter", get(hp, "max_iter", "10000")));
      auto [model, info] = LogRegModel::fit(train, opt);
      std::string warning;
      if (info.status != FitStatus::converged) {
        warning = fmt::format("logreg stopped at iteration cap {} with gradient norm {:.3g}", opt.max_iter,
                              info.gradient_norm);
      }
      return {config, std::move(model), info.status, std::move(warning)};
    }
    case Algorithm::svm_rbf: {
      SmoOptions opt;
      opt.c = detail::parse_real("C", get(hp, "C", "1"));
      const auto gamma = get(hp, "gamma", "scale");
      opt.gamma = gamma == "scale" ? scale_gamma(train) : detail::parse_real("gamma", gamma);
      opt.tol = detail::parse_real("tol", get(hp, "tol", "1e-3"));
      opt.cache_bytes = config.svm_cache_bytes;
      auto [model, info] = SvmModel::fit(train, opt);
      std::string warning;
      if (info.status != FitStatus::converged) {
        warning = fmt::format("SMO stopped at iteration cap with KKT gap {:.3g}", info.final_gap);
      }
      return {config, std::move(model), info.status, std::move(warning)};
    }
    case Algorithm::gaussian_nb: {
      const double eps = detail::parse_real("var_smoothing", get(hp, "var_smoothing", "1e-9"));
      return {config, GaussianNbModel::fit(train, eps), FitStatus::converged};
    }
    case Algorithm::decision_tree: {
      const auto crit = get(hp, "criterion", "gini") == "gini" ? SplitCriterion::gini : SplitCriterion::entropy;
      const auto depth = get(hp, "max_depth", "none");
      const int max_depth = depth == "none" ? std::numeric_limits<int>::max()
                                            : static_cast<int>(detail::parse_int("max_depth", depth));
      return {config, DecisionTreeModel::fit(train, crit, max_depth), FitStatus::converged};
    }
    case Algorithm::mlp: {
      MlpOptions opt;
      opt.hidden = static_cast<int>(detail::parse_int("hidden", get(hp, "hidden", "100")));
      opt.outputs = static_cast<int>(detail::parse_int("outputs", get(hp, "outputs", "1")));
      opt.batch_size = static_cast<int>(detail::parse_int("batch_size", get(hp, "batch_size", "32")));
      opt.schedule = get(hp, "learning_rate", "constant") == "constant" ? LearningRateSchedule::constant
                                                                        : LearningRateSchedule::invscaling;
      opt.alpha = detail::parse_real("alpha", get(hp, "alpha", "0.0001"));
      opt.lr0 = detail::parse_real("lr0", get(hp, "lr0", "0.001"));
      opt.max_epochs = static_cast<int>(detail::parse_int("max_epochs", get(hp, "max_epochs", "200")));
      opt.seed = config.seed;
      auto [model, info] = MlpModel::fit(train, dev && dev->size() > 0 ? dev : nullptr, opt);
      std::string warning;
      if (info.status != FitStatus::converged) {
        warning = fmt::format("mlp reached {} epochs without a loss plateau", info.epochs);
      }
      return {config, std::move(model), info.status, std::move(warning)};
    }
  }
  throw UsageError("fit: unknown algorithm");
}

// ---------------------------------------------------------------------------
// Binary container

namespace {
constexpr std::array<char, 4> kModelMagic = {'G', 'S', 'M', 'D'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void BinaryWriter::u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
void BinaryWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void BinaryWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
void BinaryWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void BinaryWriter::f64s(const std::vector<double>& v) {
  u64(v.size());
  for (double d : v) f64(d);
}
void BinaryWriter::matrix(const RowMatrix& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
}
void BinaryWriter::vector(const Eigen::VectorXd& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
}

void BinaryReader::raw(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("model file truncated");
}
std::uint8_t BinaryReader::u8() {
  char c = 0;
  raw(&c, 1);
  return static_cast<std::uint8_t>(c);
}
std::uint32_t BinaryReader::u32() {
  std::array<unsigned char, 4> b{};
  raw(reinterpret_cast<char*>(b.data()), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
std::uint64_t BinaryReader::u64() {
  std::array<unsigned char, 8> b{};
  raw(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
double BinaryReader::f64() { return std::bit_cast<double>(u64()); }
std::string BinaryReader::str() {
  std::string s(u32(), '\0');
  raw(s.data(), s.size());
  return s;
}
std::vector<double> BinaryReader::f64s() {
  const auto n = u64();
  if (n > (std::uint64_t{1} << 34)) throw FormatError("model file: implausible array length");
  std::vector<double> v(n);
  for (auto& d : v) d = f64();
  return v;
}
RowMatrix BinaryReader::matrix() {
  const auto rows = u64();
  const auto cols = u64();
  if (rows > (std::uint64_t{1} << 32) || cols > (std::uint64_t{1} << 32)) {
    throw FormatError("model file: implausible matrix shape");
  }
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
  return m;
}
Eigen::VectorXd BinaryReader::vector() {
  const auto n = u64();
  if (n > (std::uint64_t{1} << 34)) throw FormatError("model file: implausible vector length");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
  return v;
}

void save_model(const TrainedScorer& model, std::ostream& out) {
  out.write(kModelMagic.data(), kModelMagic.size());
  BinaryWriter w(out);
  w.u32(kModelVersion);
  w.u8(static_cast<std::uint8_t>(model.algorithm()));
  w.str(canonical_string(model.config().hyperparameters));
  w.u64(model.config().seed);
  w.u8(static_cast<std::uint8_t>(model.status()));
  w.str(model.warning());
  model.model().save(w);
  if (!out) throw RunError("save_model: write failed");
}

TrainedScorer load_model(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kModelMagic) throw FormatError("bad magic (not a model file)");
  BinaryReader r(in);
  if (const auto v = r.u32(); v != kModelVersion) throw FormatError(fmt::format("unsupported model version {}", v));
  const auto tag = r.u8();
  if (tag > static_cast<std::uint8_t>(Algorithm::mlp)) throw FormatError(fmt::format("unknown algorithm tag {}", tag));
  TrainConfig config;
  config.algorithm = static_cast<Algorithm>(tag);
  config.hyperparameters = parse_hyperparameters(r.str());
  config.seed = r.u64();
  const auto status_byte = r.u8();
  if (status_byte > 1) throw FormatError("bad fit status");
  auto warning = r.str();
  std::shared_ptr<const Model> model;
  switch (config.algorithm) {
    case Algorithm::knn: model = KnnModel::load(r); break;
    case Algorithm::logreg: model = LogRegModel::load(r); break;
    case Algorithm::svm_rbf: model = SvmModel::load(r); break;
    case Algorithm::gaussian_nb: model = GaussianNbModel::load(r); break;
    case Algorithm::decision_tree: model = DecisionTreeModel::load(r); break;
    case Algorithm::mlp: model = MlpModel::load(r); break;
  }
  return {std::move(config), std::move(model), static_cast<FitStatus>(status_byte), std::move(warning)};
}

}  // namespace greenspoof
