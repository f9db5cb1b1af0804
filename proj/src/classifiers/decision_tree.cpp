#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "greenspoof/models.hpp"
#include "greenspoof/serialize.hpp"

namespace greenspoof {

namespace {

double impurity(SplitCriterion criterion, double bona, double total) {
  if (total <= 0.0) return 0.0;
  const double p = bona / total;
  const double q = 1.0 - p;
  if (criterion == SplitCriterion::gini) return 1.0 - p * p - q * q;
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (q > 0.0) h -= q * std::log2(q);
  return h;
}

class TreeBuilder {
 public:
  TreeBuilder(const Samples& data, SplitCriterion criterion, int max_depth)
      : data_(data), criterion_(criterion), max_depth_(max_depth) {}

  std::vector<DecisionTreeModel::Node> build() {
    std::vector<std::size_t> idx(data_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    grow(idx, 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
  };

  std::int32_t grow(std::vector<std::size_t>& idx, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    std::uint32_t bona = 0;
    for (auto i : idx) bona += data_.y[i] == Label::bonafide;
    nodes_[id].bona = bona;
    nodes_[id].total = static_cast<std::uint32_t>(idx.size());
    if (bona == 0 || bona == idx.size() || depth >= max_depth_ || idx.size() < 2) return id;

    const Split split = best_split(idx, bona);
    if (split.feature < 0) return id;  // all points identical

    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      (data_.x(static_cast<Eigen::Index>(i), split.feature) <= split.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    const auto l = grow(left, depth + 1);
    nodes_[id].left = l;
    const auto r = grow(right, depth + 1);
    nodes_[id].right = r;
    return id;
  }

  // Highest impurity decrease; equal gains keep the lower feature, then the
  // lower threshold.
  Split best_split(const std::vector<std::size_t>& idx, std::uint32_t bona_total) const {
    const double n = static_cast<double>(idx.size());
    const double parent = impurity(criterion_, bona_total, n);
    Split best;
    std::vector<std::pair<double, bool>> column(idx.size());
    for (Eigen::Index f = 0; f < data_.x.cols(); ++f) {
      for (std::size_t k = 0; k < idx.size(); ++k) {
        column[k] = {data_.x(static_cast<Eigen::Index>(idx[k]), f), data_.y[idx[k]] == Label::bonafide};
      }
      std::ranges::sort(column, {}, &std::pair<double, bool>::first);
      double left_bona = 0.0;
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        left_bona += column[k].second;
        const double a = column[k].first;
        const double b = column[k + 1].first;
        if (a == b) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = n - nl;
        const double gain = parent - (nl / n) * impurity(criterion_, left_bona, nl) -
                            (nr / n) * impurity(criterion_, bona_total - left_bona, nr);
        if (gain > best.gain) {
          double t = a + (b - a) / 2.0;
          if (t >= b) t = a;  // adjacent doubles
          best = {static_cast<std::int32_t>(f), t, gain};
        }
      }
    }
    return best;
  }

  const Samples& data_;
  SplitCriterion criterion_;
  int max_depth_;
  std::vector<DecisionTreeModel::Node> nodes_;
};

}  // namespace

DecisionTreeModel::DecisionTreeModel(std::vector<Node> nodes, std::size_t dim) : nodes_(std::move(nodes)), dim_(dim) {
  if (nodes_.empty()) throw UsageError("decision_tree: empty tree");
  const auto count = static_cast<std::int32_t>(nodes_.size());
  for (const auto& node : nodes_) {
    if (node.feature >= 0 && (node.left <= 0 || node.right <= 0 || node.left >= count || node.right >= count ||
                              static_cast<std::size_t>(node.feature) >= dim_)) {
      throw FormatError("decision_tree: malformed node table");
    }
    if (node.total == 0) throw FormatError("decision_tree: empty node");
  }
}

std::unique_ptr<DecisionTreeModel> DecisionTreeModel::fit(const Samples& data, SplitCriterion criterion,
                                                          int max_depth) {
  if (max_depth < 1) throw UsageError("decision_tree: max_depth must be >= 1");
  TreeBuilder builder(data, criterion, max_depth);
  return std::make_unique<DecisionTreeModel>(builder.build(), data.dim());
}

double DecisionTreeModel::score(std::span<const double> x) const {
  std::int32_t id = 0;
  while (nodes_[id].feature >= 0) {
    const auto& node = nodes_[id];
    id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return static_cast<double>(nodes_[id].bona) / nodes_[id].total;
}

std::size_t DecisionTreeModel::leaf_count() const {
  return static_cast<std::size_t>(std::ranges::count_if(nodes_, [](const Node& n) { return n.feature < 0; }));
}

std::int64_t DecisionTreeModel::param_count() const {
  const auto leaves = static_cast<std::int64_t>(leaf_count());
  const auto internal = static_cast<std::int64_t>(nodes_.size()) - leaves;
  return 2 * internal + leaves;
}

int DecisionTreeModel::depth() const {
  // preorder layout: children always follow their parent
  std::vector<int> depth(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (nodes_[i].feature >= 0) {
      depth[nodes_[i].left] = depth[i] + 1;
      depth[nodes_[i].right] = depth[i] + 1;
    }
  }
  return deepest;
}

void DecisionTreeModel::save(BinaryWriter& out) const {
  out.u64(dim_);
  out.u64(nodes_.size());
  for (const auto& n : nodes_) {
    out.u32(static_cast<std::uint32_t>(n.feature));
    out.f64(n.threshold);
    out.u32(static_cast<std::uint32_t>(n.left));
    out.u32(static_cast<std::uint32_t>(n.right));
    out.u32(n.bona);
    out.u32(n.total);
  }
}

std::unique_ptr<DecisionTreeModel> DecisionTreeModel::load(BinaryReader& in) {
  const auto dim = in.u64();
  const auto count = in.u64();
  if (count > (std::uint64_t{1} << 31)) throw FormatError("decision_tree: implausible node count");
  std::vector<Node> nodes(count);
  for (auto& n : nodes) {
    n.feature = static_cast<std::int32_t>(in.u32());
    n.threshold = in.f64();
    n.left = static_cast<std::int32_t>(in.u32());
    n.right = static_cast<std::int32_t>(in.u32());
    n.bona = in.u32();
    n.total = in.u32();
  }
  return std::make_unique<DecisionTreeModel>(std::move(nodes), dim);
}

}  // namespace greenspoof
