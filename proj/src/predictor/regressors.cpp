#include "eaps/predictor/regressors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "eaps/core/rng.hpp"

namespace eaps {

namespace {

void check_training_set(const Matrix& x, const std::vector<double>& y) {
  if (x.empty()) throw ModelError("training set is empty");
  if (x.size() != y.size()) throw ModelError("inputs and targets differ in length");
  const std::size_t w = x.front().size();
  for (const auto& row : x) {
    if (row.size() != w) throw ModelError("training rows differ in width");
  }
}

void check_width(const std::vector<double>& x, std::size_t width) {
  if (x.size() != width) {
    throw ModelError("input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(width));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ModelError("input contains a non-finite value");
  }
}

}  // namespace

double clamp_dc_us(double v, double limit_us) {
  return std::clamp(v, 0.0, std::nextafter(limit_us, 0.0));
}

// --- mean ---------------------------------------------------------------

void MeanRegressor::fit(const Matrix& x, const std::vector<double>& y) {
  check_training_set(x, y);
  mean_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  width_ = x.front().size();
  fitted_ = true;
}

double MeanRegressor::predict(const std::vector<double>& x) const {
  if (!fitted_) throw ModelError("mean baseline is not fitted");
  check_width(x, width_);
  return mean_;
}

// --- kNN ----------------------------------------------------------------

KnnRegressor::KnnRegressor(std::size_t k) : k_(k) {
  if (k_ == 0) throw ModelError("kNN needs k >= 1");
}

void KnnRegressor::fit(const Matrix& x, const std::vector<double>& y) {
  check_training_set(x, y);
  x_ = x;
  y_ = y;
}

double KnnRegressor::predict(const std::vector<double>& x) const {
  if (x_.empty()) throw ModelError("kNN baseline is not fitted");
  check_width(x, x_.front().size());
  const std::size_t k = std::min(k_, x_.size());
  // Max-heap of (distance, row) keeping the k best.
  std::priority_queue<std::pair<double, std::size_t>> best;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    double d = 0.0;
    const auto& r = x_[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = r[j] - x[j];
      d += diff * diff;
    }
    if (best.size() < k) {
      best.emplace(d, i);
    } else if (std::make_pair(d, i) < best.top()) {
      best.pop();
      best.emplace(d, i);
    }
  }
  double sum = 0.0;
  const std::size_t n = best.size();
  while (!best.empty()) {
    sum += y_[best.top().second];
    best.pop();
  }
  return sum / static_cast<double>(n);
}

// --- extremely randomized trees -----------------------------------------

void EtrParams::validate() const {
  if (n_trees == 0) throw ModelError("n_trees must be >= 1");
  if (max_depth == 0) throw ModelError("max_depth must be >= 1");
  if (min_samples_leaf == 0) throw ModelError("min_samples_leaf must be >= 1");
}

void EtrModel::fit(const Matrix& x, const std::vector<double>& y) {
  params_.validate();
  check_training_set(x, y);
  if (x.size() < params_.min_samples_leaf) throw ModelError("fewer training rows than min_samples_leaf");
  width_ = x.front().size();
  trees_.clear();
  trees_.reserve(params_.n_trees);
  for (std::size_t t = 0; t < params_.n_trees; ++t) trees_.push_back(grow(x, y, t));
}

EtrModel::Tree EtrModel::grow(const Matrix& x, const std::vector<double>& y, std::size_t tree_index) const {
  RandomStream rs = Rng(params_.seed).derive("etr.tree", tree_index);
  const std::size_t n_features = width_;
  const std::size_t want = params_.max_features > 0 ? std::min(params_.max_features, n_features) : n_features;
  const std::size_t min_leaf = params_.min_samples_leaf;

  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> order(n_features);
  std::iota(order.begin(), order.end(), 0);

  struct Work {
    int node;
    std::size_t lo, hi, depth;
  };
  Tree tree;
  tree.push_back(Node{});
  std::vector<Work> stack = {{0, 0, idx.size(), 0}};
  while (!stack.empty()) {
    const Work w = stack.back();
    stack.pop_back();
    const std::size_t n = w.hi - w.lo;
    double sum = 0.0, lo_y = std::numeric_limits<double>::infinity(), hi_y = -lo_y;
    for (std::size_t i = w.lo; i < w.hi; ++i) {
      const double v = y[idx[i]];
      sum += v;
      lo_y = std::min(lo_y, v);
      hi_y = std::max(hi_y, v);
    }
    tree[static_cast<std::size_t>(w.node)].value = sum / static_cast<double>(n);
    if (w.depth >= params_.max_depth || n < 2 * min_leaf || lo_y == hi_y) continue;

    int best_feature = -1;
    double best_threshold = 0.0, best_sse = std::numeric_limits<double>::infinity();
    std::size_t tried = 0;
    for (std::size_t k = 0; k < n_features && tried < want; ++k) {
      // Lazily shuffled feature order: position k gets a random remaining feature.
      const auto j = static_cast<std::size_t>(
          rs.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(n_features - 1)));
      std::swap(order[k], order[j]);
      const std::size_t f = order[k];
      double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
      for (std::size_t i = w.lo; i < w.hi; ++i) {
        const double v = x[idx[i]][f];
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
      }
      if (fmin == fmax) continue;  // constant here; does not count as tried
      ++tried;
      const double threshold = rs.uniform(fmin, fmax);
      std::size_t nl = 0;
      double sl = 0.0, ql = 0.0, sr = 0.0, qr = 0.0;
      for (std::size_t i = w.lo; i < w.hi; ++i) {
        const double v = y[idx[i]];
        if (x[idx[i]][f] <= threshold) {
          ++nl;
          sl += v;
          ql += v * v;
        } else {
          sr += v;
          qr += v * v;
        }
      }
      const std::size_t nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double sse = (ql - sl * sl / static_cast<double>(nl)) + (qr - sr * sr / static_cast<double>(nr));
      if (sse < best_sse) {
        best_sse = sse;
        best_feature = static_cast<int>(f);
        best_threshold = threshold;
      }
    }
    if (best_feature < 0) continue;

    const auto f = static_cast<std::size_t>(best_feature);
    const auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(w.lo),
                                    idx.begin() + static_cast<std::ptrdiff_t>(w.hi),
                                    [&](std::size_t r) { return x[r][f] <= best_threshold; });
    const auto split = static_cast<std::size_t>(mid - idx.begin());
    const int left = static_cast<int>(tree.size());
    tree.push_back(Node{});
    const int right = static_cast<int>(tree.size());
    tree.push_back(Node{});
    Node& node = tree[static_cast<std::size_t>(w.node)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    stack.push_back({right, split, w.hi, w.depth + 1});
    stack.push_back({left, w.lo, split, w.depth + 1});
  }
  return tree;
}

double EtrModel::predict_tree(std::size_t t, const std::vector<double>& x) const {
  const Tree& tree = trees_.at(t);
  std::size_t i = 0;
  while (tree[i].feature >= 0) {
    const Node& n = tree[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return tree[i].value;
}

double EtrModel::predict(const std::vector<double>& x) const {
  if (trees_.empty()) throw ModelError("tree ensemble is not fitted");
  check_width(x, width_);
  double sum = 0.0;
  for (std::size_t t = 0; t < trees_.size(); ++t) sum += predict_tree(t, x);
  return sum / static_cast<double>(trees_.size());
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, p - buf);
}

}  // namespace

void EtrModel::write(std::ostream& out) const {
  out << "tree_id,node_id,feature_index,threshold,left_id,right_id,leaf_value\n";
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    for (std::size_t i = 0; i < trees_[t].size(); ++i) {
      const Node& n = trees_[t][i];
      out << t << ',' << i << ',' << n.feature << ',';
      put_double(out, n.threshold);
      out << ',' << n.left << ',' << n.right << ',';
      put_double(out, n.value);
      out << '\n';
    }
  }
}

EtrModel EtrModel::from_trees(std::vector<Tree> trees, std::size_t width) {
  EtrModel m;
  for (const Tree& t : trees) {
    if (t.empty()) throw ModelError("empty tree");
    for (const Node& n : t) {
      if (n.feature < 0) continue;
      const auto size = static_cast<int>(t.size());
      if (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size) throw ModelError("bad child id");
      if (static_cast<std::size_t>(n.feature) >= width) throw ModelError("feature index beyond the input width");
    }
  }
  m.trees_ = std::move(trees);
  m.width_ = width;
  m.params_.n_trees = m.trees_.size();
  return m;
}

EtrModel EtrModel::read(std::istream& in, std::size_t width) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("tree_id,node_id,feature_index,threshold,left_id,right_id,leaf_value", 0) != 0) {
    throw ModelError("line 1: unexpected model header");
  }
  std::vector<Tree> trees;
  std::size_t lineno = 1, max_feature = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[7];
    for (auto& s : f) std::getline(ls, s, ',');
    try {
      const std::size_t t = std::stoul(f[0]);
      const std::size_t i = std::stoul(f[1]);
      Node n;
      n.feature = std::stoi(f[2]);
      n.threshold = std::stod(f[3]);
      n.left = std::stoi(f[4]);
      n.right = std::stoi(f[5]);
      n.value = std::stod(f[6]);
      if (t > trees.size() || (t == trees.size() && i != 0) || (t < trees.size() && i != trees[t].size()) ||
          t + 1 < trees.size()) {
        throw ModelError("nodes out of order");
      }
      if (t == trees.size()) trees.emplace_back();
      if (n.feature >= 0) max_feature = std::max(max_feature, static_cast<std::size_t>(n.feature));
      trees[t].push_back(n);
    } catch (const std::exception&) {
      throw ModelError("line " + std::to_string(lineno) + ": malformed model row");
    }
  }
  if (trees.empty()) throw ModelError("model file has no trees");
  return from_trees(std::move(trees), width > 0 ? width : max_feature + 1);
}

}  // namespace eaps
