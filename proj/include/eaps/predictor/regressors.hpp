#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eaps {

using Matrix = std::vector<std::vector<double>>;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual std::string name() const = 0;
  virtual void fit(const Matrix& x, const std::vector<double>& y) = 0;
  /// Throws ModelError if `x` has the wrong width or the model is unfitted.
  virtual double predict(const std::vector<double>& x) const = 0;
};

/// Predicts the training mean.
class MeanRegressor : public Regressor {
 public:
  std::string name() const override { return "mean"; }
  void fit(const Matrix& x, const std::vector<double>& y) override;
  double predict(const std::vector<double>& x) const override;

 private:
  double mean_ = 0.0;
  std::size_t width_ = 0;
  bool fitted_ = false;
};

/// Brute-force Euclidean k nearest neighbours; predicts their mean target.
/// Ties in distance go to the earlier training row.
class KnnRegressor : public Regressor {
 public:
  explicit KnnRegressor(std::size_t k = 5);
  std::string name() const override { return "knn"; }
  void fit(const Matrix& x, const std::vector<double>& y) override;
  double predict(const std::vector<double>& x) const override;

 private:
  std::size_t k_;
  Matrix x_;
  std::vector<double> y_;
};

struct EtrParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 20;
  std::size_t min_samples_leaf = 5;
  /// Features tried per node; 0 means all of them.
  std::size_t max_features = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Extremely randomized trees. Every tree sees the full training set; each
/// node draws a random subset of features, one uniform threshold per feature
/// within the node's range, and keeps the split with the lowest summed
/// squared error. Tree t draws only from the stream keyed by (seed, t).
class EtrModel : public Regressor {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  EtrModel() = default;
  explicit EtrModel(EtrParams params) : params_(params) { params_.validate(); }

  std::string name() const override { return "etr"; }
  void fit(const Matrix& x, const std::vector<double>& y) override;
  double predict(const std::vector<double>& x) const override;
  double predict_tree(std::size_t t, const std::vector<double>& x) const;

  const std::vector<Tree>& trees() const { return trees_; }
  std::size_t width() const { return width_; }
  const EtrParams& params() const { return params_; }

  /// `tree_id,node_id,feature_index,threshold,left_id,right_id,leaf_value`
  /// with a header row; leaves have feature_index -1 and child ids -1.
  void write(std::ostream& out) const;
  /// The input width is the largest feature index + 1 unless given.
  static EtrModel read(std::istream& in, std::size_t width = 0);

  /// Builds a model from explicit trees (persistence and tests).
  static EtrModel from_trees(std::vector<Tree> trees, std::size_t width);

 private:
  Tree grow(const Matrix& x, const std::vector<double>& y, std::size_t tree_index) const;

  EtrParams params_{};
  std::vector<Tree> trees_;
  std::size_t width_ = 0;
};

/// Clamp applied to every delay prediction: [0, 100 ms).
double clamp_dc_us(double v, double limit_us = 100000.0);

}  // namespace eaps
