#include <cmath>
#include <sstream>

#include "doctest.h"
#include "eaps/core/stats.hpp"
#include "eaps/predictor/evaluation.hpp"
#include "eaps/predictor/ewma.hpp"
#include "eaps/predictor/regressors.hpp"

using namespace eaps;

namespace {

// y = 2 * x0 on a unit grid, other features noise.
void linear_set(std::size_t n, std::uint64_t seed, Matrix& x, std::vector<double>& y) {
  RandomStream rs(seed);
  x.clear();
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double cu = rs.uniform(0, 100);
    x.push_back({cu, rs.uniform(0, 1), rs.uniform(0, 1), rs.uniform(0, 1)});
    y.push_back(2 * cu);
  }
}

// Dataset with k = 4 blocks. The load follows an AR(1) process sampled every
// interval and the target depends on the mean load over the last four samples.
Dataset autocorrelated(std::size_t n, std::uint64_t seed) {
  RandomStream rs(seed);
  Dataset d;
  d.k = 4;
  std::vector<double> load = {50, 50, 50, 50};
  for (std::size_t i = 0; i < n; ++i) {
    load.erase(load.begin());
    const double next = std::clamp(0.7 * load.back() + 0.3 * 50 + rs.normal(0, 20), 0.0, 100.0);
    load.push_back(next);
    DatasetRow r;
    r.txn_id = i;
    r.ac = static_cast<AccessCategory>(rs.uniform_int(0, 3));
    r.da_plus_db_us = rs.uniform(1000, 3000);
    for (double l : load) {
      const double block[kFeaturesPerSample] = {l, -95, l * 1000, 0, l / 10, 0, 0, 0, 0, 0, 0, 0};
      r.samples.insert(r.samples.end(), block, block + kFeaturesPerSample);
    }
    const double mean_load = (load[0] + load[1] + load[2] + load[3]) / 4;
    r.target_dc_us = std::clamp(mean_load * 900 + rs.normal(0, 1500), 0.0, 99000.0);
    d.rows.push_back(std::move(r));
  }
  return d;
}

double test_mae(const Regressor& m, const Matrix& x, const std::vector<double>& y) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(m.predict(x[i]) - y[i]);
  return s / static_cast<double>(x.size());
}

EtrParams small_etr(std::uint64_t seed = 1) {
  EtrParams p;
  p.n_trees = 20;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("EWMA examples") {
  EwmaEstimator e;
  CHECK_FALSE(e.estimate());
  CHECK(e.update(30000) == 30000);
  CHECK(e.update(38000) == doctest::Approx(31000));
  EwmaEstimator c(0.125);
  for (int i = 0; i < 200; ++i) c.update(i == 0 ? 90000 : 5000);
  CHECK(*c.estimate() == doctest::Approx(5000).epsilon(1e-6));
  CHECK_THROWS_AS(c.update(-1), std::invalid_argument);
  CHECK_THROWS_AS(EwmaEstimator(0.0), std::invalid_argument);
}

TEST_CASE("EWMA stays within the range of its samples") {
  RandomStream rs(5);
  EwmaEstimator e;
  double lo = 1e18, hi = -1;
  for (int i = 0; i < 1000; ++i) {
    const double s = rs.uniform(100, 90000);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    e.update(s);
    REQUIRE(*e.estimate() >= lo);
    REQUIRE(*e.estimate() <= hi);
  }
}

TEST_CASE("quantiles use linear interpolation") {
  CHECK(quantile({4, 1, 3, 2}, 0.5) == 2.5);
  CHECK(quantile({1, 2, 3, 4}, 0.25) == 1.75);
  CHECK(quantile({1, 2, 3, 4}, 1.0) == 4);
  CHECK(quantile({7}, 0.3) == 7);
  CHECK_THROWS(quantile({}, 0.5));
  CHECK(stddev({2, 4, 4, 4, 5, 5, 7, 9}) == 2.0);
}

TEST_CASE("a constant target gives a constant prediction") {
  Matrix x;
  std::vector<double> y;
  linear_set(200, 1, x, y);
  std::fill(y.begin(), y.end(), 4242.0);
  EtrModel m(small_etr());
  m.fit(x, y);
  for (const auto& row : x) CHECK(m.predict(row) == 4242.0);
  for (const auto& t : m.trees()) CHECK(t.size() == 1);
}

TEST_CASE("extra trees learn a linear target") {
  Matrix x, tx;
  std::vector<double> y, ty;
  linear_set(1000, 2, x, y);
  linear_set(500, 3, tx, ty);
  EtrModel m(EtrParams{});
  m.fit(x, y);
  CHECK(test_mae(m, tx, ty) < 0.05 * 200);
}

TEST_CASE("training is deterministic per seed") {
  Matrix x;
  std::vector<double> y;
  linear_set(300, 4, x, y);
  EtrModel a(small_etr(7)), b(small_etr(7)), c(small_etr(8));
  a.fit(x, y);
  b.fit(x, y);
  c.fit(x, y);
  std::ostringstream sa, sb, sc;
  a.write(sa);
  b.write(sb);
  c.write(sc);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != sc.str());
}

TEST_CASE("a tree's stream depends only on the seed and its index") {
  Matrix x;
  std::vector<double> y;
  linear_set(300, 4, x, y);
  EtrParams p5 = small_etr(3), p20 = small_etr(3);
  p5.n_trees = 5;
  EtrModel a(p5), b(p20);
  a.fit(x, y);
  b.fit(x, y);
  for (std::size_t t = 0; t < 5; ++t) {
    REQUIRE(a.trees()[t].size() == b.trees()[t].size());
    for (std::size_t i = 0; i < a.trees()[t].size(); ++i) CHECK(a.trees()[t][i].threshold == b.trees()[t][i].threshold);
  }
}

TEST_CASE("the ensemble predicts the mean of its trees, in any order") {
  Matrix x;
  std::vector<double> y;
  linear_set(300, 6, x, y);
  EtrModel m(small_etr());
  m.fit(x, y);
  auto trees = m.trees();
  std::reverse(trees.begin(), trees.end());
  const EtrModel r = EtrModel::from_trees(trees, m.width());
  for (std::size_t i = 0; i < 20; ++i) {
    double s = 0;
    for (std::size_t t = 0; t < m.trees().size(); ++t) s += m.predict_tree(t, x[i]);
    CHECK(m.predict(x[i]) == doctest::Approx(s / 20).epsilon(1e-12));
    CHECK(r.predict(x[i]) == doctest::Approx(m.predict(x[i])).epsilon(1e-12));
  }
}

TEST_CASE("leaf constraints and simple ensembles") {
  using Node = EtrModel::Node;
  const EtrModel ten = EtrModel::from_trees({{Node{-1, 0, -1, -1, 10000}}, {Node{-1, 0, -1, -1, 10000}}}, 2);
  CHECK(ten.predict({0.3, -0.2}) == 10000);
  const EtrModel single = EtrModel::from_trees({{Node{0, 0.5, 1, 2, 0}, Node{-1, 0, -1, -1, 7}, Node{-1, 0, -1, -1, 9}}}, 1);
  CHECK(single.predict({0.1}) == 7);
  CHECK(single.predict({0.9}) == 9);
  CHECK(clamp_dc_us(-200) == 0);
  CHECK(clamp_dc_us(150000) < 100000);
  CHECK(clamp_dc_us(42) == 42);
  CHECK_THROWS_AS(single.predict({0.1, 0.2}), ModelError);
  CHECK_THROWS_AS(single.predict({NAN}), ModelError);
  CHECK_THROWS_AS(EtrModel().predict({1}), ModelError);

  Matrix x;
  std::vector<double> y;
  linear_set(400, 9, x, y);
  EtrParams p = small_etr();
  p.min_samples_leaf = 25;
  p.max_depth = 3;
  EtrModel m(p);
  m.fit(x, y);
  for (const auto& tree : m.trees()) {
    // Depth 3 means at most 15 nodes; every leaf holds >= 25 rows.
    CHECK(tree.size() <= 15);
    std::vector<int> count(tree.size(), 0);
    for (const auto& row : x) {
      std::size_t i = 0;
      while (tree[i].feature >= 0) i = static_cast<std::size_t>(row[static_cast<std::size_t>(tree[i].feature)] <= tree[i].threshold ? tree[i].left : tree[i].right);
      ++count[i];
    }
    for (std::size_t i = 0; i < tree.size(); ++i) {
      if (tree[i].feature < 0) CHECK(count[i] >= 25);
    }
  }
}

TEST_CASE("more data helps on stationary synthetic load") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Matrix big, small, tx;
    std::vector<double> by, sy, ty;
    linear_set(100, seed, big, by);  // 20 x min_samples_leaf
    small.assign(big.begin(), big.begin() + 10);  // 2 x min_samples_leaf
    sy.assign(by.begin(), by.begin() + 10);
    for (auto& v : by) v += RandomStream(seed).normal(0, 5);
    linear_set(300, 100 + seed, tx, ty);
    EtrModel a(small_etr(seed)), b(small_etr(seed));
    a.fit(small, sy);
    b.fit(big, by);
    if (test_mae(b, tx, ty) <= test_mae(a, tx, ty)) ++wins;
  }
  CHECK(wins >= 9);
}

TEST_CASE("baselines") {
  Matrix x;
  std::vector<double> y;
  RandomStream rs(21);
  for (int i = 0; i < 20000; ++i) {
    x.push_back({rs.uniform(0, 1), rs.uniform(0, 1)});
    y.push_back(rs.uniform(0, 100000));
  }
  MeanRegressor mean_model;
  mean_model.fit(x, y);
  const auto r = evaluate(mean_model, x, y, std::vector<AccessCategory>(x.size(), AccessCategory::BE));
  // Mean absolute deviation of U[0, 100 ms] is a quarter of the range.
  CHECK(r.mae_us == doctest::Approx(25000).epsilon(0.02));
  CHECK(r.warnings.size() == 3);
  CHECK_FALSE(r.per_ac[0]);
  REQUIRE(r.per_ac[2]);

  Matrix kx(x.begin(), x.begin() + 500);
  std::vector<double> ky(y.begin(), y.begin() + 500);
  KnnRegressor nn(1);
  nn.fit(kx, ky);
  const auto p = evaluate(nn, kx, ky, std::vector<AccessCategory>(kx.size(), AccessCategory::VO));
  CHECK(p.mae_us == 0.0);
  CHECK(p.fraction_within(0) == 1.0);
  std::ostringstream ecdf;
  write_ecdf_csv(ecdf, p.errors);
  CHECK(ecdf.str() == "error_us,fraction\n0,1\n");
  KnnRegressor k3(3);
  k3.fit({{0}, {1}, {2}, {10}}, {0, 10, 20, 1000});
  CHECK(k3.predict({1.1}) == doctest::Approx(10));
}

TEST_CASE("residual sigma matches an independent recomputation") {
  Matrix x, tx;
  std::vector<double> y, ty;
  linear_set(400, 12, x, y);
  linear_set(400, 13, tx, ty);
  for (auto& v : ty) v += RandomStream(static_cast<std::uint64_t>(v)).normal(0, 3);
  std::vector<AccessCategory> acs;
  for (std::size_t i = 0; i < tx.size(); ++i) acs.push_back(static_cast<AccessCategory>(i % 4));
  EtrModel m(small_etr());
  m.fit(x, y);
  const auto r = evaluate(m, tx, ty, acs, false);
  for (AccessCategory ac : kAcsByPriority) {
    std::vector<double> e;
    for (std::size_t i = 0; i < tx.size(); ++i) {
      if (acs[i] == ac) e.push_back(m.predict(tx[i]) - ty[i]);
    }
    double mu = 0;
    for (double v : e) mu += v;
    mu /= static_cast<double>(e.size());
    double ss = 0;
    for (double v : e) ss += (v - mu) * (v - mu);
    REQUIRE(r.per_ac[priority_rank(ac)]);
    CHECK(r.per_ac[priority_rank(ac)]->sigma_us == doctest::Approx(std::sqrt(ss / static_cast<double>(e.size()))).epsilon(1e-12));
  }
  const ResidualStats s = ResidualStats::from(r);
  std::stringstream ss;
  s.write_csv(ss);
  const ResidualStats back = ResidualStats::read_csv(ss);
  CHECK(back.sigma_us(AccessCategory::VI, -1) == s.sigma_us(AccessCategory::VI, -1));
}

TEST_CASE("model persistence reproduces predictions exactly") {
  Matrix x;
  std::vector<double> y;
  linear_set(300, 14, x, y);
  EtrModel m(small_etr());
  m.fit(x, y);
  std::stringstream ss;
  m.write(ss);
  const std::string text = ss.str();
  CHECK(text.rfind("tree_id,node_id,feature_index,threshold,left_id,right_id,leaf_value\n0,0,", 0) == 0);
  const EtrModel back = EtrModel::read(ss, m.width());
  for (const auto& row : x) CHECK(back.predict(row) == m.predict(row));
  std::ostringstream again;
  back.write(again);
  CHECK(again.str() == text);
  std::stringstream bad("tree_id,node_id,feature_index,threshold,left_id,right_id,leaf_value\n0,0,0,0.5,1,9,0\n0,1,-1,0,-1,-1,1\n");
  CHECK_THROWS_AS(EtrModel::read(bad), ModelError);
}

TEST_CASE("training-size sweep trends down on stationary data") {
  const Dataset train = autocorrelated(12000, 1), test = autocorrelated(2000, 2);
  SweepOptions o;
  o.etr.n_trees = 20;
  o.preprocess.undersample = false;
  std::vector<std::string> warnings;
  const auto pts = sweep_training_size(train, test, {100, 1000, 10000, 50000}, o, &warnings);
  REQUIRE(pts.size() == 4);
  CHECK(pts[3].skipped);
  CHECK(warnings.size() == 1);
  CHECK(pts[1].mae_us <= pts[0].mae_us);
  CHECK(pts[2].mae_us <= pts[1].mae_us);
  const auto one = sweep_training_size(train, test, {1000}, o);
  CHECK(one.size() == 1);
  CHECK(one[0].mae_us == pts[1].mae_us);
}

TEST_CASE("feature history helps on autocorrelated load") {
  const Dataset train = autocorrelated(5000, 3), test = autocorrelated(2000, 4);
  SweepOptions o;
  o.etr.n_trees = 30;
  o.preprocess.undersample = false;
  const auto pts = sweep_history(train, test, {1, 4}, o);
  CHECK(pts[1].mae_us <= pts[0].mae_us);
}
