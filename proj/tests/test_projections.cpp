#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qclab/functionals.hpp"
#include "qclab/projections.hpp"
#include "qclab/rng.hpp"

using namespace qclab;

namespace {

MatrixXd random_gaussian(int r, int c, std::uint64_t seed) {
  RngStream rng(seed, 0);
  MatrixXd m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = rng.gaussian();
  return m;
}

VectorXd random_vec(int n, RngStream& rng) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.gaussian();
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("projections");

TEST_CASE("gram_schmidt orthonormalizes and flags rank deficiency") {
  MatrixXd g = random_gaussian(6, 3, 51);
  REQUIRE(gram_schmidt(g));
  CHECK((g.transpose() * g - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  MatrixXd bad = random_gaussian(5, 3, 52);
  bad.col(2) = bad.col(0) * 2.0 - bad.col(1);
  CHECK_FALSE(gram_schmidt(bad));
}

TEST_CASE("projection operator basics") {
  RngStream rng(53, 0);
  const int n = 8, k = 3;
  ProjectionOp p = haar_projection(n, k, RngStream(53, 1));
  CHECK(p.ambient_dim() == n);
  CHECK(p.rank() == k);

  for (int it = 0; it < 10000; ++it) {
    const VectorXd x = random_vec(n, rng);
    // contraction, idempotence, self-consistency of the two norms
    CHECK(p.projected_norm(x) <= x.norm() * (1.0 + 1e-10));
    const VectorXd px = p.apply(x);
    CHECK((p.apply(px) - px).norm() <= 1e-10 * (1.0 + px.norm()));
    CHECK(px.norm() == doctest::Approx(p.projected_norm(x)).epsilon(1e-10));
  }

  MatrixXd skew = random_gaussian(5, 2, 54);  // not orthonormal
  CHECK_THROWS_AS(ProjectionOp{skew}, std::invalid_argument);
}

TEST_CASE("rank n projection is the identity") {
  RngStream rng(55, 0);
  const int n = 6;
  ProjectionOp p = haar_projection(n, n, RngStream(55, 1));
  for (int it = 0; it < 200; ++it) {
    const VectorXd x = random_vec(n, rng);
    CHECK((p.apply(x) - x).norm() <= 1e-10 * x.norm());
    CHECK(p.projected_norm(x) == doctest::Approx(x.norm()).epsilon(1e-12));
  }
}

TEST_CASE("haar_basis: orthonormal, deterministic, prefix-stable") {
  const int n = 12;
  const MatrixXd b5 = haar_basis(n, 5, RngStream(56, 0));
  CHECK((b5.transpose() * b5 - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);

  const MatrixXd again = haar_basis(n, 5, RngStream(56, 0));
  CHECK(b5 == again);  // bitwise determinism

  // columns come from per-column substreams: a lower rank draw is a prefix
  const MatrixXd b2 = haar_basis(n, 2, RngStream(56, 0));
  CHECK(b2 == b5.leftCols(2));

  const MatrixXd other = haar_basis(n, 5, RngStream(56, 1));
  CHECK((b5 - other).cwiseAbs().maxCoeff() > 1e-8);  // different stream, different subspace
}

TEST_CASE("complement splits space") {
  RngStream rng(57, 0);
  const int n = 9, k = 4;
  ProjectionOp p = haar_projection(n, k, RngStream(57, 1));
  ProjectionOp q = complement(p);
  CHECK(q.rank() == n - k);
  for (int it = 0; it < 2000; ++it) {
    const VectorXd x = random_vec(n, rng);
    // Pythagoras and exact reassembly
    const double a = p.projected_norm(x), b = q.projected_norm(x);
    CHECK(a * a + b * b == doctest::Approx(x.squaredNorm()).epsilon(1e-10));
    CHECK((p.apply(x) + q.apply(x) - x).norm() <= 1e-10 * x.norm());
  }

  ProjectionOp full = haar_projection(n, n, RngStream(57, 2));
  ProjectionOp zero = complement(full);
  CHECK(zero.rank() == 0);
  const VectorXd x = random_vec(n, rng);
  CHECK(zero.apply(x).norm() == 0.0);
  CHECK(zero.projected_norm(x) == 0.0);

  ProjectionOp back = complement(q);
  for (int it = 0; it < 200; ++it) {
    const VectorXd y = random_vec(n, rng);
    CHECK((back.apply(y) - p.apply(y)).norm() <= 1e-9 * (1.0 + y.norm()));
  }
}

TEST_CASE("haar_orthogonal is orthogonal") {
  const int n = 7;
  const MatrixXd u = haar_orthogonal(n, RngStream(58, 0));
  CHECK((u.transpose() * u - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(std::abs(u.determinant()) - 1.0) < 1e-10);
}

TEST_CASE("projected sphere mass: E|P theta|^2 = k/n") {
  const int n = 10, k = 3, count = 100000;
  ProjectionOp p = haar_projection(n, k, RngStream(59, 0));
  RngStream rng(59, 1);
  auto pts = sample_sphere(n, count, rng);
  double s = 0.0, s2 = 0.0;
  for (const auto& x : pts) {
    const double v = p.projected_norm(x);
    s += v * v;
    s2 += v * v * v * v;
  }
  const double mean = s / count;
  const double se = std::sqrt((s2 / count - mean * mean) / count);
  CHECK(std::abs(mean - static_cast<double>(k) / n) <= 3.0 * se);
}

TEST_CASE("jl: k = n never fails") {
  std::vector<VectorXd> pts;
  RngStream rng(60, 0);
  for (int i = 0; i < 5; ++i) pts.push_back(random_vec(6, rng));
  auto rep = jl_concentration(pts, 6, 0.1, 300, RngStream(60, 1));
  CHECK(rep.empirical_failure == 0.0);
  CHECK(rep.trials == 300);
  CHECK(rep.n == 6);
  CHECK(rep.k == 6);
}

TEST_CASE("jl failure is monotone in epsilon and in the point count") {
  std::vector<VectorXd> pool;
  RngStream rng(61, 0);
  for (int i = 0; i < 32; ++i) pool.push_back(random_vec(16, rng));
  const std::vector<double> eps = {0.1, 0.2, 0.35, 0.6};
  const std::vector<int> npts = {1, 4, 16, 32};
  auto reports = jl_grid(pool, 4, eps, npts, 2000, RngStream(61, 1));
  REQUIRE(reports.size() == eps.size() * npts.size());
  auto failure = [&](double e, int np) {
    for (const auto& r : reports)
      if (r.epsilon == e && r.num_points == np) return r.empirical_failure;
    REQUIRE(false);
    return 0.0;
  };
  // shared projection draws make both monotonicities exact, not statistical
  for (int np : npts)
    for (std::size_t i = 1; i < eps.size(); ++i)
      CHECK(failure(eps[i], np) <= failure(eps[i - 1], np));
  for (double e : eps)
    for (std::size_t j = 1; j < npts.size(); ++j)
      CHECK(failure(e, npts[j]) >= failure(e, npts[j - 1]));
}

TEST_CASE("jl_concentration matches the one-cell grid") {
  std::vector<VectorXd> pool;
  RngStream rng(62, 0);
  for (int i = 0; i < 10; ++i) pool.push_back(random_vec(12, rng));
  auto one = jl_concentration(pool, 5, 0.3, 500, RngStream(62, 1));
  auto grid = jl_grid(pool, 5, {0.3}, {10}, 500, RngStream(62, 1));
  REQUIRE(grid.size() == 1);
  CHECK(one.empirical_failure == grid[0].empirical_failure);
}

TEST_CASE("jl single point: failure is direction-free (Haar invariance)") {
  const int n = 16, k = 4, trials = 4000;
  std::vector<VectorXd> e1 = {VectorXd::Unit(n, 0)};
  std::vector<VectorXd> en = {VectorXd::Unit(n, n - 1) * 2.5};  // scale is irrelevant too
  auto a = jl_concentration(e1, k, 0.25, trials, RngStream(63, 0));
  auto b = jl_concentration(en, k, 0.25, trials, RngStream(63, 1));
  CHECK(a.empirical_failure > 0.05);  // the regime is genuinely noisy
  const double pool = 0.5 * (a.empirical_failure + b.empirical_failure);
  const double se = std::sqrt(2.0 * pool * (1.0 - pool) / trials);
  CHECK(std::abs(a.empirical_failure - b.empirical_failure) <= 3.0 * se);
}

TEST_CASE("jl bound and regime formulas") {
  JLReport r;
  r.n = 100;
  r.k = 25;
  r.epsilon = 0.5;
  r.num_points = 10;
  r.trials = 100;
  CHECK(r.bound_failure(2.0) ==
        doctest::Approx(std::sqrt(oracle::kPi / 2.0) * std::exp(-0.25 * 25 / 2.0)).epsilon(1e-12));
  // regime: eps > sqrt(c/k) and N < exp(eps^2 k / c)
  CHECK(r.in_regime(2.0));       // 0.5 > sqrt(0.08), 10 < e^{3.125}
  CHECK_FALSE(r.in_regime(8.0)); // 0.5 < sqrt(0.32)
}

TEST_CASE("fit_jl_constant covers every constrained cell") {
  std::vector<JLReport> reports;
  for (double e : {0.3, 0.5}) {
    for (int k : {10, 20}) {
      JLReport r;
      r.n = 64;
      r.k = k;
      r.epsilon = e;
      r.num_points = 4;
      r.trials = 2000;
      r.empirical_failure = 0.02 + 0.1 * e;
      reports.push_back(r);
    }
  }
  const double c = fit_jl_constant(reports);
  CHECK(c > 0.0);
  for (const auto& r : reports) {
    const double sigma = std::sqrt(r.empirical_failure * (1.0 - r.empirical_failure) / r.trials);
    CHECK(r.bound_failure(c) >= r.empirical_failure + 3.0 * sigma - 1e-12);
  }
  // an all-zero grid imposes no constraint
  for (auto& r : reports) r.empirical_failure = 0.0;
  CHECK(fit_jl_constant(reports) == 0.0);
}

TEST_CASE("jl input validation") {
  std::vector<VectorXd> pool = {VectorXd::Unit(4, 0)};
  CHECK_THROWS_AS(jl_grid({}, 2, {0.5}, {1}, 10, RngStream(64, 0)), std::invalid_argument);
  CHECK_THROWS_AS(jl_grid(pool, 5, {0.5}, {1}, 10, RngStream(64, 0)), std::invalid_argument);
  CHECK_THROWS_AS(jl_grid(pool, 2, {0.5}, {2}, 10, RngStream(64, 0)), std::invalid_argument);
  CHECK_THROWS_AS(jl_grid(pool, 2, {0.5}, {1}, 0, RngStream(64, 0)), std::invalid_argument);
  std::vector<VectorXd> zero = {VectorXd::Zero(4)};
  CHECK_THROWS_AS(jl_grid(zero, 2, {0.5}, {1}, 10, RngStream(64, 0)), std::invalid_argument);
}

TEST_SUITE_END();
