#include "qclab/projections.hpp"

#include <cmath>
#include <stdexcept>

#include "qclab/functionals.hpp"
#include "qclab/parallel.hpp"

namespace qclab {

ProjectionOp::ProjectionOp(MatrixXd basis) : basis_(std::move(basis)) {
  if (basis_.rows() < 1 || basis_.cols() < 0 || basis_.cols() > basis_.rows())
    throw std::invalid_argument("projection basis must be n x k with k <= n");
  const MatrixXd gram = basis_.transpose() * basis_;
  if (!gram.isIdentity(1e-10)) throw std::invalid_argument("projection basis is not orthonormal");
}

bool gram_schmidt(MatrixXd& g) {
  const int k = static_cast<int>(g.cols());
  for (int j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) g.col(j) -= g.col(i).dot(g.col(j)) * g.col(i);
    }
    const double norm = g.col(j).norm();
    if (norm < 1e-8) return false;
    g.col(j) /= norm;
  }
  return true;
}

MatrixXd haar_basis(int n, int k, const RngStream& rng) {
  if (k < 1 || k > n) throw std::invalid_argument("haar_basis: need 1 <= k <= n");
  MatrixXd g(n, k);
  for (int redraw = 0;; ++redraw) {
    for (int j = 0; j < k; ++j) {
      RngStream col = rng.substream(static_cast<std::uint64_t>(j) |
                                    (static_cast<std::uint64_t>(redraw) << 32));
      for (int i = 0; i < n; ++i) g(i, j) = col.gaussian();
    }
    if (gram_schmidt(g)) return g;
    if (redraw > 16) throw std::runtime_error("haar_basis: persistent rank deficiency");
  }
}

ProjectionOp haar_projection(int n, int k, const RngStream& rng) {
  return ProjectionOp(haar_basis(n, k, rng));
}

MatrixXd haar_orthogonal(int n, const RngStream& rng) { return haar_basis(n, n, rng); }

ProjectionOp complement(const ProjectionOp& proj) {
  const int n = proj.ambient_dim();
  const int k = proj.rank();
  if (k == n) return ProjectionOp(MatrixXd::Zero(n, 0));
  // Full Householder Q of the basis: first k columns span the range, the rest
  // span the complement.
  Eigen::HouseholderQR<MatrixXd> qr(proj.basis());
  const MatrixXd full = qr.householderQ() * MatrixXd::Identity(n, n);
  return ProjectionOp(full.rightCols(n - k));
}

double JLReport::bound_failure(double c) const {
  return std::sqrt(M_PI / 2.0) * std::exp(-epsilon * epsilon * k / c);
}

bool JLReport::in_regime(double c) const {
  return epsilon > std::sqrt(c / k) && num_points < std::exp(epsilon * epsilon * k / c);
}

std::vector<JLReport> jl_grid(const std::vector<VectorXd>& point_pool, int k,
                              const std::vector<double>& epsilons,
                              const std::vector<int>& num_points, std::int64_t trials,
                              const RngStream& rng) {
  if (point_pool.empty()) throw std::invalid_argument("jl_grid: empty point set");
  const int n = static_cast<int>(point_pool.front().size());
  if (k < 1 || k > n) throw std::invalid_argument("jl_grid: need 1 <= k <= n");
  if (trials < 1) throw std::invalid_argument("jl_grid: trials must be >= 1");
  std::vector<double> norms;
  norms.reserve(point_pool.size());
  for (const VectorXd& y : point_pool) {
    if (y.size() != n) throw std::invalid_argument("jl_grid: mixed point dimensions");
    const double norm = y.norm();
    if (norm == 0.0) throw std::invalid_argument("jl_grid: zero point in input");
    norms.push_back(norm);
  }
  for (int np : num_points)
    if (np < 1 || static_cast<std::size_t>(np) > point_pool.size())
      throw std::invalid_argument("jl_grid: num_points outside the pool");
  for (double eps : epsilons)
    if (!(eps > 0.0)) throw std::invalid_argument("jl_grid: epsilon must be > 0");

  const double a_nk = factor_A(n, k);
  const double scale = a_nk * std::sqrt(static_cast<double>(k) / n);

  // Per trial and point, the relative deviation | |Py|/(A sqrt(k/n) |y|) - 1 |.
  // A cell (eps, N) fails the trial when the running max over the first N
  // points exceeds eps, so one pass serves the whole grid.
  const std::size_t pool = point_pool.size();
  std::vector<double> max_dev(static_cast<std::size_t>(trials) * pool);
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t trial) {
    const MatrixXd basis = haar_basis(n, k, rng.substream(trial));
    double running = 0.0;
    for (std::size_t j = 0; j < pool; ++j) {
      const double ratio = (basis.transpose() * point_pool[j]).norm() / (scale * norms[j]);
      running = std::max(running, std::abs(ratio - 1.0));
      max_dev[trial * pool + j] = running;
    }
  });

  std::vector<JLReport> reports;
  reports.reserve(epsilons.size() * num_points.size());
  for (double eps : epsilons) {
    for (int np : num_points) {
      std::int64_t failures = 0;
      for (std::int64_t t = 0; t < trials; ++t)
        if (max_dev[static_cast<std::size_t>(t) * pool + (np - 1)] > eps) ++failures;
      JLReport rep;
      rep.n = n;
      rep.k = k;
      rep.epsilon = eps;
      rep.num_points = np;
      rep.trials = trials;
      rep.empirical_failure = static_cast<double>(failures) / static_cast<double>(trials);
      rep.seed = rng.seed();
      reports.push_back(rep);
    }
  }
  return reports;
}

JLReport jl_concentration(const std::vector<VectorXd>& points, int k, double epsilon,
                          std::int64_t trials, const RngStream& rng) {
  return jl_grid(points, k, {epsilon}, {static_cast<int>(points.size())}, trials, rng).front();
}

double fit_jl_constant(const std::vector<JLReport>& reports) {
  const double cap = std::sqrt(M_PI / 2.0);
  double c = 0.0;
  for (const JLReport& rep : reports) {
    const double sigma = std::sqrt(rep.empirical_failure * (1.0 - rep.empirical_failure) /
                                   static_cast<double>(rep.trials));
    const double target = rep.empirical_failure + 3.0 * sigma;
    if (target <= 0.0 || target >= cap) continue;
    c = std::max(c, rep.epsilon * rep.epsilon * rep.k / std::log(cap / target));
  }
  return c;
}

}  // namespace qclab
