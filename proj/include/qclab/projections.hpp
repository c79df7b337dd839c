#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qclab/rng.hpp"

namespace qclab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Rank-k orthogonal projection of n-space, stored as an orthonormal basis of
// its range.
class ProjectionOp {
 public:
  ProjectionOp(MatrixXd basis);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int rank() const { return static_cast<int>(basis_.cols()); }
  const MatrixXd& basis() const { return basis_; }

  // P x, expressed in ambient coordinates.
  VectorXd apply(const VectorXd& x) const { return basis_ * (basis_.transpose() * x); }

  // Q^T x: coordinates of P x in the range basis; same euclidean norm as P x.
  VectorXd range_coords(const VectorXd& x) const { return basis_.transpose() * x; }

  double projected_norm(const VectorXd& x) const { return (basis_.transpose() * x).norm(); }

 private:
  MatrixXd basis_;
};

// Orthonormalizes the columns of g in place by modified Gram-Schmidt with one
// reorthogonalization pass. Returns false on numerical rank deficiency.
bool gram_schmidt(MatrixXd& g);

// Gaussian matrix with orthonormalized columns: a Haar-distributed
// k-dimensional subspace. Columns draw from per-column substreams, so the
// first k' columns match a rank-k' draw from the same stream.
MatrixXd haar_basis(int n, int k, const RngStream& rng);

ProjectionOp haar_projection(int n, int k, const RngStream& rng);

// Haar-distributed orthogonal n x n matrix.
MatrixXd haar_orthogonal(int n, const RngStream& rng);

// Projection onto the orthogonal complement; P + complement(P) acts as the
// identity.
ProjectionOp complement(const ProjectionOp& proj);

// Empirical Johnson-Lindenstrauss concentration for one (k, epsilon, N) cell.
struct JLReport {
  int n = 0;
  int k = 0;
  double epsilon = 0.0;
  int num_points = 0;
  std::int64_t trials = 0;
  double empirical_failure = 0.0;
  std::uint64_t seed = 0;

  // sqrt(pi/2) * exp(-eps^2 k / c)
  double bound_failure(double c) const;
  // eps > sqrt(c/k) and N < exp(eps^2 k / c)
  bool in_regime(double c) const;
};

// Per trial: Haar rank-k projection; failure if any point leaves the sandwich
// A(n,k) (1 +- eps) sqrt(k/n) |y|.
JLReport jl_concentration(const std::vector<VectorXd>& points, int k, double epsilon,
                          std::int64_t trials, const RngStream& rng);

// Batched form sharing the projection draws across epsilons and nested point
// counts: cell (epsilon_i, num_points_j) checks the first num_points_j points.
std::vector<JLReport> jl_grid(const std::vector<VectorXd>& point_pool, int k,
                              const std::vector<double>& epsilons,
                              const std::vector<int>& num_points, std::int64_t trials,
                              const RngStream& rng);

// Smallest c with bound_failure(c) >= empirical_failure + 3 binomial sigma on
// every report; reports whose adjusted failure is zero impose no constraint.
double fit_jl_constant(const std::vector<JLReport>& reports);

}  // namespace qclab
