#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qclab/rng.hpp"

namespace qclab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Convexity class declared for a body: plain star body, quasi-convex with
// constant c (K+K inside c*K), or p-convex with p in (0,1]. p = 1 is the
// ordinary convex case.
enum class BodyClassKind { Star, QuasiConvex, PConvex };

struct BodyClass {
  BodyClassKind kind = BodyClassKind::Star;
  double param = 0.0;  // c for QuasiConvex, p for PConvex

  static BodyClass star() { return {BodyClassKind::Star, 0.0}; }
  static BodyClass quasi_convex(double c);
  static BodyClass p_convex(double p);

  bool is_p_convex() const { return kind == BodyClassKind::PConvex; }
  bool is_convex() const { return kind == BodyClassKind::PConvex && param == 1.0; }

  // a with K+K (= K-K for symmetric K) inside a*K: 2^{1/p} for p-convex, c for
  // quasi-convex. Star bodies carry no such constant.
  double doubling_constant() const;
};

// Centrally symmetric compact star body, represented by its gauge. Immutable
// after construction and safe to share across threads.
class Body {
 public:
  virtual ~Body() = default;

  int dim() const { return dim_; }
  const std::string& label() const { return label_; }
  const BodyClass& body_class() const { return class_; }

  // Gauge (Minkowski functional). Throws on dimension mismatch or non-finite
  // coordinates.
  double gauge(const VectorXd& x) const;

  // Support function h_K(u) when a closed form exists (ellipsoids, lp balls
  // with p >= 1, scalings and linear images of those).
  virtual std::optional<double> support_exact(const VectorXd& u) const { return std::nullopt; }

  // log(vol K) when a closed form exists.
  virtual std::optional<double> log_volume() const { return std::nullopt; }

  // Mean euclidean norm of a uniform point of the body, when exact.
  virtual std::optional<double> exact_mean_radius() const { return std::nullopt; }

  // One point uniform in the body. Default: rejection sampling from the axis
  // bounding box, only tolerable in low dimension.
  virtual VectorXd sample_uniform(RngStream& rng) const;

  // Half-widths of an axis-aligned box containing the body.
  virtual VectorXd axis_bounds() const;

 protected:
  Body(int dim, BodyClass cls, std::string label);
  virtual double gauge_impl(const VectorXd& x) const = 0;

  // Unbounded-body guard: probes random sphere directions and rejects if the
  // gauge falls below 1e-9 anywhere. Concrete constructors call this last.
  void check_gauge_positive() const;

 private:
  int dim_;
  BodyClass class_;
  std::string label_;
};

using BodyPtr = std::shared_ptr<const Body>;

// Ball of l_p in n dimensions, gauge (sum |x_i|^p)^{1/p}. p-convex for p <= 1,
// convex for p >= 1.
class LpBall : public Body {
 public:
  LpBall(double p, int n);
  double p() const { return p_; }
  std::optional<double> support_exact(const VectorXd& u) const override;
  std::optional<double> log_volume() const override;
  std::optional<double> exact_mean_radius() const override;
  VectorXd sample_uniform(RngStream& rng) const override;
  VectorXd axis_bounds() const override;

 protected:
  double gauge_impl(const VectorXd& x) const override;

 private:
  double p_;
};

// Ellipsoid {x : x^T M x <= 1} for symmetric positive definite M; gauge
// sqrt(x^T M x). M = I is the euclidean ball D.
class EllipsoidBody : public Body {
 public:
  explicit EllipsoidBody(MatrixXd shape, std::string label = "");
  const MatrixXd& shape() const { return shape_; }
  bool is_unit_ball() const { return is_identity_; }
  std::optional<double> support_exact(const VectorXd& u) const override;
  std::optional<double> log_volume() const override;
  std::optional<double> exact_mean_radius() const override;
  VectorXd sample_uniform(RngStream& rng) const override;
  VectorXd axis_bounds() const override;

 protected:
  double gauge_impl(const VectorXd& x) const override;

 private:
  MatrixXd shape_;       // M
  MatrixXd chol_lower_;  // L with M = L L^T
  MatrixXd inv_shape_;   // M^{-1}
  bool is_identity_;
};

// t*K for t > 0.
class ScaledBody : public Body {
 public:
  ScaledBody(BodyPtr inner, double factor);
  std::optional<double> support_exact(const VectorXd& u) const override;
  std::optional<double> log_volume() const override;
  VectorXd sample_uniform(RngStream& rng) const override;
  VectorXd axis_bounds() const override;

 protected:
  double gauge_impl(const VectorXd& x) const override;

 private:
  BodyPtr inner_;
  double factor_;
};

// A*K for invertible A.
class LinearImageBody : public Body {
 public:
  LinearImageBody(BodyPtr inner, MatrixXd map);
  std::optional<double> support_exact(const VectorXd& u) const override;
  std::optional<double> log_volume() const override;
  VectorXd sample_uniform(RngStream& rng) const override;

 protected:
  double gauge_impl(const VectorXd& x) const override;

 private:
  BodyPtr inner_;
  MatrixXd map_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  double log_abs_det_;
};

BodyPtr make_lp_ball(double p, int n);
BodyPtr make_euclidean_ball(int n);
BodyPtr make_ellipsoid(MatrixXd shape, std::string label = "");
BodyPtr scale_body(BodyPtr body, double t);
BodyPtr linear_image(BodyPtr body, MatrixXd map);

// Descriptor grammar: lp(p=<real>,n=<int>) | ellipsoid(diag=<csv>) |
// scale(<body>,<t>) | linimg(<body>,<matrix-file>). Matrix files are
// whitespace-separated rows of reals.
BodyPtr parse_body(const std::string& descriptor);
MatrixXd read_matrix_file(const std::string& path);

// h_K(u), exact where a closed form exists, otherwise the max of <u,x> over a
// uniform sample cloud (the support function of the convex hull, from below).
double support_function(const Body& body, const VectorXd& u, int cloud_size = 20000,
                        std::uint64_t seed = 0);

// Lower estimate of the quasi-convexity constant sup |x+y| / max(|x|,|y|)
// over `budget` random pairs plus the deterministic +-e_i, +-e_j family.
double quasi_constant(const Body& body, int budget, std::uint64_t seed);

// Upper estimate of the Aoki-Rolewicz q-convex envelope gauge at x, searching
// decompositions of at most `depth` parts; q solves 2^{1/q} = 2c.
double aoki_rolewicz_gauge(const Body& body, const VectorXd& x, int depth);

// q with 2^{1/q} = 2c for this body's quasi-convexity constant c.
double aoki_rolewicz_exponent(const BodyClass& cls);

}  // namespace qclab
