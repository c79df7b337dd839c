#include "qclab/body.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace qclab {

namespace {

constexpr double kPositivityTol = 1e-9;
constexpr int kPositivityProbes = 1000;
constexpr long kRejectionCap = 100000000L;

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Uniform point in the euclidean unit ball: gaussian direction, radius U^{1/n}.
VectorXd sample_unit_ball(int n, RngStream& rng) {
  VectorXd g(n);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < n; ++i) g[i] = rng.gaussian();
    norm2 = g.squaredNorm();
  } while (norm2 == 0.0);
  const double r = std::pow(rng.uniform01(), 1.0 / n);
  return g * (r / std::sqrt(norm2));
}

}  // namespace

BodyClass BodyClass::quasi_convex(double c) {
  if (!(c >= 1.0) || !std::isfinite(c))
    throw std::invalid_argument("quasi-convexity constant must be >= 1");
  return {BodyClassKind::QuasiConvex, c};
}

BodyClass BodyClass::p_convex(double p) {
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("p-convexity requires p in (0,1]");
  return {BodyClassKind::PConvex, p};
}

double BodyClass::doubling_constant() const {
  switch (kind) {
    case BodyClassKind::PConvex:
      return std::pow(2.0, 1.0 / param);
    case BodyClassKind::QuasiConvex:
      return param;
    default:
      throw std::invalid_argument("star body carries no quasi-convexity constant");
  }
}

Body::Body(int dim, BodyClass cls, std::string label)
    : dim_(dim), class_(cls), label_(std::move(label)) {
  if (dim < 1) throw std::invalid_argument("body dimension must be >= 1");
}

double Body::gauge(const VectorXd& x) const {
  if (x.size() != dim_)
    throw std::invalid_argument("gauge: point has dimension " + std::to_string(x.size()) +
                                ", body has " + std::to_string(dim_));
  if (!x.allFinite()) throw std::invalid_argument("gauge: non-finite coordinates");
  return gauge_impl(x);
}

void Body::check_gauge_positive() const {
  RngStream probe(0x5eedu, static_cast<std::uint64_t>(dim_));
  VectorXd g(dim_);
  for (int trial = 0; trial < kPositivityProbes; ++trial) {
    for (int i = 0; i < dim_; ++i) g[i] = probe.gaussian();
    const double norm = g.norm();
    if (norm == 0.0) continue;
    if (gauge_impl(g / norm) < kPositivityTol)
      throw std::invalid_argument("body '" + label_ + "' looks unbounded (gauge < 1e-9 on the sphere)");
  }
}

VectorXd Body::axis_bounds() const {
  // Probe: boundary points along random directions, inflated.
  RngStream probe(0xb0b5u, static_cast<std::uint64_t>(dim_));
  VectorXd bounds = VectorXd::Zero(dim_);
  VectorXd g(dim_);
  for (int trial = 0; trial < 4096; ++trial) {
    for (int i = 0; i < dim_; ++i) g[i] = probe.gaussian();
    const double norm = g.norm();
    if (norm == 0.0) continue;
    const double gv = gauge_impl(g);
    if (gv <= 0.0) continue;
    bounds = bounds.cwiseMax((g / gv).cwiseAbs());
  }
  return bounds * 1.5;
}

VectorXd Body::sample_uniform(RngStream& rng) const {
  if (dim_ > 6)
    throw std::invalid_argument("body '" + label_ +
                                "' has no exact sampler; rejection fallback is limited to dim <= 6");
  const VectorXd bounds = axis_bounds();
  VectorXd x(dim_);
  for (long attempt = 0; attempt < kRejectionCap; ++attempt) {
    for (int i = 0; i < dim_; ++i) x[i] = rng.uniform(-bounds[i], bounds[i]);
    if (gauge_impl(x) <= 1.0) return x;
  }
  throw std::runtime_error("body too thin for rejection sampling");
}

// ---------------------------------------------------------------- LpBall

LpBall::LpBall(double p, int n)
    : Body(n, p <= 1.0 ? BodyClass::p_convex(p) : BodyClass::p_convex(1.0),
           "lp(p=" + format_real(p) + ",n=" + std::to_string(n) + ")"),
      p_(p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("lp ball requires p > 0");
  check_gauge_positive();
}

double LpBall::gauge_impl(const VectorXd& x) const {
  if (p_ == 1.0) return x.lpNorm<1>();
  if (p_ == 2.0) return x.norm();
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]), p_);
  return std::pow(s, 1.0 / p_);
}

std::optional<double> LpBall::support_exact(const VectorXd& u) const {
  if (p_ < 1.0) return std::nullopt;  // support of the convex hull = l_1 hull; use cloud path
  if (p_ == 1.0) return u.cwiseAbs().maxCoeff();
  const double q = p_ / (p_ - 1.0);
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) s += std::pow(std::abs(u[i]), q);
  return std::pow(s, 1.0 / q);
}

std::optional<double> LpBall::log_volume() const {
  const double n = static_cast<double>(dim());
  return n * (std::log(2.0) + std::lgamma(1.0 + 1.0 / p_)) - std::lgamma(1.0 + n / p_);
}

std::optional<double> LpBall::exact_mean_radius() const { return std::nullopt; }

// Exact uniform sampler for any p > 0: coordinates s_i * Y_i with Y_i drawn
// from density ~ exp(-t^p) on [0,inf), random signs, normalized by
// (sum Y_i^p + W)^{1/p} with W standard exponential. Y_i comes from the
// inverse regularized incomplete gamma function (declared in functionals.cpp,
// shared through this hook).
double sample_power_exponential(double p, RngStream& rng);  // defined in functionals.cpp

VectorXd LpBall::sample_uniform(RngStream& rng) const {
  const int n = dim();
  VectorXd y(n);
  double sum_p = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = sample_power_exponential(p_, rng);
    const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    y[i] = sign * t;
    sum_p += std::pow(t, p_);
  }
  const double w = rng.exponential();
  const double denom = std::pow(sum_p + w, 1.0 / p_);
  if (denom == 0.0) return VectorXd::Zero(n);
  return y / denom;
}

VectorXd LpBall::axis_bounds() const { return VectorXd::Ones(dim()); }

// ------------------------------------------------------------ EllipsoidBody

EllipsoidBody::EllipsoidBody(MatrixXd shape, std::string label)
    : Body(static_cast<int>(shape.rows()),
           BodyClass::p_convex(1.0),
           label.empty() ? "ellipsoid(n=" + std::to_string(shape.rows()) + ")" : std::move(label)),
      shape_(std::move(shape)) {
  if (shape_.rows() != shape_.cols()) throw std::invalid_argument("ellipsoid shape must be square");
  if (!shape_.isApprox(shape_.transpose(), 1e-12))
    throw std::invalid_argument("ellipsoid shape must be symmetric");
  Eigen::LLT<MatrixXd> llt(shape_);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("ellipsoid shape must be positive definite");
  chol_lower_ = llt.matrixL();
  inv_shape_ = llt.solve(MatrixXd::Identity(shape_.rows(), shape_.cols()));
  is_identity_ = shape_.isIdentity(0.0);
  check_gauge_positive();
}

double EllipsoidBody::gauge_impl(const VectorXd& x) const {
  if (is_identity_) return x.norm();
  return (chol_lower_.transpose() * x).norm();
}

std::optional<double> EllipsoidBody::support_exact(const VectorXd& u) const {
  if (is_identity_) return u.norm();
  return std::sqrt(u.dot(inv_shape_ * u));
}

std::optional<double> EllipsoidBody::log_volume() const {
  const double n = static_cast<double>(dim());
  double log_det = 0.0;
  for (int i = 0; i < dim(); ++i) log_det += 2.0 * std::log(chol_lower_(i, i));
  return 0.5 * n * std::log(M_PI) - std::lgamma(0.5 * n + 1.0) - 0.5 * log_det;
}

std::optional<double> EllipsoidBody::exact_mean_radius() const {
  if (!is_identity_) return std::nullopt;
  const double n = static_cast<double>(dim());
  return n / (n + 1.0);
}

VectorXd EllipsoidBody::sample_uniform(RngStream& rng) const {
  VectorXd u = sample_unit_ball(dim(), rng);
  if (is_identity_) return u;
  chol_lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(u);
  return u;
}

VectorXd EllipsoidBody::axis_bounds() const { return inv_shape_.diagonal().cwiseSqrt(); }

// --------------------------------------------------------------- ScaledBody

ScaledBody::ScaledBody(BodyPtr inner, double factor)
    : Body(inner->dim(), inner->body_class(),
           "scale(" + inner->label() + "," + format_real(factor) + ")"),
      inner_(std::move(inner)),
      factor_(factor) {
  if (!(factor > 0.0) || !std::isfinite(factor))
    throw std::invalid_argument("scale factor must be positive and finite");
}

double ScaledBody::gauge_impl(const VectorXd& x) const { return inner_->gauge(x) / factor_; }

std::optional<double> ScaledBody::support_exact(const VectorXd& u) const {
  if (auto h = inner_->support_exact(u)) return *h * factor_;
  return std::nullopt;
}

std::optional<double> ScaledBody::log_volume() const {
  if (auto lv = inner_->log_volume()) return *lv + dim() * std::log(factor_);
  return std::nullopt;
}

VectorXd ScaledBody::sample_uniform(RngStream& rng) const {
  return factor_ * inner_->sample_uniform(rng);
}

VectorXd ScaledBody::axis_bounds() const { return factor_ * inner_->axis_bounds(); }

// ---------------------------------------------------------- LinearImageBody

LinearImageBody::LinearImageBody(BodyPtr inner, MatrixXd map)
    : Body(inner->dim(), inner->body_class(), "linimg(" + inner->label() + ")"),
      inner_(std::move(inner)),
      map_(std::move(map)) {
  if (map_.rows() != map_.cols() || map_.rows() != inner_->dim())
    throw std::invalid_argument("linear image map must be square of the body dimension");
  Eigen::FullPivLU<MatrixXd> full(map_);
  if (!full.isInvertible()) throw std::invalid_argument("linear image map must be invertible");
  lu_ = Eigen::PartialPivLU<MatrixXd>(map_);
  log_abs_det_ = 0.0;
  const MatrixXd& lum = lu_.matrixLU();
  for (int i = 0; i < lum.rows(); ++i) log_abs_det_ += std::log(std::abs(lum(i, i)));
  check_gauge_positive();
}

double LinearImageBody::gauge_impl(const VectorXd& x) const { return inner_->gauge(lu_.solve(x)); }

std::optional<double> LinearImageBody::support_exact(const VectorXd& u) const {
  return inner_->support_exact(map_.transpose() * u);
}

std::optional<double> LinearImageBody::log_volume() const {
  if (auto lv = inner_->log_volume()) return *lv + log_abs_det_;
  return std::nullopt;
}

VectorXd LinearImageBody::sample_uniform(RngStream& rng) const {
  return map_ * inner_->sample_uniform(rng);
}

// ------------------------------------------------------------------ factories

BodyPtr make_lp_ball(double p, int n) { return std::make_shared<LpBall>(p, n); }

BodyPtr make_euclidean_ball(int n) {
  return std::make_shared<EllipsoidBody>(MatrixXd::Identity(n, n),
                                         "ellipsoid(n=" + std::to_string(n) + ")");
}

BodyPtr make_ellipsoid(MatrixXd shape, std::string label) {
  return std::make_shared<EllipsoidBody>(std::move(shape), std::move(label));
}

BodyPtr scale_body(BodyPtr body, double t) { return std::make_shared<ScaledBody>(std::move(body), t); }

BodyPtr linear_image(BodyPtr body, MatrixXd map) {
  return std::make_shared<LinearImageBody>(std::move(body), std::move(map));
}

// ------------------------------------------------------------------- parser

namespace {

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("body descriptor error at position " + std::to_string(pos) + ": " +
                                what + " in '" + s + "'");
  }

  void expect(char c) {
    skip_ws();
    if (pos >= s.size() || s[pos] != c) fail(std::string("expected '") + c + "'");
    ++pos;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    if (pos == start) fail("expected identifier");
    return s.substr(start, pos - start);
  }

  double real() {
    skip_ws();
    std::size_t idx = 0;
    double v;
    try {
      v = std::stod(s.substr(pos), &idx);
    } catch (const std::exception&) {
      fail("expected a number");
    }
    pos += idx;
    return v;
  }

  long integer() {
    const double v = real();
    const long iv = static_cast<long>(v);
    if (static_cast<double>(iv) != v) fail("expected an integer");
    return iv;
  }

  // Text up to the next top-level ',' or ')'.
  std::string raw_until_delim() {
    skip_ws();
    std::size_t start = pos;
    int depth = 0;
    while (pos < s.size()) {
      const char c = s[pos];
      if (c == '(') ++depth;
      if (c == ')' && depth-- == 0) break;
      if (c == ',' && depth == 0) break;
      ++pos;
    }
    std::string out = s.substr(start, pos - start);
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
  }

  BodyPtr body() {
    const std::string name = ident();
    expect('(');
    BodyPtr result;
    if (name == "lp") {
      std::optional<double> p;
      std::optional<long> n;
      for (;;) {
        const std::string key = ident();
        expect('=');
        if (key == "p") {
          p = real();
        } else if (key == "n") {
          n = integer();
        } else {
          fail("unknown lp() key '" + key + "'");
        }
        skip_ws();
        if (pos < s.size() && s[pos] == ',') {
          ++pos;
          continue;
        }
        break;
      }
      if (!p || !n) fail("lp() needs both p= and n=");
      result = make_lp_ball(*p, static_cast<int>(*n));
    } else if (name == "ellipsoid") {
      const std::string key = ident();
      expect('=');
      if (key != "diag") fail("unknown ellipsoid() key '" + key + "'");
      std::vector<double> diag;
      diag.push_back(real());
      skip_ws();
      while (pos < s.size() && s[pos] == ',') {
        ++pos;
        diag.push_back(real());
        skip_ws();
      }
      MatrixXd m = MatrixXd::Zero(diag.size(), diag.size());
      for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
      std::string label = "ellipsoid(diag=";
      for (std::size_t i = 0; i < diag.size(); ++i)
        label += (i ? "," : "") + format_real(diag[i]);
      label += ")";
      result = make_ellipsoid(std::move(m), std::move(label));
    } else if (name == "scale") {
      BodyPtr inner = body();
      expect(',');
      const double t = real();
      result = scale_body(std::move(inner), t);
    } else if (name == "linimg") {
      BodyPtr inner = body();
      expect(',');
      const std::string path = raw_until_delim();
      if (path.empty()) fail("linimg() needs a matrix file path");
      result = linear_image(std::move(inner), read_matrix_file(path));
    } else {
      fail("unknown body kind '" + name + "'");
    }
    expect(')');
    return result;
  }
};

}  // namespace

BodyPtr parse_body(const std::string& descriptor) {
  Parser parser{descriptor};
  BodyPtr b = parser.body();
  parser.skip_ws();
  if (parser.pos != descriptor.size()) parser.fail("trailing characters");
  return b;
}

MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open matrix file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof() && ls.fail())
      throw std::invalid_argument("bad number in matrix file '" + path + "'");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("matrix file '" + path + "' is empty");
  const std::size_t cols = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != cols) throw std::invalid_argument("ragged rows in matrix file '" + path + "'");
  MatrixXd m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  return m;
}

// ------------------------------------------------------------- free operations

double support_function(const Body& body, const VectorXd& u, int cloud_size, std::uint64_t seed) {
  if (u.size() != body.dim()) throw std::invalid_argument("support_function: dimension mismatch");
  if (u.isZero(0.0)) throw std::invalid_argument("support_function: zero direction");
  if (auto h = body.support_exact(u)) return *h;
  // Cloud fallback: support of the convex hull, approached from below. The
  // body is symmetric, so |<u,x>| doubles the effective cloud.
  RngStream rng(seed, 0x50bbu);
  double best = 0.0;
  for (int i = 0; i < cloud_size; ++i) {
    const VectorXd x = body.sample_uniform(rng);
    best = std::max(best, std::abs(u.dot(x)));
  }
  return best;
}

double quasi_constant(const Body& body, int budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("quasi_constant: budget must be >= 1");
  const int n = body.dim();
  double best = 1.0;
  auto consider = [&](const VectorXd& x, const VectorXd& y) {
    const double gx = body.gauge(x);
    const double gy = body.gauge(y);
    const double denom = std::max(gx, gy);
    if (denom <= 0.0) return;
    best = std::max(best, body.gauge(x + y) / denom);
  };

  // Deterministic family +-e_i +- e_j, capped for large n.
  const long kPairCap = 20000;
  long pairs = 0;
  VectorXd x = VectorXd::Zero(n), y = VectorXd::Zero(n);
  for (int i = 0; i < n && pairs < kPairCap; ++i) {
    for (int j = i; j < n && pairs < kPairCap; ++j) {
      for (const double si : {1.0, -1.0}) {
        for (const double sj : {1.0, -1.0}) {
          x.setZero();
          y.setZero();
          x[i] = si;
          y[j] = sj;
          consider(x, y);
        }
      }
      ++pairs;
    }
  }

  // Random pairs on per-pair substreams, so a larger budget extends a smaller
  // one and the estimate grows monotonically.
  RngStream root(seed, 0x9c01u);
  for (int k = 0; k < budget; ++k) {
    RngStream pair_rng = root.substream(static_cast<std::uint64_t>(k));
    VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) a[i] = pair_rng.gaussian();
    for (int i = 0; i < n; ++i) b[i] = pair_rng.gaussian();
    if (a.norm() == 0.0 || b.norm() == 0.0) continue;
    a.normalize();
    b.normalize();
    b *= std::exp(pair_rng.uniform(-1.5, 1.5));
    consider(a, b);
  }
  return best;
}

double aoki_rolewicz_exponent(const BodyClass& cls) {
  const double two_c = 2.0 * cls.doubling_constant();
  return std::log(2.0) / std::log(two_c);
}

namespace {

// Bounded-depth decomposition search for the q-convex envelope. Splits are
// two-part along coordinate axes, the point's own direction, and a fixed
// seeded direction set, with a coarse scan plus golden-section refinement of
// the split magnitude.
class EnvelopeSearch {
 public:
  EnvelopeSearch(const Body& body, double q) : body_(body), q_(q) {
    const int n = body.dim();
    dirs_.reserve(n + 9);
    for (int i = 0; i < n; ++i) dirs_.push_back(VectorXd::Unit(n, i));
    RngStream rng(0xa0c1u, static_cast<std::uint64_t>(n));
    for (int k = 0; k < 8; ++k) {
      VectorXd d(n);
      for (int i = 0; i < n; ++i) d[i] = rng.gaussian();
      if (d.norm() > 0.0) dirs_.push_back(d.normalized());
    }
  }

  double run(const VectorXd& x, int depth) {
    if (x.isZero(0.0)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int d = 1; d <= depth; ++d) best = std::min(best, raw(x, d));
    return best;
  }

 private:
  double qsum(double a, double b) const {
    return std::pow(std::pow(a, q_) + std::pow(b, q_), 1.0 / q_);
  }

  double raw(const VectorXd& x, int depth) {
    const double whole = body_.gauge(x);
    if (depth <= 1 || whole == 0.0) return whole;
    const int d1 = (depth + 1) / 2;
    const int d2 = depth / 2;
    const double radius = 2.0 * x.norm();
    double best = whole;
    std::vector<VectorXd> dirs = dirs_;
    dirs.push_back(x.normalized());
    for (const VectorXd& dir : dirs) {
      const double part_dir = raw(dir, d1);  // homogeneous: raw(s*dir) = |s| * raw(dir)
      auto value = [&](double s) {
        return qsum(std::abs(s) * part_dir, raw_rest(x - s * dir, d2));
      };
      // Coarse scan, then golden-section around the best cell.
      const int grid = 32;
      double best_s = 0.0, best_v = whole;
      for (int i = -grid; i <= grid; ++i) {
        const double s = radius * i / grid;
        const double v = value(s);
        if (v < best_v) {
          best_v = v;
          best_s = s;
        }
      }
      double lo = best_s - radius / grid, hi = best_s + radius / grid;
      const double gr = 0.6180339887498949;
      double c = hi - gr * (hi - lo), dpt = lo + gr * (hi - lo);
      double fc = value(c), fd = value(dpt);
      for (int it = 0; it < 48; ++it) {
        if (fc < fd) {
          hi = dpt;
          dpt = c;
          fd = fc;
          c = hi - gr * (hi - lo);
          fc = value(c);
        } else {
          lo = c;
          c = dpt;
          fc = fd;
          dpt = lo + gr * (hi - lo);
          fd = value(dpt);
        }
      }
      best = std::min({best, best_v, fc, fd});
    }
    return best;
  }

  double raw_rest(const VectorXd& x, int depth) {
    if (depth <= 1) return body_.gauge(x);
    return raw(x, depth);
  }

  const Body& body_;
  double q_;
  std::vector<VectorXd> dirs_;
};

}  // namespace

double aoki_rolewicz_gauge(const Body& body, const VectorXd& x, int depth) {
  if (depth < 1) throw std::invalid_argument("aoki_rolewicz_gauge: depth must be >= 1");
  if (x.size() != body.dim()) throw std::invalid_argument("aoki_rolewicz_gauge: dimension mismatch");
  const double q = aoki_rolewicz_exponent(body.body_class());
  EnvelopeSearch search(body, q);
  return search.run(x, depth);
}

}  // namespace qclab
