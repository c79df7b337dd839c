#include "qclab/functionals.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "qclab/parallel.hpp"

namespace qclab {

namespace {

constexpr std::int64_t kShardSize = 8192;

// Mean/stderr from per-shard (sum, sum of squares) partials combined in shard
// order, so the result does not depend on the worker count.
MCEstimate reduce_shards(const std::vector<double>& sums, const std::vector<double>& sumsqs,
                         std::int64_t count, std::uint64_t seed) {
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    sum += sums[i];
    sumsq += sumsqs[i];
  }
  MCEstimate est;
  est.samples = count;
  est.seed = seed;
  est.value = sum / static_cast<double>(count);
  if (count > 1) {
    const double var = std::max(0.0, (sumsq - sum * est.value) / static_cast<double>(count - 1));
    est.std_error = std::sqrt(var / static_cast<double>(count));
  }
  return est;
}

// Shards `count` evaluations of sample_value(shard_rng) into fixed blocks.
MCEstimate sharded_mean(std::int64_t count, const RngStream& rng,
                        const std::function<double(RngStream&)>& sample_value) {
  if (count < 1) throw std::invalid_argument("estimator needs count >= 1");
  const std::int64_t num_shards = (count + kShardSize - 1) / kShardSize;
  std::vector<double> sums(num_shards, 0.0), sumsqs(num_shards, 0.0);
  parallel_for(static_cast<std::size_t>(num_shards), [&](std::size_t shard) {
    RngStream sub = rng.substream(shard);
    const std::int64_t begin = static_cast<std::int64_t>(shard) * kShardSize;
    const std::int64_t end = std::min(count, begin + kShardSize);
    double s = 0.0, s2 = 0.0;
    for (std::int64_t i = begin; i < end; ++i) {
      const double v = sample_value(sub);
      s += v;
      s2 += v * v;
    }
    sums[shard] = s;
    sumsqs[shard] = s2;
  });
  return reduce_shards(sums, sumsqs, count, rng.seed());
}

VectorXd sphere_point(int n, RngStream& rng) {
  VectorXd g(n);
  double norm = 0.0;
  do {
    for (int i = 0; i < n; ++i) g[i] = rng.gaussian();
    norm = g.norm();
  } while (norm == 0.0);
  return g / norm;
}

}  // namespace

double sample_power_exponential(double p, RngStream& rng) {
  // Substituting s = t^p turns the density ~exp(-t^p) into Gamma(1/p), so the
  // inverse regularized incomplete gamma gives an exact loop-free draw.
  const double u = rng.uniform01();
  const double a = 1.0 / p;
  double g;
  if (a == 1.0) {
    g = -std::log1p(-u);  // Gamma(1) is the standard exponential
  } else {
    g = boost::math::gamma_p_inv(a, u);
  }
  return std::pow(g, 1.0 / p);
}

std::vector<VectorXd> sample_sphere(int n, int count, RngStream& rng) {
  if (n < 1 || count < 1) throw std::invalid_argument("sample_sphere: n and count must be >= 1");
  std::vector<VectorXd> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) pts.push_back(sphere_point(n, rng));
  return pts;
}

std::vector<VectorXd> sample_body_uniform(const Body& body, int count, RngStream& rng) {
  if (count < 1) throw std::invalid_argument("sample_body_uniform: count must be >= 1");
  std::vector<VectorXd> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) pts.push_back(body.sample_uniform(rng));
  return pts;
}

MCEstimate estimate_M(const Body& body, std::int64_t count, const RngStream& rng) {
  if (count < 2) throw std::invalid_argument("estimate_M: count must be >= 2");
  const int n = body.dim();
  return sharded_mean(count, rng,
                      [&body, n](RngStream& r) { return body.gauge(sphere_point(n, r)); });
}

MCEstimate estimate_M_star(const Body& body, std::int64_t count, const RngStream& rng,
                           int cloud_size) {
  if (count < 2) throw std::invalid_argument("estimate_M_star: count must be >= 2");
  const int n = body.dim();
  const VectorXd probe = VectorXd::Unit(n, 0);
  if (body.support_exact(probe)) {
    return sharded_mean(count, rng, [&body, n](RngStream& r) {
      return *body.support_exact(sphere_point(n, r));
    });
  }
  // No closed form: one shared cloud, max |<u,x>| per direction (symmetric
  // body, so the reflected cloud comes free).
  RngStream cloud_rng = rng.substream(0xc10dull);
  const std::vector<VectorXd> cloud = sample_body_uniform(body, cloud_size, cloud_rng);
  return sharded_mean(count, rng, [&cloud, n](RngStream& r) {
    const VectorXd u = sphere_point(n, r);
    double best = 0.0;
    for (const VectorXd& x : cloud) best = std::max(best, std::abs(u.dot(x)));
    return best;
  });
}

MCEstimate estimate_MKB(const Body& K, const Body& B, std::int64_t count, const RngStream& rng) {
  if (count < 2) throw std::invalid_argument("estimate_MKB: count must be >= 2");
  if (K.dim() != B.dim()) throw std::invalid_argument("estimate_MKB: dimension mismatch");
  return sharded_mean(count, rng,
                      [&K, &B](RngStream& r) { return B.gauge(K.sample_uniform(r)); });
}

double factor_A(int n, int k) {
  if (k < 1 || k > n) throw std::invalid_argument("factor_A: need 1 <= k <= n");
  if (k == n) return 1.0;
  const double nn = n, kk = k;
  const double log_ratio = std::lgamma(0.5 * (kk + 1.0)) + std::lgamma(0.5 * nn) -
                           std::lgamma(0.5 * kk) - std::lgamma(0.5 * (nn + 1.0));
  return std::sqrt(nn / kk) * std::exp(log_ratio);
}

double estimate_c_theta(const Body& body, double theta, std::int64_t budget,
                        const RngStream& rng) {
  if (!(theta > 0.0) || theta > 2.0)
    throw std::invalid_argument("estimate_c_theta: theta must lie in (0,2]");
  if (budget < 1) throw std::invalid_argument("estimate_c_theta: budget must be >= 1");
  const int n = body.dim();

  auto ratio = [&](const VectorXd& x, const VectorXd& y) {
    const double gx = body.gauge(x);
    const double gy = body.gauge(y);
    const double denom = 2.0 * (std::pow(gx, theta) + std::pow(gy, theta));
    if (denom <= 0.0) return 0.0;
    const double num = std::pow(body.gauge(x + y), theta) + std::pow(body.gauge(x - y), theta);
    return std::pow(num / denom, 1.0 / theta);
  };

  // Deterministic families: (x, 0) pins the value 1, coordinate pairs catch
  // the axis-aligned extremes.
  double best = 1.0;
  const int det_cap = std::min(n, 64);
  for (int i = 0; i < det_cap; ++i) {
    for (int j = i + 1; j < det_cap; ++j)
      best = std::max(best, ratio(VectorXd::Unit(n, i), VectorXd::Unit(n, j)));
  }

  const std::int64_t num_shards = (budget + kShardSize - 1) / kShardSize;
  std::vector<double> shard_best(num_shards, 1.0);
  parallel_for(static_cast<std::size_t>(num_shards), [&](std::size_t shard) {
    RngStream sub = rng.substream(shard);
    const std::int64_t begin = static_cast<std::int64_t>(shard) * kShardSize;
    const std::int64_t end = std::min(budget, begin + kShardSize);
    double b = 1.0;
    for (std::int64_t i = begin; i < end; ++i) {
      VectorXd x = sphere_point(n, sub);
      VectorXd y = sphere_point(n, sub);
      y *= std::exp(sub.uniform(-1.5, 1.5));
      b = std::max(b, ratio(x, y));
    }
    shard_best[shard] = b;
  });
  for (double b : shard_best) best = std::max(best, b);
  return best;
}

}  // namespace qclab
