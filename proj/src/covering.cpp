#include "qclab/covering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qclab/functionals.hpp"
#include "qclab/parallel.hpp"

namespace qclab {

namespace {

constexpr std::int64_t kShard = 8192;

std::string cap_message(std::int64_t partial, double t) {
  return "greedy_net: center cap reached at t = " + std::to_string(t) +
         "; partial count " + std::to_string(partial) + " is a lower bound";
}

std::vector<VectorXd> make_cloud(const Body& K, std::int64_t cloud_size, const RngStream& rng) {
  RngStream cloud_rng = rng.substream(0xc10cull);
  return sample_body_uniform(K, static_cast<int>(cloud_size), cloud_rng);
}

// Greedy body shared by greedy_net and the entropy bisection (which reuses
// one cloud across many radii).
CoveringReport greedy_on_cloud(std::vector<VectorXd> cloud, const Body& K, const Body& B,
                               double t, const GreedyOptions& opts, std::uint64_t seed) {
  const int n = K.dim();
  const std::int64_t count = static_cast<std::int64_t>(cloud.size());
  const std::int64_t shards = (count + kShard - 1) / kShard;

  // Distance of each cloud point to the nearest center so far; the origin is
  // the first center, so this starts as plain gauge_B.
  std::vector<double> dist(count);
  parallel_for(static_cast<std::size_t>(shards), [&](std::size_t shard) {
    const std::int64_t begin = static_cast<std::int64_t>(shard) * kShard;
    const std::int64_t end = std::min(count, begin + kShard);
    for (std::int64_t j = begin; j < end; ++j) dist[j] = B.gauge(cloud[j]);
  });

  double gauge_sum = 0.0;
  for (std::int64_t j = 0; j < count; ++j) gauge_sum += dist[j];

  std::vector<VectorXd> centers;
  centers.push_back(VectorXd::Zero(n));

  std::vector<double> shard_val(shards);
  std::vector<std::int64_t> shard_idx(shards);
  while (true) {
    parallel_for(static_cast<std::size_t>(shards), [&](std::size_t shard) {
      const std::int64_t begin = static_cast<std::int64_t>(shard) * kShard;
      const std::int64_t end = std::min(count, begin + kShard);
      double best = -1.0;
      std::int64_t best_j = begin;
      for (std::int64_t j = begin; j < end; ++j) {
        if (dist[j] > best) {
          best = dist[j];
          best_j = j;
        }
      }
      shard_val[shard] = best;
      shard_idx[shard] = best_j;
    });
    double far_val = -1.0;
    std::int64_t far_idx = 0;
    for (std::int64_t s = 0; s < shards; ++s) {
      if (shard_val[s] > far_val) {
        far_val = shard_val[s];
        far_idx = shard_idx[s];
      }
    }
    if (far_val <= t) break;
    if (static_cast<std::int64_t>(centers.size()) >= opts.center_cap)
      throw CenterCapExceeded(static_cast<std::int64_t>(centers.size()), t);

    const VectorXd center = opts.center_shrink * cloud[far_idx];
    centers.push_back(center);
    parallel_for(static_cast<std::size_t>(shards), [&](std::size_t shard) {
      const std::int64_t begin = static_cast<std::int64_t>(shard) * kShard;
      const std::int64_t end = std::min(count, begin + kShard);
      for (std::int64_t j = begin; j < end; ++j)
        dist[j] = std::min(dist[j], B.gauge(cloud[j] - center));
    });
  }

  CoveringReport report;
  report.t = t;
  report.upper_count = static_cast<std::int64_t>(centers.size());
  report.centers = std::move(centers);
  report.m_kb = gauge_sum / static_cast<double>(count);
  report.dim = n;
  report.cloud_size = count;
  report.seed = seed;
  report.center_shrink = opts.center_shrink;
  const auto log_k = K.log_volume();
  const auto log_b = B.log_volume();
  if (log_k && log_b) report.volume_lower = std::exp(*log_k - *log_b - n * std::log(t));
  const BodyClass& cls = B.body_class();
  report.a_cover = (cls.kind == BodyClassKind::Star) ? 0.0 : cls.doubling_constant();
  report.cloud = std::move(cloud);
  return report;
}

}  // namespace

CenterCapExceeded::CenterCapExceeded(std::int64_t partial_count, double t)
    : std::runtime_error(cap_message(partial_count, t)), partial_(partial_count) {}

double CoveringReport::lemma2_bound(double c_abs) const {
  if (a_cover <= 0.0) throw std::logic_error("covering body carries no doubling constant");
  const double x = a_cover * m_kb / t;
  return 2.0 * std::exp(c_abs * dim * x * x);
}

double CoveringReport::lemma4_bound(double c_abs, double theta, double c_theta) const {
  if (a_cover <= 0.0) throw std::logic_error("covering body carries no doubling constant");
  if (!(theta > 0.0) || !(c_theta > 0.0) || !(c_abs > 0.0))
    throw std::invalid_argument("lemma4_bound: parameters must be positive");
  return 2.0 * std::pow(c_theta, dim) *
         std::exp(c_abs * dim / theta * std::pow(a_cover * m_kb / t, theta));
}

CoveringReport greedy_net(const Body& K, const Body& B, double t, std::int64_t cloud_size,
                          const RngStream& rng, const GreedyOptions& opts) {
  if (!(t > 0.0)) throw std::invalid_argument("greedy_net: t must be > 0");
  if (K.dim() != B.dim()) throw std::invalid_argument("greedy_net: bodies must share dimension");
  if (cloud_size < 1) throw std::invalid_argument("greedy_net: cloud_size must be >= 1");
  if (!(opts.center_shrink > 0.0) || opts.center_shrink > 1.0)
    throw std::invalid_argument("greedy_net: center_shrink must lie in (0, 1]");
  if (opts.center_cap < 1) throw std::invalid_argument("greedy_net: center_cap must be >= 1");
  return greedy_on_cloud(make_cloud(K, cloud_size, rng), K, B, t, opts, rng.seed());
}

double volume_lower(const Body& K, const Body& B, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("volume_lower: t must be > 0");
  if (K.dim() != B.dim())
    throw std::invalid_argument("volume_lower: bodies must share dimension");
  const auto log_k = K.log_volume();
  const auto log_b = B.log_volume();
  if (!log_k || !log_b) throw std::runtime_error("no closed-form volume");
  return std::exp(*log_k - *log_b - K.dim() * std::log(t));
}

double lemma2_bound(const Body& K, double m_k, double t, double c_abs) {
  if (!(t > 0.0)) throw std::invalid_argument("lemma2_bound: t must be > 0");
  if (!(m_k > 0.0) || !(c_abs > 0.0))
    throw std::invalid_argument("lemma2_bound: M_K and c_abs must be > 0");
  const double x = K.body_class().doubling_constant() * m_k / t;
  return 2.0 * std::exp(c_abs * K.dim() * x * x);
}

double lemma4_bound(const Body& K, const Body& B, double m_kb, double t, double theta,
                    double c_theta, double c_abs) {
  if (K.dim() != B.dim())
    throw std::invalid_argument("lemma4_bound: bodies must share dimension");
  if (!(t > 0.0) || !(m_kb > 0.0) || !(theta > 0.0) || !(c_theta > 0.0) || !(c_abs > 0.0))
    throw std::invalid_argument("lemma4_bound: parameters must be positive");
  const double a = B.body_class().doubling_constant();
  const int n = K.dim();
  return 2.0 * std::pow(c_theta, n) * std::exp(c_abs * n / theta * std::pow(a * m_kb / t, theta));
}

AbsorptionResult absorption_check(const Body& B, const Body& K, double r,
                                  const CoveringReport& covering, int probe_count,
                                  double tolerance) {
  if (!(r > 0.0) || !(r < 1.0))
    throw std::invalid_argument("absorption_check: r must lie in (0, 1)");
  if (!K.body_class().is_p_convex())
    throw std::invalid_argument("absorption_check: K must declare a p-convex class");
  if (B.dim() != K.dim() || covering.dim != B.dim())
    throw std::invalid_argument("absorption_check: dimension mismatch");
  if (probe_count < 1) throw std::invalid_argument("absorption_check: probe_count must be >= 1");

  for (const VectorXd& c : covering.centers)
    if (B.gauge(c) > r + 1e-9)
      throw std::runtime_error("precondition violated: covering center outside rB");
  for (const VectorXd& x : covering.cloud) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const VectorXd& c : covering.centers) {
      nearest = std::min(nearest, K.gauge(x - c));
      if (nearest <= 1.0 + 1e-9) break;
    }
    if (nearest > 1.0 + 1e-9)
      throw std::runtime_error("precondition violated: cloud point not covered by K-translates");
  }

  const double p = K.body_class().param;
  const double t_r = std::pow(1.0 - std::pow(r, p), -1.0 / p);

  // max_B gauge_K is attained on the boundary, so probe sphere directions and
  // rescale each onto the boundary of B.
  RngStream probe(covering.seed, 0xab50ull);
  const int n = B.dim();
  double max_gauge = 0.0;
  for (int i = 0; i < probe_count; ++i) {
    VectorXd u(n);
    for (int j = 0; j < n; ++j) u[j] = probe.gaussian();
    if (u.norm() == 0.0) continue;
    max_gauge = std::max(max_gauge, K.gauge(u) / B.gauge(u));
  }

  AbsorptionResult result;
  result.t_r = t_r;
  result.max_gauge = max_gauge;
  result.holds = max_gauge <= t_r + tolerance;
  return result;
}

EntropyEstimate entropy_number(const Body& outer, const Body& inner, int k, double tol,
                               std::int64_t cloud_size, const RngStream& rng) {
  if (k < 1) throw std::invalid_argument("entropy_number: k must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("entropy_number: tol must be > 0");
  if (outer.dim() != inner.dim())
    throw std::invalid_argument("entropy_number: bodies must share dimension");
  if (cloud_size < 1) throw std::invalid_argument("entropy_number: cloud_size must be >= 1");

  const std::vector<VectorXd> cloud = make_cloud(outer, cloud_size, rng);
  double bracket_top = 0.0;
  for (const VectorXd& x : cloud) bracket_top = std::max(bracket_top, inner.gauge(x));
  if (bracket_top == 0.0) bracket_top = 1.0;

  GreedyOptions opts;
  const std::int64_t budget =
      (k - 1 >= 62) ? std::numeric_limits<std::int64_t>::max() : (std::int64_t(1) << (k - 1));
  opts.center_cap = std::min(budget, opts.center_cap);
  const auto fits = [&](double eps) {
    try {
      return greedy_on_cloud(cloud, outer, inner, eps, opts, rng.seed()).upper_count <= budget;
    } catch (const CenterCapExceeded&) {
      if (opts.center_cap == budget) return false;  // exceeding the budget is the answer
      throw;
    }
  };

  // Dyadic bisection over [0, top]: the top is feasible via the origin center
  // and the same grid serves every k, which keeps e_k monotone across k.
  double lo = 0.0, hi = bracket_top;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (fits(mid))
      hi = mid;
    else
      lo = mid;
  }

  EntropyEstimate est;
  est.k = k;
  est.lower = lo;
  est.upper = hi;
  est.e_k = 0.5 * (lo + hi);
  return est;
}

bool verify_covering(const CoveringReport& report, const Body& K, const Body& B, double tol) {
  for (const VectorXd& c : report.centers)
    if (K.gauge(c) > 1.0 + 1e-9) return false;
  for (const VectorXd& x : report.cloud) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const VectorXd& c : report.centers) {
      nearest = std::min(nearest, B.gauge(x - c));
      if (nearest <= report.t + tol) break;
    }
    if (nearest > report.t + tol) return false;
  }
  return true;
}

}  // namespace qclab
