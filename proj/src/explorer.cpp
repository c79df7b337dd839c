#include "qclab/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>

#include "CLI11.hpp"
#include "qclab/calibration.hpp"
#include "qclab/covering.hpp"
#include "qclab/functionals.hpp"
#include "qclab/parallel.hpp"
#include "qclab/projections.hpp"

namespace qclab {

namespace {

// Budget for the scalar functionals (M, M~, M*) a runner needs as row
// context; experiment-specific budgets come from the config instead.
constexpr std::int64_t kFunctionalSamples = 100000;

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

double p_exponent(const Body& body, const char* who) {
  const BodyClass& cls = body.body_class();
  if (!cls.is_p_convex())
    throw std::invalid_argument(std::string(who) + ": body must declare a p-convex class");
  return cls.param;
}

int lambda_rank(double lambda, int n, const char* who) {
  const int m = static_cast<int>(std::floor(lambda * n));
  if (m < 1) throw std::invalid_argument(std::string(who) + ": [lambda*n] must be >= 1");
  return m;
}

int small_n_flag(int n, double lambda) {
  return n >= calibration::kSmallNC / ((1.0 - lambda) * (1.0 - lambda)) ? 1 : 0;
}

MatrixXd sphere_rows(int dim, std::int64_t count, RngStream rng) {
  MatrixXd rows(count, dim);
  for (std::int64_t i = 0; i < count; ++i) {
    double norm = 0.0;
    do {
      for (int j = 0; j < dim; ++j) rows(i, j) = rng.gaussian();
      norm = rows.row(i).norm();
    } while (norm == 0.0);
    rows.row(i) /= norm;
  }
  return rows;
}

// Uniform cloud of the body expressed in the range coordinates of `basis`
// (one projected point per row).
MatrixXd projected_cloud(const Body& body, const MatrixXd& basis, std::int64_t count,
                         RngStream rng) {
  MatrixXd z(count, basis.cols());
  for (std::int64_t i = 0; i < count; ++i) z.row(i) = (basis.transpose() * body.sample_uniform(rng)).transpose();
  return z;
}

double mean_radius(const Body& body, const RngStream& rng, double* std_error) {
  if (auto exact = body.exact_mean_radius()) {
    if (std_error) *std_error = 0.0;
    return *exact;
  }
  auto ball = make_euclidean_ball(body.dim());
  const MCEstimate est = estimate_MKB(body, *ball, kFunctionalSamples, rng);
  if (std_error) *std_error = est.std_error;
  return est.value;
}

// Local descent of gauge(basis * c / |c|), moving one coefficient at a time
// with a shrinking step. `coeff` is unit; `x` = basis * coeff tracks it.
double polish_direction(const Body& body, const MatrixXd& basis, VectorXd coeff, double value) {
  const int m = static_cast<int>(coeff.size());
  VectorXd x = basis * coeff;
  VectorXd cand(x.size());
  double best = value;
  double step = 0.2;
  for (int round = 0; round < 64 && step > 1e-4; ++round) {
    bool improved = false;
    for (int j = 0; j < m; ++j) {
      for (double sgn : {1.0, -1.0}) {
        // Evaluate with the candidate's true norm and rebuild x from the unit
        // coefficients on accept. Incremental norm updates are not an option:
        // their rounding error feeds back through the accept test and
        // compounds into fake minima.
        const double old = coeff[j];
        coeff[j] = old + sgn * step;
        const double nrm = coeff.norm();
        if (nrm == 0.0) {
          coeff[j] = old;
          continue;
        }
        cand.noalias() = x + sgn * step * basis.col(j);
        const double g = body.gauge(cand) / nrm;
        if (g < best * (1.0 - 1e-12)) {
          best = g;
          coeff /= nrm;
          x.noalias() = basis * coeff;
          improved = true;
        } else {
          coeff[j] = old;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

struct Candidate {
  double value = std::numeric_limits<double>::infinity();
  VectorXd coeff;
};

// Sampled minimum of the gauge over unit vectors of span(basis), refined by
// coordinate polish from the ten best samples. Sample s draws from its own
// substream, so runs at different ranks share each sample's leading
// coefficients; together with the prefix property of haar_basis this couples
// candidate directions across nested subspace dimensions for a fixed seed.
double min_gauge_on_subspace(const Body& body, const MatrixXd& basis, std::int64_t samples,
                             RngStream rng) {
  const int m = static_cast<int>(basis.cols());
  std::vector<Candidate> top;
  VectorXd c(m);
  for (std::int64_t s = 0; s < samples; ++s) {
    RngStream draw = rng.substream(static_cast<std::uint64_t>(s));
    for (int j = 0; j < m; ++j) c[j] = draw.gaussian();
    const double nrm = c.norm();
    if (nrm == 0.0) continue;
    c /= nrm;
    const double g = body.gauge(basis * c);
    if (top.size() < 10) {
      top.push_back({g, c});
      continue;
    }
    std::size_t worst = 0;
    for (std::size_t i = 1; i < top.size(); ++i)
      if (top[i].value > top[worst].value) worst = i;
    if (g < top[worst].value) top[worst] = {g, c};
  }
  if (top.empty()) throw std::runtime_error("min_gauge_on_subspace: no usable samples");
  double best = std::numeric_limits<double>::infinity();
  for (const Candidate& cand : top)
    best = std::min(best, polish_direction(body, basis, cand.coeff, cand.value));
  return best;
}

int emit_report(const ExperimentReport& report, const ExperimentConfig& cfg) {
  if (cfg.output.empty())
    std::cout << report.table.to_string();
  else
    report.table.write_file(cfg.output);
  std::cerr << report.summary << '\n';
  return 0;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cab = 0.0, caa = 0.0, cbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cab += (a[i] - ma) * (b[i] - mb);
    caa += (a[i] - ma) * (a[i] - ma);
    cbb += (b[i] - mb) * (b[i] - mb);
  }
  if (caa == 0.0 || cbb == 0.0) return 0.0;
  return cab / std::sqrt(caa * cbb);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("config: lambda must lie in (0,1)");
  if (samples < 1) throw std::invalid_argument("config: samples must be >= 1");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (cloud_size < 1) throw std::invalid_argument("config: cloud_size must be >= 1");
  if (!(t > 0.0)) throw std::invalid_argument("config: t must be > 0");
  if (!(delta > 0.0 && delta < 1.5)) throw std::invalid_argument("config: delta outside (0,1.5)");
  if (!(theta > 0.0 && theta <= 2.0))
    throw std::invalid_argument("config: theta must lie in (0,2]");
  if (ambient_n < 1) throw std::invalid_argument("config: n must be >= 1");
  if (k < 0) throw std::invalid_argument("config: k must be >= 0");
  if (!(center_shrink > 0.0 && center_shrink <= 1.0))
    throw std::invalid_argument("config: shrink must lie in (0,1]");
  if (n_list.empty()) throw std::invalid_argument("config: n list must be nonempty");
  for (int n : n_list)
    if (n < 1) throw std::invalid_argument("config: n values must be >= 1");
  if (k_list.empty()) throw std::invalid_argument("config: k list must be nonempty");
  for (int kk : k_list)
    if (kk < 1) throw std::invalid_argument("config: k values must be >= 1");
  if (epsilons.empty()) throw std::invalid_argument("config: epsilon list must be nonempty");
  for (double e : epsilons)
    if (!(e > 0.0)) throw std::invalid_argument("config: epsilon values must be > 0");
  if (num_points.empty()) throw std::invalid_argument("config: num_points must be nonempty");
  for (int np : num_points)
    if (np < 1) throw std::invalid_argument("config: num_points values must be >= 1");
}

double radial_containment_factor(const Eigen::MatrixXd& cloud, const Eigen::MatrixXd& directions,
                                 double delta) {
  if (cloud.rows() < 1 || directions.rows() < 1)
    throw std::invalid_argument("radial_containment_factor: empty cloud or direction set");
  if (cloud.cols() != directions.cols())
    throw std::invalid_argument("radial_containment_factor: dimension mismatch");
  if (!(delta > 0.0 && delta < 1.5))
    throw std::invalid_argument("radial_containment_factor: delta outside (0,1.5)");
  const double cos_delta = std::cos(delta);
  const VectorXd norms = cloud.rowwise().norm();

  const Eigen::Index num_points = cloud.rows();
  const Eigen::Index num_dirs = directions.rows();
  std::vector<double> rho(static_cast<std::size_t>(num_dirs), 0.0);

  // |<z,u>| both tests the cone (>= cos(delta)|z|) and serves as the radial
  // value; it understates |z| by at most a cos(delta) factor, which errs on
  // the conservative (larger C) side.
  constexpr Eigen::Index kRowBlock = 32768;
  constexpr Eigen::Index kColBlock = 256;
  MatrixXd tile;
  for (Eigen::Index r0 = 0; r0 < num_points; r0 += kRowBlock) {
    const Eigen::Index rb = std::min(kRowBlock, num_points - r0);
    for (Eigen::Index c0 = 0; c0 < num_dirs; c0 += kColBlock) {
      const Eigen::Index cb = std::min(kColBlock, num_dirs - c0);
      tile.noalias() = cloud.middleRows(r0, rb) * directions.middleRows(c0, cb).transpose();
      for (Eigen::Index j = 0; j < cb; ++j) {
        double best = rho[static_cast<std::size_t>(c0 + j)];
        for (Eigen::Index i = 0; i < rb; ++i) {
          const double d = std::abs(tile(i, j));
          if (d > best && d >= cos_delta * norms[r0 + i]) best = d;
        }
        rho[static_cast<std::size_t>(c0 + j)] = best;
      }
    }
  }

  double factor = 0.0;
  for (double r : rho) {
    if (r <= 0.0)
      throw std::runtime_error(
          "empty cone: no cloud point within the angular window; increase cloud_size or delta");
    factor = std::max(factor, 1.0 / r);
  }
  return factor;
}

ExperimentReport run_section_diameter(const ExperimentConfig& cfg) {
  cfg.validate();
  const BodyPtr body = parse_body(cfg.body);
  const int n = body->dim();
  const double p = p_exponent(*body, "section_diameter");
  const int m = lambda_rank(cfg.lambda, n, "section_diameter");
  const bool convex = body->body_class().is_convex();
  const double expo = 0.5 + 1.0 / p;
  const double one_minus = 1.0 - cfg.lambda;

  RngStream root(cfg.seed, 0x5ec7ull);
  double m_tilde_se = 0.0;
  const double m_tilde = mean_radius(*body, root.substream(1), &m_tilde_se);
  double m_star = 0.0;
  if (convex) m_star = estimate_M_star(*body, kFunctionalSamples, root.substream(2)).value;

  const RngStream trial_root = root.substream(3);
  std::vector<double> g_mins(cfg.trials);
  parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t trial) {
    RngStream sub = trial_root.substream(trial);
    const MatrixXd basis = haar_basis(n, m, sub.substream(0));
    g_mins[trial] = min_gauge_on_subspace(*body, basis, cfg.samples, sub.substream(1));
  });

  CsvTable table({"trial", "n", "lambda", "p", "subspace_dim", "g_min", "m_tilde", "m_star",
                  "implied_a_p", "implied_c_sqrt", "implied_c_linear", "n_large"});
  double g_sum = 0.0, a_max = 0.0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const double g = g_mins[trial];
    g_sum += g;
    const double implied_a = std::pow(one_minus, expo) / (g * m_tilde);
    a_max = std::max(a_max, implied_a);
    std::string c_sqrt, c_linear, star;
    if (convex) {
      star = format_double(m_star);
      c_sqrt = format_double(g * m_star / std::sqrt(one_minus));
      c_linear = format_double(g * m_star / one_minus);
    }
    table.add(trial, n, cfg.lambda, p, m, g, m_tilde, star, implied_a, c_sqrt, c_linear,
              small_n_flag(n, cfg.lambda));
  }
  ExperimentReport report{std::move(table),
                          fmt("section_diameter body=%s n=%d lambda=%g trials=%d "
                              "g_min_mean=%.6g implied_a_p_max=%.6g",
                              body->label().c_str(), n, cfg.lambda, cfg.trials,
                              g_sum / cfg.trials, a_max)};
  return report;
}

namespace {

struct ConeTrial {
  double c_meas = 0.0;
  double c_coarse = 0.0;
};

ConeTrial cone_trial_from_cloud(const MatrixXd& cloud, const MatrixXd& dirs, double delta) {
  ConeTrial out;
  out.c_meas = radial_containment_factor(cloud, dirs, delta);
  const Eigen::Index quarter = std::max<Eigen::Index>(1, cloud.rows() / 4);
  out.c_coarse = radial_containment_factor(cloud.topRows(quarter), dirs, delta);
  return out;
}

}  // namespace

ExperimentReport run_projection_containment(const ExperimentConfig& cfg) {
  cfg.validate();
  const BodyPtr body = parse_body(cfg.body);
  const int n = body->dim();
  if (n > 8)
    throw std::invalid_argument("projection_containment: cloud mode is limited to n <= 8");
  const double p = p_exponent(*body, "projection_containment");
  const int m = lambda_rank(cfg.lambda, n, "projection_containment");

  RngStream root(cfg.seed, 0x9207ull);
  const double m_k = estimate_M(*body, kFunctionalSamples, root.substream(1)).value;

  const RngStream trial_root = root.substream(2);
  std::vector<ConeTrial> results(cfg.trials);
  parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t trial) {
    RngStream sub = trial_root.substream(trial);
    const MatrixXd basis = haar_basis(n, m, sub.substream(0));
    const MatrixXd z = projected_cloud(*body, basis, cfg.cloud_size, sub.substream(1));
    const MatrixXd dirs = sphere_rows(m, cfg.samples, sub.substream(2));
    results[trial] = cone_trial_from_cloud(z, dirs, cfg.delta);
  });

  const double bound_term = std::pow(1.0 - cfg.lambda, 1.0 + 1.0 / p);
  CsvTable table({"trial", "n", "lambda", "p", "rank", "delta", "cloud_size", "m_k", "c_meas",
                  "c_meas_coarse", "converged", "implied_A_p", "n_large"});
  double a_max = 0.0;
  int converged_count = 0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const ConeTrial& r = results[trial];
    const int converged = std::abs(r.c_meas - r.c_coarse) <= 0.05 * r.c_meas ? 1 : 0;
    converged_count += converged;
    const double implied = r.c_meas * bound_term / m_k;
    a_max = std::max(a_max, implied);
    table.add(trial, n, cfg.lambda, p, m, cfg.delta, cfg.cloud_size, m_k, r.c_meas, r.c_coarse,
              converged, implied, small_n_flag(n, cfg.lambda));
  }
  ExperimentReport report{std::move(table),
                          fmt("projection_containment body=%s n=%d lambda=%g trials=%d "
                              "implied_A_p_max=%.6g converged=%d/%d",
                              body->label().c_str(), n, cfg.lambda, cfg.trials, a_max,
                              converged_count, cfg.trials)};
  return report;
}

namespace {

ConeTrial global_trial(const Body& body, const MatrixXd& u_map, std::int64_t cloud_size,
                       std::int64_t num_directions, double delta, RngStream sub) {
  const int n = body.dim();
  // All-pairs Minkowski sums of two m-point clouds with m^2 ~ cloud_size: the
  // per-direction maxima of <x,u> and <Uy,u> then combine, so the radial
  // estimate reaches the sum's boundary far faster than the same number of
  // independently sampled pairs would.
  const std::int64_t m = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::sqrt(static_cast<double>(cloud_size))));
  RngStream cloud_rng = sub.substream(1);
  MatrixXd xs(m, n), ys(m, n);
  for (std::int64_t i = 0; i < m; ++i) xs.row(i) = body.sample_uniform(cloud_rng).transpose();
  for (std::int64_t i = 0; i < m; ++i)
    ys.row(i) = (u_map * body.sample_uniform(cloud_rng)).transpose();
  MatrixXd w(m * m, n);
  for (std::int64_t i = 0; i < m; ++i)
    w.middleRows(i * m, m) = ys.rowwise() + xs.row(i);
  const MatrixXd dirs = sphere_rows(n, num_directions, sub.substream(2));
  return cone_trial_from_cloud(w, dirs, delta);
}

}  // namespace

double global_form_factor(const Body& body, const MatrixXd& u_map, std::int64_t cloud_size,
                          std::int64_t num_directions, double delta, const RngStream& rng) {
  if (u_map.rows() != body.dim() || u_map.cols() != body.dim())
    throw std::invalid_argument("global_form_factor: map must be n x n");
  return global_trial(body, u_map, cloud_size, num_directions, delta, rng).c_meas;
}

ExperimentReport run_global_form(const ExperimentConfig& cfg) {
  cfg.validate();
  const BodyPtr body = parse_body(cfg.body);
  const int n = body->dim();
  if (n > 8) throw std::invalid_argument("global_form: cloud mode is limited to n <= 8");
  const double p = p_exponent(*body, "global_form");

  RngStream root(cfg.seed, 0x91077ull);
  const double m_k = estimate_M(*body, kFunctionalSamples, root.substream(1)).value;

  const RngStream trial_root = root.substream(2);
  std::vector<ConeTrial> results(cfg.trials);
  parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t trial) {
    RngStream sub = trial_root.substream(trial);
    const MatrixXd u_map = haar_orthogonal(n, sub.substream(0));
    results[trial] = global_trial(*body, u_map, cfg.cloud_size, cfg.samples, cfg.delta, sub);
  });

  CsvTable table({"trial", "n", "p", "cloud_size", "delta", "m_k", "c_meas", "c_meas_coarse",
                  "converged", "implied_Ap_prime"});
  double a_max = 0.0;
  int converged_count = 0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const ConeTrial& r = results[trial];
    const int converged = std::abs(r.c_meas - r.c_coarse) <= 0.05 * r.c_meas ? 1 : 0;
    converged_count += converged;
    const double implied = r.c_meas / m_k;
    a_max = std::max(a_max, implied);
    table.add(trial, n, p, cfg.cloud_size, cfg.delta, m_k, r.c_meas, r.c_coarse, converged,
              implied);
  }
  ExperimentReport report{std::move(table),
                          fmt("global_form body=%s n=%d trials=%d implied_Ap_prime_max=%.6g "
                              "converged=%d/%d",
                              body->label().c_str(), n, cfg.trials, a_max, converged_count,
                              cfg.trials)};
  return report;
}

ExperimentReport run_l1_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  RngStream root(cfg.seed, 0x1107ull);

  const std::size_t count = cfg.n_list.size();
  std::vector<MCEstimate> m_tilde(count), m_star(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int n = cfg.n_list[i];
    const BodyPtr ball = make_lp_ball(1.0, n);
    const BodyPtr euclid = make_euclidean_ball(n);
    m_tilde[i] = estimate_MKB(*ball, *euclid, cfg.samples, root.substream(2 * i));
    m_star[i] = estimate_M_star(*ball, cfg.samples, root.substream(2 * i + 1));
  }

  std::vector<double> sqrtn_scaled(count), ratio(count), sqrt_log(count);
  for (std::size_t i = 0; i < count; ++i) {
    sqrtn_scaled[i] = m_tilde[i].value * std::sqrt(static_cast<double>(cfg.n_list[i]));
    ratio[i] = m_star[i].value / m_tilde[i].value;
    sqrt_log[i] = std::sqrt(std::log(static_cast<double>(cfg.n_list[i])));
  }

  // Least squares ratio = a + b * sqrt(log n); residuals go in the rows.
  double slope = 0.0, intercept = ratio.empty() ? 0.0 : ratio[0];
  if (count >= 2) {
    double ms = 0.0, mr = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      ms += sqrt_log[i];
      mr += ratio[i];
    }
    ms /= count;
    mr /= count;
    double cov = 0.0, var = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      cov += (sqrt_log[i] - ms) * (ratio[i] - mr);
      var += (sqrt_log[i] - ms) * (sqrt_log[i] - ms);
    }
    slope = var > 0.0 ? cov / var : 0.0;
    intercept = mr - slope * ms;
  }

  CsvTable table({"n", "samples", "m_tilde", "m_tilde_se", "m_star", "m_star_se",
                  "mtilde_sqrtn", "ratio", "sqrt_log_n", "ratio_fit", "residual"});
  double smin = std::numeric_limits<double>::infinity(), smax = 0.0, smean = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double fitted = intercept + slope * sqrt_log[i];
    table.add(cfg.n_list[i], cfg.samples, m_tilde[i].value, m_tilde[i].std_error,
              m_star[i].value, m_star[i].std_error, sqrtn_scaled[i], ratio[i], sqrt_log[i],
              fitted, ratio[i] - fitted);
    smin = std::min(smin, sqrtn_scaled[i]);
    smax = std::max(smax, sqrtn_scaled[i]);
    smean += sqrtn_scaled[i];
  }
  smean /= count;
  const double spread = smean > 0.0 ? (smax - smin) / smean : 0.0;
  ExperimentReport report{std::move(table),
                          fmt("l1_compare points=%zu mtilde_sqrtn_spread=%.4f "
                              "ratio_corr=%.4f slope=%.4f",
                              count, spread, pearson(ratio, sqrt_log), slope)};
  return report;
}

ExperimentReport run_fact_check(const ExperimentConfig& cfg) {
  cfg.validate();
  const BodyPtr body = parse_body(cfg.body);
  const int n = body->dim();
  if (n > 8) throw std::invalid_argument("fact_check: cloud mode is limited to n <= 8");
  const double p = p_exponent(*body, "fact_check");
  const BodyPtr euclid = make_euclidean_ball(n);

  RngStream root(cfg.seed, 0xfac7ull);
  const CoveringReport cover = greedy_net(*euclid, *body, 1.0, cfg.cloud_size, root.substream(1));
  const double alpha = std::log(static_cast<double>(cover.upper_count)) / n;
  // gamma = c sqrt(alpha); the absolute constant is reported, not asserted,
  // and the range below uses c = 1.
  const double gamma = std::sqrt(alpha);
  const double range_lo = gamma * gamma * n;
  const double range_hi = gamma < 0.5 ? (1.0 - 2.0 * gamma) * (1.0 - 2.0 * gamma) * n : 0.0;

  int k = cfg.k;
  std::vector<int> admissible;
  for (int cand = 1; cand <= n; ++cand)
    if (cand > range_lo && cand < range_hi) admissible.push_back(cand);
  if (k == 0 && !admissible.empty()) k = admissible[admissible.size() / 2];
  if (k > n) throw std::invalid_argument("fact_check: k must be <= n");

  CsvTable table({"trial", "n", "p", "k", "lambda", "alpha", "gamma", "range_lo", "range_hi",
                  "in_range", "factor", "e_k", "entropy_ratio", "rho_min", "rho_min_coarse",
                  "slack", "holds"});
  if (k == 0) {
    table.add(0, n, p, std::string(), std::string(), alpha, gamma, range_lo, range_hi, 0,
              std::string(), std::string(), std::string(), std::string(), std::string(),
              std::string(), std::string());
    ExperimentReport report{std::move(table),
                            fmt("fact_check body=%s n=%d alpha=%.4f range empty",
                                body->label().c_str(), n, alpha)};
    return report;
  }

  const double lambda = static_cast<double>(k) / n;
  const double factor = std::pow(p * (1.0 - std::sqrt(lambda)) / 2.0, 1.0 / p);
  const EntropyEstimate ek = entropy_number(*euclid, *body, k, 1e-3,
                                            std::min<std::int64_t>(cfg.cloud_size, 20000),
                                            root.substream(2));
  const double entropy_ratio = factor / ek.e_k;
  const int in_range = (k > range_lo && k < range_hi) ? 1 : 0;

  const RngStream trial_root = root.substream(3);
  std::vector<ConeTrial> results(cfg.trials);
  parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t trial) {
    RngStream sub = trial_root.substream(trial);
    const MatrixXd basis = haar_basis(n, k, sub.substream(0));
    const MatrixXd z = projected_cloud(*body, basis, cfg.cloud_size, sub.substream(1));
    const MatrixXd dirs = sphere_rows(k, cfg.samples, sub.substream(2));
    results[trial] = cone_trial_from_cloud(z, dirs, cfg.delta);
  });

  int holds_count = 0;
  double slack_min = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const ConeTrial& r = results[trial];
    const double rho_min = 1.0 / r.c_meas;
    const double rho_coarse = 1.0 / r.c_coarse;
    const double slack = rho_min / factor;
    const int holds = slack >= 1.0 ? 1 : 0;
    holds_count += holds;
    slack_min = std::min(slack_min, slack);
    table.add(trial, n, p, k, lambda, alpha, gamma, range_lo, range_hi, in_range, factor,
              ek.e_k, entropy_ratio, rho_min, rho_coarse, slack, holds);
  }
  ExperimentReport report{std::move(table),
                          fmt("fact_check body=%s n=%d k=%d alpha=%.4f factor=%.4g "
                              "holds=%d/%d slack_min=%.4g",
                              body->label().c_str(), n, k, alpha, factor, holds_count,
                              cfg.trials, slack_min)};
  return report;
}

ExperimentReport run_jl(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n = cfg.ambient_n;
  int pool_size = 0;
  for (int np : cfg.num_points) pool_size = std::max(pool_size, np);

  RngStream pts(cfg.seed, 0x907ull);
  std::vector<VectorXd> pool;
  pool.reserve(pool_size);
  for (int i = 0; i < pool_size; ++i) {
    VectorXd y(n);
    double norm = 0.0;
    do {
      for (int j = 0; j < n; ++j) y[j] = pts.gaussian();
      norm = y.norm();
    } while (norm == 0.0);
    pool.push_back(y);
  }

  const RngStream grid_root(cfg.seed, 0x908ull);
  std::vector<JLReport> all;
  for (int k : cfg.k_list) {
    if (k > n) throw std::invalid_argument("jl: k must be <= n");
    auto reports = jl_grid(pool, k, cfg.epsilons, cfg.num_points, cfg.trials,
                           grid_root.substream(static_cast<std::uint64_t>(k)));
    all.insert(all.end(), reports.begin(), reports.end());
  }

  double max_failure = 0.0;
  for (const JLReport& r : all) max_failure = std::max(max_failure, r.empirical_failure);
  ExperimentReport report{to_csv(all), fmt("jl n=%d cells=%zu trials=%d max_failure=%.6g", n,
                                           all.size(), cfg.trials, max_failure)};
  return report;
}

ExperimentReport run_cover(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.body.empty() || cfg.body2.empty())
    throw std::invalid_argument("cover: both outer and inner bodies are required");
  const BodyPtr outer = parse_body(cfg.body);
  const BodyPtr inner = parse_body(cfg.body2);
  GreedyOptions opts;
  opts.center_shrink = cfg.center_shrink;
  const CoveringReport rep =
      greedy_net(*outer, *inner, cfg.t, cfg.cloud_size, RngStream(cfg.seed, 0xc04eull), opts);
  if (!cfg.centers_out.empty()) {
    std::ofstream out(cfg.centers_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + cfg.centers_out);
    out << points_to_text(rep.centers);
  }
  const std::string vol = rep.volume_lower ? fmt("%.6g", *rep.volume_lower) : "n/a";
  ExperimentReport report{to_csv(rep),
                          fmt("cover outer=%s inner=%s t=%g upper_count=%lld volume_lower=%s",
                              outer->label().c_str(), inner->label().c_str(), cfg.t,
                              static_cast<long long>(rep.upper_count), vol.c_str())};
  return report;
}

ExperimentReport run_estimate(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.body.empty()) throw std::invalid_argument("estimate: --body is required");
  const BodyPtr body = parse_body(cfg.body);
  const RngStream rng(cfg.seed, 0xe57ull);

  MCEstimate est;
  if (cfg.functional == "M") {
    est = estimate_M(*body, cfg.samples, rng);
  } else if (cfg.functional == "Mstar") {
    est = estimate_M_star(*body, cfg.samples, rng);
  } else if (cfg.functional == "Mtilde") {
    est = estimate_MKB(*body, *make_euclidean_ball(body->dim()), cfg.samples, rng);
  } else if (cfg.functional == "MKB") {
    if (cfg.body2.empty()) throw std::invalid_argument("estimate MKB: --body2 is required");
    est = estimate_MKB(*body, *parse_body(cfg.body2), cfg.samples, rng);
  } else if (cfg.functional == "ctheta") {
    est.value = estimate_c_theta(*body, cfg.theta, cfg.samples, rng);
    est.std_error = 0.0;
    est.samples = cfg.samples;
    est.seed = cfg.seed;
  } else {
    throw std::invalid_argument("estimate: unknown functional '" + cfg.functional + "'");
  }
  ExperimentReport report{to_csv(est),
                          fmt("estimate %s body=%s value=%.9g std_error=%.3g samples=%lld",
                              cfg.functional.c_str(), body->label().c_str(), est.value,
                              est.std_error, static_cast<long long>(est.samples))};
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::section_diameter:
      return run_section_diameter(cfg);
    case ExperimentKind::projection_containment:
      return run_projection_containment(cfg);
    case ExperimentKind::global_form:
      return run_global_form(cfg);
    case ExperimentKind::l1_compare:
      return run_l1_compare(cfg);
    case ExperimentKind::fact_check:
      return run_fact_check(cfg);
    case ExperimentKind::jl:
      return run_jl(cfg);
    case ExperimentKind::cover:
      return run_cover(cfg);
  }
  throw std::logic_error("run_experiment: unhandled kind");
}

namespace {

// CLI11 reads config files on the root app only and scopes subcommand keys by
// section. The toolkit wants flat key=value files that address the chosen
// subcommand's flags directly, so reparent section-less keys onto whichever
// subcommand was parsed before the items are matched.
class FlatSubcommandConfig : public CLI::ConfigINI {
 public:
  explicit FlatSubcommandConfig(const CLI::App* root) : root_(root) {}
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigINI::from_config(input);
    const std::vector<CLI::App*> parsed = root_->get_subcommands();
    if (!parsed.empty()) {
      for (CLI::ConfigItem& item : items)
        if (item.parents.empty()) item.parents = {parsed.front()->get_name()};
    }
    return items;
  }

 private:
  const CLI::App* root_;
};

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"quasiconvex-lab: gauges, projections, coverings, and the experiments built on them"};
  app.require_subcommand(1);
  app.fallthrough();  // --config after a subcommand name still reaches the root option
  app.set_config("--config", "",
                 "flat key=value config file mirroring the chosen subcommand's flags");
  app.allow_config_extras(CLI::config_extras_mode::error);  // unknown keys are rejected
  app.config_formatter(std::make_shared<FlatSubcommandConfig>(&app));
  ExperimentConfig cfg;

  const auto add_common = [&cfg](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--out", cfg.output, "CSV output path (default: stdout)");
  };

  CLI::App* est = app.add_subcommand("estimate", "Monte Carlo estimate of a scalar functional");
  est->add_option("--body", cfg.body, "body descriptor")->required();
  est->add_option("--functional", cfg.functional, "M | Mstar | Mtilde | MKB | ctheta")
      ->required();
  est->add_option("--body2", cfg.body2, "reference body for MKB");
  est->add_option("--samples", cfg.samples, "sample count");
  est->add_option("--theta", cfg.theta, "exponent for ctheta");
  add_common(est);

  CLI::App* cover = app.add_subcommand("cover", "greedy covering of one body by another");
  cover->add_option("--outer", cfg.body, "covered body descriptor")->required();
  cover->add_option("--inner", cfg.body2, "covering body descriptor")->required();
  cover->add_option("--t", cfg.t, "covering radius in inner-gauge units");
  cover->add_option("--cloud", cfg.cloud_size, "cloud size");
  cover->add_option("--shrink", cfg.center_shrink, "center shrink factor in (0,1]");
  cover->add_option("--centers-out", cfg.centers_out, "optional plain-text centers dump");
  add_common(cover);

  CLI::App* jl = app.add_subcommand("jl", "projection concentration failure rates");
  jl->add_option("--n", cfg.ambient_n, "ambient dimension");
  jl->add_option("--k", cfg.k_list, "projection ranks")->delimiter(',');
  jl->add_option("--epsilon", cfg.epsilons, "distortion levels")->delimiter(',');
  jl->add_option("--num-points", cfg.num_points, "point-set sizes")->delimiter(',');
  jl->add_option("--trials", cfg.trials, "projections per cell");
  add_common(jl);

  CLI::App* section = app.add_subcommand("section", "random-section diameter experiment");
  section->add_option("--body", cfg.body, "body descriptor")->required();
  section->add_option("--lambda", cfg.lambda, "subspace proportion in (0,1)");
  section->add_option("--trials", cfg.trials, "subspace draws");
  section->add_option("--samples", cfg.samples, "direction samples per trial");
  add_common(section);

  CLI::App* project = app.add_subcommand("project", "projected-containment experiment");
  project->add_option("--body", cfg.body, "body descriptor")->required();
  project->add_option("--lambda", cfg.lambda, "projection proportion in (0,1)");
  project->add_option("--trials", cfg.trials, "projection draws");
  project->add_option("--samples", cfg.samples, "direction samples per trial");
  project->add_option("--cloud", cfg.cloud_size, "cloud size");
  project->add_option("--delta", cfg.delta, "cone half-width (radians)");
  add_common(project);

  CLI::App* global = app.add_subcommand("global", "global-form containment experiment");
  global->add_option("--body", cfg.body, "body descriptor")->required();
  global->add_option("--trials", cfg.trials, "rotation draws");
  global->add_option("--samples", cfg.samples, "direction samples per trial");
  global->add_option("--cloud", cfg.cloud_size, "cloud size");
  global->add_option("--delta", cfg.delta, "cone half-width (radians)");
  add_common(global);

  CLI::App* l1 = app.add_subcommand("l1", "cross-polytope mean-norm comparison");
  l1->add_option("--n", cfg.n_list, "dimension list")->delimiter(',');
  l1->add_option("--samples", cfg.samples, "samples per dimension");
  add_common(l1);

  CLI::App* fact = app.add_subcommand("fact", "covering-to-projection containment check");
  fact->add_option("--body", cfg.body, "body descriptor")->required();
  fact->add_option("--k", cfg.k, "projection rank (0 = pick inside the stated range)");
  fact->add_option("--trials", cfg.trials, "projection draws");
  fact->add_option("--samples", cfg.samples, "direction samples per trial");
  fact->add_option("--cloud", cfg.cloud_size, "cloud size");
  fact->add_option("--delta", cfg.delta, "cone half-width (radians)");
  add_common(fact);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ExperimentReport report = [&]() {
      if (est->parsed()) return run_estimate(cfg);
      if (cover->parsed()) {
        cfg.experiment = ExperimentKind::cover;
        return run_cover(cfg);
      }
      if (jl->parsed()) {
        cfg.experiment = ExperimentKind::jl;
        return run_jl(cfg);
      }
      if (section->parsed()) {
        cfg.experiment = ExperimentKind::section_diameter;
        return run_section_diameter(cfg);
      }
      if (project->parsed()) {
        cfg.experiment = ExperimentKind::projection_containment;
        return run_projection_containment(cfg);
      }
      if (global->parsed()) {
        cfg.experiment = ExperimentKind::global_form;
        return run_global_form(cfg);
      }
      if (l1->parsed()) {
        cfg.experiment = ExperimentKind::l1_compare;
        return run_l1_compare(cfg);
      }
      cfg.experiment = ExperimentKind::fact_check;
      return run_fact_check(cfg);
    }();
    return emit_report(report, cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace qclab
