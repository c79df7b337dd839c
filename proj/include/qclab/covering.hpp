#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qclab/body.hpp"
#include "qclab/rng.hpp"

namespace qclab {

// Raised when the greedy construction would pass the center cap. The partial
// count is a certified lower bound for the cloud covering number at this t.
class CenterCapExceeded : public std::runtime_error {
 public:
  CenterCapExceeded(std::int64_t partial_count, double t);
  std::int64_t partial_count() const { return partial_; }

 private:
  std::int64_t partial_;
};

struct CoveringReport {
  double t = 0.0;
  std::vector<VectorXd> centers;
  std::int64_t upper_count = 0;
  std::optional<double> volume_lower;  // |K| / (t^n |B|) when both volumes are closed-form
  double m_kb = 0.0;                   // cloud mean of gauge_B, estimates M(K,B)
  double a_cover = 0.0;                // doubling constant of the covering body, 0 if none
  int dim = 0;
  std::int64_t cloud_size = 0;
  std::uint64_t seed = 0;
  double center_shrink = 1.0;
  std::vector<VectorXd> cloud;  // kept so certificates can be re-checked

  // Lemma 2 / Lemma 4 shaped upper bounds evaluated in this run's setting
  // (dim, t, cloud M(K,B), a of the covering body); only the absolute
  // constant, and for Lemma 4 (theta, c_theta), stay free.
  double lemma2_bound(double c_abs = 2.0) const;
  double lemma4_bound(double c_abs, double theta, double c_theta) const;
};

struct GreedyOptions {
  std::int64_t center_cap = 1000000;
  // Centers are shrink * (chosen cloud point); 1 keeps the classic greedy,
  // smaller values pin centers inside shrink*K for absorption constructions.
  double center_shrink = 1.0;
};

// Farthest-point greedy cover of a uniform cloud of K by gauge_B balls of
// radius t; the first center sits at the origin and ties break toward the
// lowest cloud index. The visiting order does not depend on t, so counts are
// nonincreasing in t for a fixed (seed, cloud_size).
CoveringReport greedy_net(const Body& K, const Body& B, double t, std::int64_t cloud_size,
                          const RngStream& rng, const GreedyOptions& opts = {});

// |K| / |tB|, a volumetric lower bound for N(K, tB). Throws when either body
// lacks a closed-form volume.
double volume_lower(const Body& K, const Body& B, double t);

// N(D, tK) <= 2 exp(c_abs n (a M_K / t)^2) with K - K inside aK; a comes from
// K's declared class and c_abs defaults to the displayed 2.
double lemma2_bound(const Body& K, double m_k, double t, double c_abs = 2.0);

// N(K, tB) <= 2 c_theta^n exp((c_abs n / theta)(a M(K,B) / t)^theta) with
// B + B inside aB; a comes from B's declared class.
double lemma4_bound(const Body& K, const Body& B, double m_kb, double t, double theta,
                    double c_theta, double c_abs);

struct AbsorptionResult {
  bool holds = false;
  double t_r = 0.0;
  double max_gauge = 0.0;
};

// A covering of B by K-translates centered in rB forces B inside t_r K with
// t_r = (1 - r^p)^{-1/p}. Verifies the premises (centers in rB, cloud covered
// by unit K-translates, K p-convex), then probes gauge_K over boundary
// directions of B and reports whether the inclusion holds numerically.
AbsorptionResult absorption_check(const Body& B, const Body& K, double r,
                                  const CoveringReport& covering, int probe_count = 20000,
                                  double tolerance = 1e-7);

struct EntropyEstimate {
  int k = 0;
  double e_k = 0.0;  // bracket midpoint
  double lower = 0.0;
  double upper = 0.0;
};

// e_k(outer, inner) = inf{eps > 0 : N(outer, eps inner) <= 2^{k-1}}, bisected
// on a shared cloud with greedy counts as the N-oracle. The bracket is dyadic
// over a cloud-determined [0, H], so estimates are nonincreasing in k.
EntropyEstimate entropy_number(const Body& outer, const Body& inner, int k, double tol,
                               std::int64_t cloud_size, const RngStream& rng);

// Independent re-check of the covering certificate: every cloud point within
// gauge_B distance t + tol of some center, every center inside K.
bool verify_covering(const CoveringReport& report, const Body& K, const Body& B,
                     double tol = 1e-9);

}  // namespace qclab
