#pragma once

#include <cstdint>
#include <vector>

#include "qclab/body.hpp"
#include "qclab/rng.hpp"

namespace qclab {

// Monte Carlo result. Reproducible bit-exactly from (seed, stream, samples)
// regardless of how many workers shard the sum.
struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(samples)
  std::int64_t samples = 0;
  std::uint64_t seed = 0;

  double half_width_3sigma() const { return 3.0 * std_error; }
};

// Points with the normalized rotation-invariant distribution on S^{n-1}.
std::vector<VectorXd> sample_sphere(int n, int count, RngStream& rng);

// Points uniform in the body; every returned x has gauge(x) <= 1 + 1e-12.
std::vector<VectorXd> sample_body_uniform(const Body& body, int count, RngStream& rng);

// M_K: mean gauge over the euclidean sphere.
MCEstimate estimate_M(const Body& body, std::int64_t count, const RngStream& rng);

// M*_K: mean support function over sphere directions. Bodies without a
// closed-form support use a shared sample cloud of `cloud_size` points.
MCEstimate estimate_M_star(const Body& body, std::int64_t count, const RngStream& rng,
                           int cloud_size = 20000);

// M(K,B): mean gauge_B of a uniform point of K. B = euclidean ball gives M~_K.
MCEstimate estimate_MKB(const Body& K, const Body& B, std::int64_t count, const RngStream& rng);

// A(n,k) = sqrt(n/k) * mean over the sphere of the norm of the first k
// coordinates; evaluated in closed form through log-Gamma.
double factor_A(int n, int k);

// Lower estimate of c_theta(K), the best constant with
// |x+y|^t + |x-y|^t <= 2 c^t (|x|^t + |y|^t); sup over random pairs plus
// deterministic families, never below 1.
double estimate_c_theta(const Body& body, double theta, std::int64_t budget, const RngStream& rng);

// One draw from the density proportional to exp(-t^p) on [0, inf).
double sample_power_exponential(double p, RngStream& rng);

}  // namespace qclab
