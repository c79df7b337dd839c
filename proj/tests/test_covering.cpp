#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "qclab/covering.hpp"
#include "qclab/functionals.hpp"
#include "qclab/rng.hpp"

using namespace qclab;

namespace {

struct ThreadsGuard {
  explicit ThreadsGuard(const char* value) { setenv("QCLAB_THREADS", value, 1); }
  ~ThreadsGuard() { unsetenv("QCLAB_THREADS"); }
};

// Declared as a plain star body: no convexity class, no closed-form volume.
// Exercises the code paths that must refuse to invent constants.
class PlainStar : public Body {
 public:
  PlainStar() : Body(2, BodyClass::star(), "plainstar") {}

 protected:
  double gauge_impl(const VectorXd& x) const override { return x.lpNorm<4>(); }
};

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("covering");

TEST_CASE("K = B at t = 1: one center at the origin") {
  auto d = make_euclidean_ball(3);
  auto rep = greedy_net(*d, *d, 1.0, 20000, RngStream(71, 0));
  CHECK(rep.upper_count == 1);
  REQUIRE(rep.centers.size() == 1);
  CHECK(rep.centers[0].norm() == 0.0);
  CHECK(verify_covering(rep, *d, *d));
  CHECK(rep.dim == 3);
  CHECK(rep.cloud_size == 20000);
  CHECK(std::abs(rep.m_kb - 3.0 / 4.0) < 0.02);  // cloud mean of |x| on the ball
}

TEST_CASE("interval covered by half-intervals: origin-seeded greedy takes 3") {
  // The optimum is 2 (centers near +-1/2), but the first greedy center is
  // pinned at the origin, which costs one extra translate: origin covers
  // [-1/2,1/2] and each end needs its own center. Still within the greedy
  // factor-2 guarantee.
  auto seg = make_lp_ball(1.0, 1);
  auto rep = greedy_net(*seg, *seg, 0.5, 20000, RngStream(72, 0));
  CHECK(rep.upper_count == 3);
  CHECK(verify_covering(rep, *seg, *seg));
  CHECK(rep.upper_count <= 2 * 2);
}

TEST_CASE("counts are nonincreasing in t on a shared cloud") {
  auto k = make_lp_ball(0.5, 2);
  auto d = make_euclidean_ball(2);
  std::int64_t prev = -1;
  for (double t : {0.15, 0.2, 0.3, 0.5, 0.7, 1.0}) {
    auto rep = greedy_net(*k, *d, t, 20000, RngStream(73, 0));
    CHECK(verify_covering(rep, *k, *d));
    if (prev >= 0) CHECK(rep.upper_count <= prev);
    prev = rep.upper_count;
  }
}

TEST_CASE("greedy centers are t-separated") {
  auto k = make_lp_ball(1.0, 2);
  auto d = make_euclidean_ball(2);
  auto rep = greedy_net(*k, *d, 0.35, 20000, RngStream(74, 0));
  for (std::size_t i = 0; i < rep.centers.size(); ++i)
    for (std::size_t j = i + 1; j < rep.centers.size(); ++j)
      CHECK(d->gauge(rep.centers[i] - rep.centers[j]) > 0.35 * (1.0 - 1e-12));
}

TEST_CASE("greedy is deterministic for any worker count") {
  auto k = make_lp_ball(0.5, 2);
  auto d = make_euclidean_ball(2);
  CoveringReport a, b;
  {
    ThreadsGuard g("1");
    a = greedy_net(*k, *d, 0.25, 30000, RngStream(75, 0));
  }
  {
    ThreadsGuard g("6");
    b = greedy_net(*k, *d, 0.25, 30000, RngStream(75, 0));
  }
  REQUIRE(a.centers.size() == b.centers.size());
  for (std::size_t i = 0; i < a.centers.size(); ++i) CHECK(a.centers[i] == b.centers[i]);
  CHECK(a.m_kb == b.m_kb);
}

TEST_CASE("center cap aborts with a certified partial count") {
  auto d = make_euclidean_ball(2);
  GreedyOptions opts;
  opts.center_cap = 5;
  try {
    greedy_net(*d, *d, 0.02, 20000, RngStream(76, 0), opts);
    FAIL("expected CenterCapExceeded");
  } catch (const CenterCapExceeded& e) {
    CHECK(e.partial_count() == 5);
    CHECK(std::string(e.what()).find("cap") != std::string::npos);
  }
}

TEST_CASE("center shrink keeps centers inside shrink*K") {
  auto d = make_euclidean_ball(2);
  GreedyOptions opts;
  opts.center_shrink = 0.4;
  auto rep = greedy_net(*d, *d, 0.8, 20000, RngStream(77, 0), opts);
  CHECK(rep.center_shrink == 0.4);
  for (const auto& c : rep.centers) CHECK(d->gauge(c) <= 0.4 * (1.0 + 1e-9));
}

TEST_CASE("verify_covering rejects tampered certificates") {
  auto d = make_euclidean_ball(2);
  auto rep = greedy_net(*d, *d, 0.5, 5000, RngStream(78, 0));
  REQUIRE(verify_covering(rep, *d, *d));

  CoveringReport wrong_t = rep;
  wrong_t.t = rep.t / 8.0;
  CHECK_FALSE(verify_covering(wrong_t, *d, *d));

  CoveringReport moved = rep;
  for (auto& c : moved.centers) c += vec2(10.0, 0.0);
  CHECK_FALSE(verify_covering(moved, *d, *d));

  CoveringReport outside = rep;
  outside.centers[0] = vec2(5.0, 5.0);
  CHECK_FALSE(verify_covering(outside, *d, *d));
}

TEST_CASE("volume lower bound formulas") {
  auto d2 = make_euclidean_ball(2);
  auto b1 = make_lp_ball(1.0, 2);
  CHECK(volume_lower(*d2, *d2, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  // doubling resolution costs 2^n
  const double v1 = volume_lower(*b1, *d2, 0.4);
  const double v2 = volume_lower(*b1, *d2, 0.2);
  CHECK(v2 == doctest::Approx(std::exp2(2.0) * v1).epsilon(1e-12));
  // area(B_1^2) = 2 against pi t^2
  CHECK(volume_lower(*b1, *d2, 0.1) ==
        doctest::Approx(2.0 / (oracle::kPi * 0.01)).epsilon(1e-12));
  PlainStar star;
  CHECK_THROWS_AS(volume_lower(star, *d2, 0.5), std::runtime_error);
}

TEST_CASE("volume lower bound is reflected in the greedy report") {
  auto b1 = make_lp_ball(1.0, 2);
  auto d2 = make_euclidean_ball(2);
  auto rep = greedy_net(*b1, *d2, 0.3, 30000, RngStream(79, 0));
  REQUIRE(rep.volume_lower.has_value());
  CHECK(*rep.volume_lower == doctest::Approx(volume_lower(*b1, *d2, 0.3)).epsilon(1e-12));
  // the cloud certificate can not beat the volumetric floor by much; allow
  // the finite-cloud slack to sit a little under it
  CHECK(static_cast<double>(rep.upper_count) >= *rep.volume_lower * 0.8);

  PlainStar star;
  auto rep2 = greedy_net(star, *d2, 0.5, 5000, RngStream(79, 1));
  CHECK_FALSE(rep2.volume_lower.has_value());
  CHECK(rep2.a_cover == 2.0);  // covering body is the euclidean ball

  auto rep3 = greedy_net(*d2, star, 0.5, 5000, RngStream(79, 2));
  CHECK(rep3.a_cover == 0.0);  // star covering body carries no constant
}

TEST_CASE("lemma 2 bound shape") {
  auto d = make_euclidean_ball(2);
  // t -> infinity collapses the exponent
  CHECK(lemma2_bound(*d, 1.0, 1e9, 2.0) == doctest::Approx(2.0).epsilon(1e-6));
  // doubling t quarters the exponent
  const double b1 = std::log(lemma2_bound(*d, 1.0, 0.5, 2.0) / 2.0);
  const double b2 = std::log(lemma2_bound(*d, 1.0, 1.0, 2.0) / 2.0);
  CHECK(b2 == doctest::Approx(b1 / 4.0).epsilon(1e-12));
  PlainStar star;
  CHECK_THROWS_AS(lemma2_bound(star, 1.0, 0.5, 2.0), std::invalid_argument);

  // greedy count for D covered by tD stays under the bound (M_K = 1)
  auto rep = greedy_net(*d, *d, 0.5, 20000, RngStream(80, 0));
  CHECK(static_cast<double>(rep.upper_count) <= lemma2_bound(*d, 1.0, 0.5, 2.0));
  CHECK(rep.lemma2_bound(2.0) >= static_cast<double>(rep.upper_count));
}

TEST_CASE("lemma 4 bound shape") {
  auto k = make_lp_ball(0.5, 2);
  auto d = make_euclidean_ball(2);
  const double m = 0.4, t = 0.3, c = 2.0;
  // theta=2, c_theta=1, B=D reproduces the lemma-2 shape 2 e^{(cn/2)(2m/t)^2}
  const double expect = 2.0 * std::exp(0.5 * c * 2.0 * std::pow(2.0 * m / t, 2.0));
  CHECK(lemma4_bound(*k, *d, m, t, 2.0, 1.0, c) == doctest::Approx(expect).epsilon(1e-12));
  // t -> infinity leaves 2 c_theta^n (theta=1/2 tails decay like 1/sqrt(t),
  // so push t far out)
  CHECK(lemma4_bound(*k, *d, m, 1e18, 0.5, 1.3, c) ==
        doctest::Approx(2.0 * std::pow(1.3, 2.0)).epsilon(1e-6));
}

TEST_CASE("absorption formula values") {
  auto d = make_euclidean_ball(2);

  auto build = [&](double p, double r) {
    const double factor = (1.0 - r) * std::pow(2.0, 1.0 / p - 0.5);
    auto k = scale_body(make_lp_ball(p, 2), factor);
    GreedyOptions opts;
    opts.center_shrink = r;
    auto cover = greedy_net(*d, *k, 1.0, 20000, RngStream(81, static_cast<std::uint64_t>(p * 100 + r * 10)), opts);
    return absorption_check(*d, *k, r, cover);
  };

  auto a = build(1.0, 0.5);
  CHECK(a.holds);
  CHECK(a.t_r == doctest::Approx(2.0).epsilon(1e-12));
  // p=1 is the tight case: the probe max approaches t_r from below
  CHECK(a.max_gauge <= a.t_r + 1e-7);
  CHECK(a.max_gauge > 0.9 * a.t_r);

  auto b = build(0.5, 0.25);
  CHECK(b.holds);
  CHECK(b.t_r == doctest::Approx(4.0).epsilon(1e-12));

  auto c = build(0.5, 1e-6);
  CHECK(c.holds);
  CHECK(std::abs(c.t_r - 1.0) < 1e-2);  // r -> 0 limit: B sits inside K itself
}

TEST_CASE("absorption rejects bad premises") {
  auto d = make_euclidean_ball(2);
  auto k = scale_body(make_lp_ball(1.0, 2), 0.5 * std::pow(2.0, 0.5));
  // centers were NOT shrunk: the covering premise "centers in rB" fails
  auto cover = greedy_net(*d, *k, 1.0, 10000, RngStream(82, 0));
  try {
    absorption_check(*d, *k, 0.3, cover);
    FAIL("expected a precondition failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("precondition") != std::string::npos);
  }

  PlainStar star;
  auto cover2 = greedy_net(*d, star, 1.0, 2000, RngStream(82, 1));
  CHECK_THROWS_AS(absorption_check(*d, star, 0.5, cover2), std::invalid_argument);

  GreedyOptions opts;
  opts.center_shrink = 0.5;
  auto cover3 = greedy_net(*d, *k, 1.0, 10000, RngStream(82, 2), opts);
  CHECK_THROWS_AS(absorption_check(*d, *k, 0.0, cover3), std::invalid_argument);
  CHECK_THROWS_AS(absorption_check(*d, *k, 1.0, cover3), std::invalid_argument);
}

TEST_CASE("entropy numbers: e_1 of (K,K) is 1 and e_k is monotone") {
  auto d = make_euclidean_ball(2);
  auto e1 = entropy_number(*d, *d, 1, 1e-3, 20000, RngStream(83, 0));
  CHECK(e1.k == 1);
  CHECK(std::abs(e1.e_k - 1.0) < 0.02);
  CHECK(e1.lower <= e1.e_k);
  CHECK(e1.e_k <= e1.upper);
  CHECK(e1.upper - e1.lower <= 1e-3 * (1.0 + 1e-12));

  double prev = 1e300;
  for (int k = 1; k <= 5; ++k) {
    auto e = entropy_number(*d, *d, k, 1e-3, 20000, RngStream(83, 0));
    CHECK(e.e_k <= prev + 1e-12);  // shared dyadic grid makes this exact
    prev = e.e_k;
  }
}

TEST_CASE("entropy numbers scale exactly with the inner body") {
  auto d = make_euclidean_ball(2);
  auto twice = scale_body(make_euclidean_ball(2), 2.0);
  // halving the tolerance matches the bisection step-for-step on the
  // half-scale problem, so the result is exactly half
  auto a = entropy_number(*d, *d, 3, 1e-3, 10000, RngStream(84, 0));
  auto b = entropy_number(*d, *twice, 3, 5e-4, 10000, RngStream(84, 0));
  CHECK(b.e_k == a.e_k / 2.0);
}

TEST_SUITE_END();
