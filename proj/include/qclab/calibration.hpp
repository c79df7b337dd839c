#pragma once

namespace qclab::calibration {

// Constants measured once by tools/calibrate and frozen here; the seeds and
// grids of those runs are recorded in the tool itself. Tests and reports use
// these as fixed inputs — regenerating them is a deliberate, separate step.

// Concentration of |P y| for a Haar rank-k projection: empirical failure of
// the two-sided sandwich stays below sqrt(pi/2) exp(-eps^2 k / c).
inline constexpr double kJlBoundC = 4.45;

// The lemma's applicability regime, eps > sqrt(c/k) and N < exp(eps^2 k / c);
// kept separate from the bound constant in case the two differ empirically.
inline constexpr double kJlRegimeC = 0.80;

// Absolute constant of the p-convex covering bound
// N(K, tB) <= 2 c_theta^n exp((c n / theta)(a M(K,B)/t)^theta).
inline constexpr double kLemma4CAbs = 0.5;

// Reports flag "n large enough" as n >= c / (1 - lambda)^2; reuses the
// projection regime constant.
inline constexpr double kSmallNC = kJlRegimeC;

}  // namespace qclab::calibration
