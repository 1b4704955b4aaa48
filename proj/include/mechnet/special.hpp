// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace mechnet::special {

// log|Gamma(x)| via the Lanczos approximation (g = 7, 9 terms) with
// reflection below 0.5. Re-entrant, unlike ::lgamma.
double lgamma(double x);

// psi(x) = d/dx log Gamma(x): upward recurrence to x >= 6, then the
// asymptotic series. Reflection for x < 0.
double digamma(double x);

// psi'(x), same scheme as digamma.
double trigamma(double x);

double softplus(double x);

}  // namespace mechnet::special
