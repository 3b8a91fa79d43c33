#pragma once

namespace msr {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1],
/// evaluated by a modified-Lentz continued fraction.
double regularized_incomplete_beta(double x, double a, double b);

/// P(F > f) for an F(df1, df2) distribution. Returns 1 for f <= 0 and 0 for f = +inf.
double f_distribution_upper_tail(double f, double df1, double df2);

}  // namespace msr
