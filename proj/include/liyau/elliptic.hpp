#pragma once

/// Jacobi elliptic functions by the arithmetic-geometric mean (descending Landen
/// transformation). The parameter is m = k^2 with 0 <= m < 1.
namespace liyau::elliptic {

/// Complete elliptic integral of the first kind K(m) = pi / (2 AGM(1, sqrt(1 - m))).
double complete_first_kind(double m);

struct Jacobi
{
  double sn = 0.0;
  double cn = 1.0;
  double dn = 1.0;
};

Jacobi jacobi(double u, double m);

inline double cn(double u, double m) { return jacobi(u, m).cn; }

} // namespace liyau::elliptic
