#include <liyau/elliptic.hpp>

#include <liyau/error.hpp>

#include <array>
#include <cmath>
#include <numbers>

namespace liyau::elliptic {

namespace {

void require_parameter(double m)
{
  if (!(m >= 0.0 && m < 1.0))
    throw InvalidArgument("elliptic parameter m must lie in [0, 1)");
}

} // namespace

double complete_first_kind(double m)
{
  require_parameter(m);
  double a = 1.0, b = std::sqrt(1.0 - m);
  for (int it = 0; it < 64 && std::abs(a - b) > 4e-16 * a; ++it)
    {
      const double an = 0.5 * (a + b);
      b               = std::sqrt(a * b);
      a               = an;
    }
  return std::numbers::pi / (2.0 * a);
}

Jacobi jacobi(double u, double m)
{
  require_parameter(m);
  if (m == 0.0)
    return {std::sin(u), std::cos(u), 1.0};

  constexpr int            max_levels = 32;
  std::array<double, max_levels + 1> a{}, c{};
  a[0]      = 1.0;
  double b  = std::sqrt(1.0 - m);
  c[0]      = std::sqrt(m);
  int level = 0;
  while (std::abs(c[level]) > 1e-16 && level < max_levels)
    {
      const double an = 0.5 * (a[level] + b);
      c[level + 1]    = 0.5 * (a[level] - b);
      b               = std::sqrt(a[level] * b);
      a[++level]      = an;
    }

  double phi = std::ldexp(a[level] * u, level);
  for (int n = level; n > 0; --n)
    phi = 0.5 * (phi + std::asin(c[n] * std::sin(phi) / a[n]));
  const double sn = std::sin(phi);
  // cn / cos(prev - phi) degenerates where cn vanishes
  return {sn, std::cos(phi), std::sqrt(1.0 - m * sn * sn)};
}

} // namespace liyau::elliptic
