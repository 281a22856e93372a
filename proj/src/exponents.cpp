#include <liyau/exponents.hpp>

#include <liyau/error.hpp>

#include <cmath>
#include <string>

namespace liyau::exponents {

ExponentTable exponent_table(int N)
{
  if (N < 1)
    throw InvalidArgument("dimension N must be at least 1, got " + std::to_string(N));

  const double n = N;
  ExponentTable table;
  table.N        = N;
  table.p_fujita = 1.0 + 2.0 / n;
  if (N >= 3)
    table.p_sobolev = (n + 2.0) / (n - 2.0);
  if (N >= 2)
    {
      table.p_bidaut_veron = n * (n + 2.0) / ((n - 1.0) * (n - 1.0));
      table.p_star         = (n + 2.0 + std::sqrt(n * n + 8.0 * n)) / (2.0 * (n - 1.0));
    }
  else
    table.p_star = 8.0;
  return table;
}

std::string_view to_string(Regime regime)
{
  switch (regime)
    {
      case Regime::below_fujita:
        return "below_fujita";
      case Regime::fujita_to_star:
        return "fujita_to_star";
      case Regime::star_to_sobolev:
        return "star_to_sobolev";
      case Regime::sobolev_and_above:
        return "sobolev_and_above";
    }
  return "unknown";
}

Regime classify(int N, double p)
{
  if (!(p > 1.0))
    throw InvalidArgument("exponent p must exceed 1");
  const ExponentTable t = exponent_table(N);
  if (p < t.p_fujita)
    return Regime::below_fujita;
  if (p < t.p_star)
    return Regime::fujita_to_star;
  if (p < t.p_sobolev)
    return Regime::star_to_sobolev;
  return Regime::sobolev_and_above;
}

} // namespace liyau::exponents
