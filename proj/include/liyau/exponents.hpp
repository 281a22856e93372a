#pragma once

#include <limits>
#include <string_view>

/// The four critical exponents of the semilinear heat equation u_t - Lap u = u^p.
namespace liyau::exponents {

/// +infinity stands for "no finite threshold in this dimension".
inline constexpr double unbounded = std::numeric_limits<double>::infinity();

struct ExponentTable
{
  int    N              = 1;
  double p_sobolev      = unbounded; ///< (N+2)/(N-2) for N >= 3
  double p_bidaut_veron = unbounded; ///< N(N+2)/(N-1)^2 for N >= 2
  double p_fujita       = 3.0;       ///< 1 + 2/N
  double p_star         = 8.0;       ///< (N+2+sqrt(N^2+8N)) / (2(N-1)) for N >= 2, 8 for N = 1
};

ExponentTable exponent_table(int N);

enum class Regime
{
  below_fujita,
  fujita_to_star,
  star_to_sobolev,
  sobolev_and_above
};

std::string_view to_string(Regime regime);

/// Locates p on the half-open intervals [1, p_F), [p_F, p_*), [p_*, p_S), [p_S, inf).
Regime classify(int N, double p);

} // namespace liyau::exponents
