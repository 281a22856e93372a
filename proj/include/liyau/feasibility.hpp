#pragma once

#include <liyau/error.hpp>

#include <optional>
#include <vector>

/// The Li-Yau parameter system: find (beta, gamma) with
///   gamma > max{1, beta, 2 - beta p}   and   gamma^2 (p - 1) / (gamma - beta) < 8 / N,
/// derive the coefficients of the differential inequality for
///   rho = |grad u / u|^2 - gamma (log u)_t + beta u^{p-1},
/// and locate the feasibility threshold in p by brute force.
namespace liyau::feasibility {

/// Slacks at or below this value count as "on the boundary", not feasible.
inline constexpr double strictness_margin = 1e-9;

struct HarnackParams
{
  int    N         = 1;
  double p         = 2.0;
  double beta      = 0.0;
  double gamma     = 1.0;
  double alpha     = 0.0;
  double alpha_max = 0.0; ///< 2/N - gamma^2 (p-1) / (4 (gamma - beta))
  double alpha1    = 0.0; ///< coefficient of |Lap log u|^2
  double alpha2    = 0.0; ///< coefficient of rho^2
  double alpha3    = 0.0; ///< coefficient of |grad u / u|^4
  double c0        = 1.0; ///< Harnack constant estimate, rho <= c0 K
};

struct SearchBox
{
  double beta_lo  = 0.0;
  double beta_hi  = 2.0;
  double gamma_lo = 1.0;
  double gamma_hi = 20.0;
};

struct FeasibilityReport
{
  bool                                    feasible = false;
  std::optional<std::pair<double, double>> witness; ///< (beta, gamma)
  double                                  s1 = 0.0; ///< gamma - max{1, beta, 2 - beta p}
  double                                  s2 = 0.0; ///< 8/N - gamma^2 (p-1) / (gamma - beta)
  SearchBox                               box;
  int                                     grid_steps  = 0;
  int                                     refinements = 0;
};

/// Raised when no admissible parameters exist for (N, p).
class Infeasible : public Error
{
public:
  Infeasible(const std::string & message, double threshold)
    : Error(message)
    , threshold_(threshold)
  {}
  double threshold() const { return threshold_; }

private:
  double threshold_;
};

/// Exact slacks of both conditions. Requires beta > 0, p > 1 and gamma > beta.
FeasibilityReport check_constraints(int N, double p, double beta, double gamma);

/// The same s2 condition read as negative semidefiniteness of
/// -(2/N) X^2 - gamma (p-1) X Y - (gamma - beta)(p-1) Y^2 (discriminant test).
bool quadratic_form_certificate(int N, double p, double beta, double gamma);

/// Fills in alpha, alpha1..3 for an admissible (beta, gamma).
HarnackParams complete_params(int N, double p, double beta, double gamma, double c0 = 1.0);

/// Witness by the case analysis (small beta below 1 + 4/N, beta from the
/// quadratic root interval above), falling back to feasible_scan.
HarnackParams find_params(int N, double p);

/// Exhaustive grid over the open box (lexicographic first witness). When the
/// coarse grid has no witness the box is narrowed around the point of largest
/// min(s1, s2) and rescanned `refinements` times.
FeasibilityReport feasible_scan(int N, double p, const SearchBox & box = {}, int grid_steps = 400,
                                int refinements = 3);

struct BisectionStep
{
  double lo       = 0.0;
  double hi       = 0.0;
  double mid      = 0.0;
  bool   feasible = false;
};

/// Bisection on p over [1 + 1e-3, 10] with feasible_scan as predicate.
double threshold_estimate(int N, double tol = 1e-3, std::vector<BisectionStep> * trace = nullptr);

} // namespace liyau::feasibility
