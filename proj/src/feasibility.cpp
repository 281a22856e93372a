#include <liyau/feasibility.hpp>

#include <liyau/exponents.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace liyau::feasibility {

namespace {

double lower_gamma_bound(double p, double beta)
{
  return std::max({1.0, beta, 2.0 - beta * p});
}

/// Admissible gamma interval for fixed beta: above the max-bound and inside the
/// roots of (p-1) gamma^2 - (8/N) gamma + (8/N) beta < 0.
std::optional<std::pair<double, double>> gamma_interval(int N, double p, double beta)
{
  const double a    = p - 1.0;
  const double b    = 8.0 / N;
  const double disc = b * b - 4.0 * a * b * beta;
  if (disc <= 0.0)
    return std::nullopt;
  const double root = std::sqrt(disc);
  const double lo   = std::max(lower_gamma_bound(p, beta), (b - root) / (2.0 * a));
  const double hi   = (b + root) / (2.0 * a);
  if (!(hi > lo))
    return std::nullopt;
  return std::make_pair(lo, hi);
}

/// Beta interval in which y = 2 - beta p satisfies
/// (p-1) y^2 - 8(p+1)/(N p) y + 16/(N p) < 0, intersected with (0, upper).
std::optional<std::pair<double, double>> beta_root_interval(int N, double p, double upper)
{
  const double a    = p - 1.0;
  const double b    = -8.0 * (p + 1.0) / (N * p);
  const double c    = 16.0 / (N * p);
  const double disc = b * b - 4.0 * a * c;
  if (disc <= 0.0)
    return std::nullopt;
  const double y1 = (-b - std::sqrt(disc)) / (2.0 * a);
  const double y2 = (-b + std::sqrt(disc)) / (2.0 * a);
  const double lo = std::max(0.0, (2.0 - y2) / p);
  const double hi = std::min(upper, (2.0 - y1) / p);
  if (!(hi > lo))
    return std::nullopt;
  return std::make_pair(lo, hi);
}

bool accepted(const FeasibilityReport & r)
{
  return r.s1 > strictness_margin && r.s2 > strictness_margin;
}

void require_exponent(int N, double p)
{
  if (N < 1)
    throw InvalidArgument("dimension N must be at least 1");
  if (!(p > 1.0) || !std::isfinite(p))
    throw InvalidArgument("exponent p must exceed 1");
}

} // namespace

FeasibilityReport check_constraints(int N, double p, double beta, double gamma)
{
  require_exponent(N, p);
  if (!(beta > 0.0))
    throw InvalidArgument("beta must be positive");
  if (!(gamma > beta))
    throw InvalidArgument("gamma must exceed beta (second condition undefined otherwise)");

  FeasibilityReport r;
  r.s1       = gamma - lower_gamma_bound(p, beta);
  r.s2       = 8.0 / N - gamma * gamma * (p - 1.0) / (gamma - beta);
  r.feasible = accepted(r);
  if (r.feasible)
    r.witness = std::make_pair(beta, gamma);
  return r;
}

bool quadratic_form_certificate(int N, double p, double beta, double gamma)
{
  // -(2/N) X^2 - gamma (p-1) X Y - (gamma-beta)(p-1) Y^2 is negative definite
  // iff its discriminant is negative.
  const double b = gamma * (p - 1.0);
  return b * b < 4.0 * (2.0 / N) * (gamma - beta) * (p - 1.0);
}

HarnackParams complete_params(int N, double p, double beta, double gamma, double c0)
{
  const FeasibilityReport r = check_constraints(N, p, beta, gamma);
  if (!r.feasible)
    throw Infeasible("(beta, gamma) = (" + std::to_string(beta) + ", " + std::to_string(gamma) +
                       ") violates the parameter constraints",
                     exponents::exponent_table(N).p_star);

  HarnackParams hp;
  hp.N         = N;
  hp.p         = p;
  hp.beta      = beta;
  hp.gamma     = gamma;
  hp.c0        = c0;
  hp.alpha_max = 2.0 / N - gamma * gamma * (p - 1.0) / (4.0 * (gamma - beta));
  // Half of alpha_max, capped so that the spatially constant solution keeps
  // the rho^2 term below the reaction term (p-1)(gamma-beta) u^{2p-2}.
  hp.alpha  = std::min(0.5 * hp.alpha_max, 0.5 * (p - 1.0) * gamma * gamma / (gamma - beta));
  hp.alpha1 = hp.alpha_max - hp.alpha;
  hp.alpha2 = hp.alpha / (gamma * gamma);
  hp.alpha3 = hp.alpha * (gamma - 1.0) * (gamma - 1.0) / (gamma * gamma);
  return hp;
}

HarnackParams find_params(int N, double p)
{
  require_exponent(N, p);
  const double p_star = exponents::exponent_table(N).p_star;
  if (p >= p_star - 1e-6)
    throw Infeasible(fmt::format("p = {:.6g} is not below the feasibility threshold {:.6g} for N = {}", p, p_star, N),
                     p_star);

  std::optional<double> beta;
  if (p < 1.0 + 4.0 / N)
    beta = 1e-3;
  else
    {
      const double upper = p < 2.0 ? std::min(1.0 / p, 2.0 / (p + 2.0)) : 1.0 / p;
      if (auto interval = beta_root_interval(N, p, upper))
        beta = 0.5 * (interval->first + interval->second);
    }

  if (beta)
    if (auto g = gamma_interval(N, p, *beta))
      {
        const double gamma = 0.5 * (g->first + g->second);
        if (gamma > *beta && accepted(check_constraints(N, p, *beta, gamma)))
          return complete_params(N, p, *beta, gamma);
      }

  const FeasibilityReport scan = feasible_scan(N, p);
  if (!scan.feasible)
    throw Infeasible(
      fmt::format("no admissible (beta, gamma) for N = {}, p = {:.6g} (threshold {:.6g})", N, p, p_star), p_star);
  return complete_params(N, p, scan.witness->first, scan.witness->second);
}

FeasibilityReport feasible_scan(int N, double p, const SearchBox & box, int grid_steps, int refinements)
{
  require_exponent(N, p);
  if (grid_steps < 2)
    throw InvalidArgument("grid_steps must be at least 2");

  FeasibilityReport report;
  report.box        = box;
  report.grid_steps = grid_steps;

  SearchBox current = box;
  for (int level = 0; level <= refinements; ++level)
    {
      report.refinements = level;
      const double db    = (current.beta_hi - current.beta_lo) / grid_steps;
      const double dg    = (current.gamma_hi - current.gamma_lo) / grid_steps;
      double       best  = -std::numeric_limits<double>::infinity();
      double       best_beta = current.beta_lo + db, best_gamma = current.gamma_lo + dg;
      FeasibilityReport best_report;

      for (int i = 1; i <= grid_steps; ++i)
        {
          const double beta = current.beta_lo + i * db;
          if (beta <= 0.0)
            continue;
          for (int j = 1; j <= grid_steps; ++j)
            {
              const double gamma = current.gamma_lo + j * dg;
              if (gamma <= beta)
                continue;
              FeasibilityReport r = check_constraints(N, p, beta, gamma);
              if (r.feasible)
                {
                  r.box         = box;
                  r.grid_steps  = grid_steps;
                  r.refinements = level;
                  return r;
                }
              const double margin = std::min(r.s1, r.s2);
              if (margin > best)
                {
                  best        = margin;
                  best_beta   = beta;
                  best_gamma  = gamma;
                  best_report = r;
                }
            }
        }
      report.s1 = best_report.s1;
      report.s2 = best_report.s2;

      current.beta_lo  = std::max(box.beta_lo, best_beta - 4.0 * db);
      current.beta_hi  = std::min(box.beta_hi, best_beta + 4.0 * db);
      current.gamma_lo = std::max(box.gamma_lo, best_gamma - 4.0 * dg);
      current.gamma_hi = std::min(box.gamma_hi, best_gamma + 4.0 * dg);
    }
  return report;
}

double threshold_estimate(int N, double tol, std::vector<BisectionStep> * trace)
{
  if (!(tol >= 1e-3))
    throw InvalidArgument("threshold tolerance must be at least 1e-3");
  double lo = 1.0 + 1e-3, hi = 10.0;
  if (!feasible_scan(N, lo).feasible)
    throw ConvergenceFailure("bisection bracket: lower end p = 1.001 is infeasible");
  if (feasible_scan(N, hi).feasible)
    throw ConvergenceFailure("bisection bracket: upper end p = 10 is feasible");
  while (hi - lo > tol)
    {
      const double mid = 0.5 * (lo + hi);
      const bool   ok  = feasible_scan(N, mid).feasible;
      if (trace)
        trace->push_back({lo, hi, mid, ok});
      (ok ? lo : hi) = mid;
    }
  return 0.5 * (lo + hi);
}

} // namespace liyau::feasibility
