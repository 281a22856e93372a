#pragma once

#include <liyau/geometry.hpp>

#include <vector>

/// Sign-changing steady states of -Lap U = |U|^{p-1} U on a closed manifold,
/// obtained by minimizing the Dirichlet energy on
///   A = { int |u|^{p+1} = 1, int |u|^{p-1} u = 0 }
/// and rescaling by the Lagrange multiplier.
namespace liyau::steady {

using geometry::DiscreteManifold;
using geometry::ScalarField;
using geometry::Vector;

struct ConstraintState
{
  ScalarField u;
  double      c1 = 0.0; ///< int |u|^{p+1}
  double      c2 = 0.0; ///< int |u|^{p-1} u
  double      E  = 0.0; ///< 1/2 int |grad u|^2
};

ConstraintState constraint_state(const ScalarField & u, const DiscreteManifold & M, double p);

struct Projection
{
  ScalarField u;
  double      shift = 0.0; ///< c in s (u - c)
  double      scale = 1.0; ///< s
};

/// Shift by bisection to zero the sign constraint, then scale to unit L^{p+1} norm.
Projection  project_to_A_detail(const ScalarField & u, const DiscreteManifold & M, double p);
ScalarField project_to_A(const ScalarField & u, const DiscreteManifold & M, double p);

struct MinimizeOptions
{
  double energy_tolerance   = 1e-12;
  double gradient_tolerance = 1e-8; ///< projected-gradient norm relative to lambda
  int    max_iterations     = 50000;
  double initial_step       = 1.0;
  bool   record_history     = false;
};

struct SteadyResult
{
  ScalarField         u_inf;
  double              energy = 0.0;
  double              lambda = 0.0;
  double              mu     = 0.0;
  ScalarField         U;
  double              pde_residual  = 0.0;
  double              gradient_norm = 0.0;
  int                 iterations    = 0;
  bool                converged     = false;
  std::vector<double> energy_history; ///< accepted energies when requested
};

SteadyResult minimize_energy(const DiscreteManifold & M, double p, const ScalarField & seed,
                             const MinimizeOptions & opts = {});

struct Multipliers
{
  double lambda = 0.0;
  double mu     = 0.0;
};

/// lambda = int (-Lap u) u, mu = int (-Lap u) / int |u|^{p-1}.
Multipliers multipliers(const ScalarField & u, const DiscreteManifold & M, double p);

/// ||Lap U + |U|^{p-1} U||_inf / ||U||_inf^p.
double pde_residual(const ScalarField & U, const DiscreteManifold & M, double p);

struct Rescaled
{
  ScalarField U;
  double      residual = 0.0;
};

/// U = lambda^{1/(p-1)} u and its PDE residual.
Rescaled rescale_and_residual(const ScalarField & u, double lambda, const DiscreteManifold & M, double p);

/// Periodic solution of -U'' = |U|^{p-1} U on a circle with its maximum at x = 0.
class PeriodicProfile
{
public:
  PeriodicProfile(double p, double L, int modes, double amplitude, std::vector<double> quarter_values,
                  std::vector<double> quarter_slopes, bool elliptic);

  double p() const { return p_; }
  double length() const { return L_; }
  int    modes() const { return modes_; }
  double amplitude() const { return amplitude_; }
  double period() const { return L_ / modes_; }
  bool   elliptic_branch() const { return elliptic_; }

  double operator()(double x) const;
  double derivative(double x) const;

  /// 1/2 int U'^2 and int |U|^{p+1} over the circle by composite Simpson.
  double energy(int panels = 20000) const;
  double norm_pow(int panels = 20000) const;
  /// Energy and multiplier of U rescaled into the constraint family.
  double normalized_energy(int panels = 20000) const;
  double normalized_lambda(int panels = 20000) const;

  ScalarField sample(const DiscreteManifold & M, double shift = 0.0, double sign = 1.0) const;

private:
  /// Value and slope on [0, P/4] by Hermite interpolation of the table (or closed form).
  std::pair<double, double> quarter(double x) const;

  double              p_, L_;
  int                 modes_;
  double              amplitude_;
  std::vector<double> values_, slopes_;
  bool                elliptic_;
};

/// p = 3: U = a cn(a x, 1/2) with a = 4 m K(1/2) / L; otherwise shooting on the
/// quarter period with bisection on the amplitude.
PeriodicProfile oracle_1d(double p, double L, int modes = 1);

struct Alignment
{
  double shift    = 0.0;
  double sign     = 1.0;
  double distance = 0.0; ///< volume-weighted L^2 distance after alignment
};

/// Best circle shift and sign of the oracle against U on a one-dimensional torus.
Alignment align_to_oracle(const ScalarField & U, const DiscreteManifold & M, const PeriodicProfile & oracle);

} // namespace liyau::steady
