#pragma once

#include <liyau/geometry.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

/// Time integration of u_t = Lap_g u + f(u) with finite-time blow-up detection
/// and the compact-manifold comparison checks (mean under Jensen, minimum tracking).
namespace liyau::heatflow {

using geometry::DiscreteManifold;
using geometry::ScalarField;
using geometry::Vector;

enum class ReactionKind
{
  none,           ///< f = 0
  power_positive, ///< f(u) = u^p, u > 0
  power_odd       ///< f(u) = |u|^{p-1} u
};

struct ReactionTerm
{
  ReactionKind kind = ReactionKind::none;
  double       p    = 2.0;

  void   validate() const;
  double operator()(double u) const;
  double derivative(double u) const;
  /// Antiderivative F with F(0) = 0.
  double primitive(double u) const;
  Vector apply(const Vector & u) const;

  bool operator==(const ReactionTerm &) const = default;
};

enum class Scheme
{
  imex_euler,  ///< (I - dt L) u_{n+1} = u_n + dt f(u_n)
  explicit_rk4 ///< classical four-stage Runge-Kutta on L u + f(u)
};

std::string_view to_string(ReactionKind kind);
std::string_view to_string(Scheme scheme);
ReactionKind     reaction_kind_from_string(std::string_view name);
Scheme           scheme_from_string(std::string_view name);

struct FlowConfig
{
  ReactionTerm          reaction;
  std::optional<double> dt; ///< nullopt selects the automatic policy
  Scheme                scheme           = Scheme::imex_euler;
  double                t_end            = 1.0;
  double                blowup_threshold = 1e6;
  double                positivity_floor = 1e-12;
  int                   snapshot_stride  = 10;
  /// Upper bound on dt * max|f'(u)|, applied every step so that the approach to
  /// blow-up is resolved by many steps.
  double                growth_limit      = 0.05;
  double                solver_tolerance  = 1e-14;
  int                   solver_iterations = 20000;

  void validate() const;

  bool operator==(const FlowConfig &) const = default;
};

struct FlowState
{
  double      t = 0.0;
  ScalarField u;
};

/// Raised when the implicit solve does not reach its tolerance.
class StepFailure : public ConvergenceFailure
{
public:
  using ConvergenceFailure::ConvergenceFailure;
};

/// One-step integrator bound to a manifold; caches the implicit operator per dt.
class Stepper
{
public:
  Stepper(const DiscreteManifold & M, FlowConfig config);
  ~Stepper();
  Stepper(Stepper &&) noexcept;

  /// dt from the configuration or the automatic policy for the given data.
  double base_dt(const ScalarField & u0) const;
  /// base dt limited by the reaction growth bound at the current state.
  double next_dt(const FlowState & state, double base) const;

  FlowState step(const FlowState & state, double dt) const;

  const FlowConfig & config() const { return config_; }

private:
  struct Impl;
  const DiscreteManifold & M_;
  FlowConfig               config_;
  std::unique_ptr<Impl>    impl_;
};

inline FlowState step(const FlowState & state, const DiscreteManifold & M, const FlowConfig & config, double dt)
{
  return Stepper(M, config).step(state, dt);
}

struct Snapshot
{
  double t = 0.0;
  Vector values;
};

struct BlowupInfo
{
  bool        detected        = false;
  double      T_star_estimate = 0.0; ///< NaN when the estimator had too little data
  std::string method;
};

struct Trajectory
{
  std::uint64_t         manifold_id = 0;
  Scheme                scheme      = Scheme::imex_euler;
  ReactionTerm          reaction;
  std::vector<double>   times;
  std::vector<double>   max_u, min_u, mean_u, energy;
  std::vector<Snapshot> snapshots;
  std::optional<BlowupInfo> blowup;
  std::string           stop_reason; ///< "t_end" or "blowup"

  std::size_t size() const { return times.size(); }
};

/// Called after every accepted step (and once for the initial state).
using StepObserver = std::function<void(const FlowState &)>;

Trajectory evolve(const ScalarField & u0, const DiscreteManifold & M, const FlowConfig & config,
                  const StepObserver & observer = {});

/// Derivative of a recorded series: centered (nonuniform three-point) in the
/// interior, one-sided at the ends; or forward differences throughout
/// (matching the explicit treatment of the reaction in imex_euler).
enum class Differencing
{
  centered,
  forward
};
std::vector<double> time_derivative(const std::vector<double> & t, const std::vector<double> & y, Differencing kind);
Differencing        consistent_differencing(Scheme scheme);

/// Blow-up time from the regression of (max u)^{1-p} on t over the last decade of growth.
double detect_blowup(const Trajectory & traj, double p);

struct JensenReport
{
  double              min_D          = 0.0; ///< min of d/dt mean(u) - f(mean(u))
  double              min_D_relative = 0.0; ///< min of D / max(1, f(mean))
  double              t0             = 0.0;
  double              mean0          = 0.0;
  double              T_bound        = 0.0; ///< t0 + int_{mean0}^inf dz / f(z)
  std::optional<double> T_star;
  double              tolerance      = 0.0;
  double              time_tolerance = 0.0;
  bool                pass           = false;
  std::vector<double> D;
};

/// Mean-value comparison: d/dt mean(u) = mean(f(u)) >= f(mean(u)) for convex f.
JensenReport jensen_check(const Trajectory & traj, const DiscreteManifold & M, const ReactionTerm & reaction,
                          double tolerance = 1e-6, double time_tolerance = 0.02);

/// Integral int_a^inf dz / f(z) by adaptive quadrature (infinity when it diverges).
double blowup_time_bound(const ReactionTerm & reaction, double a);

struct MinTrackerReport
{
  double min_residual  = 0.0; ///< min of (dphi/dt - f(phi)) / max(1, |f(phi)|)
  double backward_max  = 0.0; ///< max of (dpsi/ds + f(psi)) / max(1, |f(psi)|) on the reversed series
  double tolerance     = 0.0;
  bool   pass          = false;
};

/// phi(t) = min_x u satisfies dphi/dt >= f(phi).
MinTrackerReport min_tracker_check(const Trajectory & traj, const ReactionTerm & reaction, double tolerance);

/// Tolerance for the comparison checks: 10x the largest mass-conservation
/// defect of the f = 0 flow from the same data at the same discretization.
double linear_flow_tolerance(const ScalarField & u0, const DiscreteManifold & M, const FlowConfig & config);

/// Max relative ODE residual of u_k(t) = k^{2/(p-1)} u(k^2 t) for the constant
/// blow-up family u(t) = ((p-1)(1-t))^{-1/(p-1)}, sampled at 100 times.
double scaling_symmetry_check(double p, double k);

} // namespace liyau::heatflow
