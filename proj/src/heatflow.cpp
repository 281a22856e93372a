#include <liyau/heatflow.hpp>

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

namespace liyau::heatflow {

using geometry::Index;
using geometry::SparseMatrix;

// ---------------------------------------------------------------------------
// Reaction terms

void ReactionTerm::validate() const
{
  if (kind != ReactionKind::none && !(p > 1.0 && std::isfinite(p)))
    throw InvalidArgument("power reaction needs an exponent p > 1");
}

double ReactionTerm::operator()(double u) const
{
  switch (kind)
    {
      case ReactionKind::none:
        return 0.0;
      case ReactionKind::power_positive:
        return u > 0.0 ? std::pow(u, p) : 0.0;
      case ReactionKind::power_odd:
        return std::copysign(std::pow(std::abs(u), p), u);
    }
  return 0.0;
}

double ReactionTerm::derivative(double u) const
{
  switch (kind)
    {
      case ReactionKind::none:
        return 0.0;
      case ReactionKind::power_positive:
        return u > 0.0 ? p * std::pow(u, p - 1.0) : 0.0;
      case ReactionKind::power_odd:
        return p * std::pow(std::abs(u), p - 1.0);
    }
  return 0.0;
}

double ReactionTerm::primitive(double u) const
{
  switch (kind)
    {
      case ReactionKind::none:
        return 0.0;
      case ReactionKind::power_positive:
        return u > 0.0 ? std::pow(u, p + 1.0) / (p + 1.0) : 0.0;
      case ReactionKind::power_odd:
        return std::pow(std::abs(u), p + 1.0) / (p + 1.0);
    }
  return 0.0;
}

Vector ReactionTerm::apply(const Vector & u) const
{
  if (kind == ReactionKind::none)
    return Vector::Zero(u.size());
  return u.unaryExpr([this](double x) { return (*this)(x); });
}

std::string_view to_string(ReactionKind kind)
{
  switch (kind)
    {
      case ReactionKind::none:
        return "none";
      case ReactionKind::power_positive:
        return "power_positive";
      case ReactionKind::power_odd:
        return "power_odd";
    }
  return "unknown";
}

std::string_view to_string(Scheme scheme)
{
  return scheme == Scheme::imex_euler ? "imex_euler" : "explicit_rk4";
}

ReactionKind reaction_kind_from_string(std::string_view name)
{
  if (name == "none")
    return ReactionKind::none;
  if (name == "power_positive")
    return ReactionKind::power_positive;
  if (name == "power_odd")
    return ReactionKind::power_odd;
  throw InvalidArgument("unknown reaction kind '" + std::string(name) + "'");
}

Scheme scheme_from_string(std::string_view name)
{
  if (name == "imex_euler")
    return Scheme::imex_euler;
  if (name == "explicit_rk4")
    return Scheme::explicit_rk4;
  throw InvalidArgument("unknown scheme '" + std::string(name) + "'");
}

void FlowConfig::validate() const
{
  reaction.validate();
  if (dt && !(*dt > 0.0))
    throw InvalidArgument("time step must be positive");
  if (!(t_end > 0.0))
    throw InvalidArgument("t_end must be positive");
  if (!(blowup_threshold > 0.0))
    throw InvalidArgument("blow-up threshold must be positive");
  if (!(positivity_floor > 0.0))
    throw InvalidArgument("positivity floor must be positive");
  if (snapshot_stride < 1)
    throw InvalidArgument("snapshot stride must be at least 1");
  if (!(growth_limit > 0.0))
    throw InvalidArgument("growth limit must be positive");
}

// ---------------------------------------------------------------------------
// Stepper

struct Stepper::Impl
{
  using Solver = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper>;

  double       cached_dt = -1.0;
  SparseMatrix system;
  Solver       solver;

  void prepare(const DiscreteManifold & M, double dt, const FlowConfig & config)
  {
    if (dt == cached_dt)
      return;
    // W - dt S with S = W L negative semidefinite: symmetric positive definite.
    system = (-dt) * M.stiffness();
    const Vector & w = M.volume_weights();
    for (Index i = 0; i < w.size(); ++i)
      system.coeffRef(i, i) += w[i];
    system.makeCompressed();
    solver.setTolerance(config.solver_tolerance);
    solver.setMaxIterations(config.solver_iterations);
    solver.compute(system);
    cached_dt = dt;
  }
};

Stepper::Stepper(const DiscreteManifold & M, FlowConfig config)
  : M_(M)
  , config_(std::move(config))
  , impl_(std::make_unique<Impl>())
{
  config_.validate();
}

Stepper::~Stepper()                    = default;
Stepper::Stepper(Stepper &&) noexcept = default;

double Stepper::base_dt(const ScalarField & u0) const
{
  if (config_.dt)
    return *config_.dt;
  if (config_.scheme == Scheme::imex_euler)
    {
      double fmax = 0.0;
      for (Index i = 0; i < u0.size(); ++i)
        fmax = std::max(fmax, std::abs(config_.reaction.derivative(u0[i])));
      return fmax > 0.0 ? std::min(1e-3, 0.5 / fmax) : 1e-3;
    }
  if (M_.structured())
    {
      double hmin = std::numeric_limits<double>::infinity();
      for (int a = 0; a < M_.dimension(); ++a)
        hmin = std::min(hmin, M_.spacing(a));
      return 0.2 * hmin * hmin;
    }
  // Gershgorin: the spectrum of L lies in [-2 max|L_ii|, 0].
  const double diag = M_.laplacian().diagonal().cwiseAbs().maxCoeff();
  return 1.0 / (2.0 * diag);
}

double Stepper::next_dt(const FlowState & state, double base) const
{
  double fmax = 0.0;
  for (Index i = 0; i < state.u.size(); ++i)
    fmax = std::max(fmax, std::abs(config_.reaction.derivative(state.u[i])));
  if (fmax > 0.0)
    return std::min(base, config_.growth_limit / fmax);
  return base;
}

FlowState Stepper::step(const FlowState & state, double dt) const
{
  M_.check(state.u);
  if (!(dt > 0.0))
    throw InvalidArgument("time step must be positive");
  // Step with the increment the recorded times will show.
  const double t_next = state.t + dt;
  dt                  = t_next - state.t;
  const Vector & u = state.u.values;
  const auto &   f = config_.reaction;

  if (config_.scheme == Scheme::imex_euler)
    {
      impl_->prepare(M_, dt, config_);
      const Vector rhs = M_.volume_weights().cwiseProduct(u + dt * f.apply(u));
      Vector       next = impl_->solver.solveWithGuess(rhs, u);
      if (impl_->solver.info() != Eigen::Success)
        throw StepFailure("implicit solve stopped after " + std::to_string(impl_->solver.iterations()) +
                          " iterations with relative residual " + std::to_string(impl_->solver.error()) +
                          " at t = " + std::to_string(state.t) + ", dt = " + std::to_string(dt));
      // Constants span the kernel of S, so removing the residual's constant
      // component restores the discrete mass balance exactly.
      const Vector & w = M_.volume_weights();
      next.array() += (rhs.sum() - w.dot(next)) / M_.total_volume();
      return FlowState{t_next, ScalarField{M_.id(), std::move(next)}};
    }

  const auto & L   = M_.laplacian();
  auto         rhs = [&](const Vector & v) -> Vector { return L * v + f.apply(v); };
  const Vector k1  = rhs(u);
  const Vector k2  = rhs(u + 0.5 * dt * k1);
  const Vector k3  = rhs(u + 0.5 * dt * k2);
  const Vector k4  = rhs(u + dt * k3);
  return FlowState{t_next, ScalarField{M_.id(), u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)}};
}

// ---------------------------------------------------------------------------
// Trajectories

namespace {

double flow_energy(const DiscreteManifold & M, const ScalarField & u, const ReactionTerm & f)
{
  double potential = 0.0;
  for (Index i = 0; i < u.size(); ++i)
    potential += M.volume_weights()[i] * f.primitive(u[i]);
  return geometry::dirichlet_energy(M, u) - potential;
}

void record(Trajectory & traj, const DiscreteManifold & M, const FlowState & s, const ReactionTerm & f)
{
  traj.times.push_back(s.t);
  traj.max_u.push_back(s.u.values.maxCoeff());
  traj.min_u.push_back(s.u.values.minCoeff());
  traj.mean_u.push_back(M.mean(s.u));
  traj.energy.push_back(flow_energy(M, s.u, f));
}

} // namespace

Trajectory evolve(const ScalarField & u0, const DiscreteManifold & M, const FlowConfig & config,
                  const StepObserver & observer)
{
  M.check(u0);
  config.validate();
  if (!u0.values.allFinite())
    throw InvalidArgument("initial data must be finite");
  if (config.reaction.kind == ReactionKind::power_positive && !(u0.values.minCoeff() > 0.0))
    throw InvalidArgument("power_positive reaction needs strictly positive initial data");
  if (!(config.blowup_threshold > u0.values.maxCoeff()))
    throw InvalidArgument("blow-up threshold must exceed the initial maximum");

  Stepper    stepper(M, config);
  Trajectory traj;
  traj.manifold_id = M.id();
  traj.scheme      = config.scheme;
  traj.reaction    = config.reaction;

  FlowState state{0.0, u0};
  record(traj, M, state, config.reaction);
  traj.snapshots.push_back({state.t, state.u.values});
  if (observer)
    observer(state);

  const double base  = stepper.base_dt(u0);
  const double slack = 1e-12 * std::max(1.0, config.t_end);
  std::size_t  steps = 0;
  traj.stop_reason   = "t_end";
  while (state.t < config.t_end - slack)
    {
      const double dt = std::min(stepper.next_dt(state, base), config.t_end - state.t);
      state           = stepper.step(state, dt);
      ++steps;

      if (!state.u.values.allFinite() || state.u.values.maxCoeff() >= config.blowup_threshold)
        {
          if (state.u.values.allFinite())
            {
              record(traj, M, state, config.reaction);
              traj.snapshots.push_back({state.t, state.u.values});
            }
          traj.stop_reason = "blowup";
          BlowupInfo info;
          info.detected = true;
          try
            {
              info.T_star_estimate = detect_blowup(traj, config.reaction.p);
              info.method          = "regression of (max u)^(1-p) on t over the last decade of growth";
            }
          catch (const Error & e)
            {
              info.T_star_estimate = std::numeric_limits<double>::quiet_NaN();
              info.method          = e.what();
            }
          traj.blowup = info;
          return traj;
        }

      record(traj, M, state, config.reaction);
      if (steps % static_cast<std::size_t>(config.snapshot_stride) == 0)
        traj.snapshots.push_back({state.t, state.u.values});
      if (observer)
        observer(state);
    }
  if (traj.snapshots.back().t != state.t)
    traj.snapshots.push_back({state.t, state.u.values});
  return traj;
}

std::vector<double> time_derivative(const std::vector<double> & t, const std::vector<double> & y, Differencing kind)
{
  if (t.size() != y.size())
    throw InvalidArgument("time and value series differ in length");
  const std::size_t   n = t.size();
  std::vector<double> d(n, 0.0);
  if (n < 2)
    return d;
  auto forward  = [&](std::size_t i) { return (y[i + 1] - y[i]) / (t[i + 1] - t[i]); };
  auto backward = [&](std::size_t i) { return (y[i] - y[i - 1]) / (t[i] - t[i - 1]); };
  if (kind == Differencing::forward)
    {
      for (std::size_t i = 0; i + 1 < n; ++i)
        d[i] = forward(i);
      d[n - 1] = backward(n - 1);
      return d;
    }
  d[0]     = forward(0);
  d[n - 1] = backward(n - 1);
  for (std::size_t i = 1; i + 1 < n; ++i)
    {
      const double h1 = t[i] - t[i - 1];
      const double h2 = t[i + 1] - t[i];
      d[i] = -h2 / (h1 * (h1 + h2)) * y[i - 1] + (h2 - h1) / (h1 * h2) * y[i] + h1 / (h2 * (h1 + h2)) * y[i + 1];
    }
  return d;
}

Differencing consistent_differencing(Scheme scheme)
{
  return scheme == Scheme::imex_euler ? Differencing::forward : Differencing::centered;
}

double detect_blowup(const Trajectory & traj, double p)
{
  if (!(p > 1.0))
    throw InvalidArgument("blow-up estimator needs p > 1");
  if (traj.max_u.empty())
    throw Error("empty trajectory");
  const double top = traj.max_u.back();
  std::vector<double> ts, zs;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.max_u[i] >= top / 10.0)
      {
        ts.push_back(traj.times[i]);
        zs.push_back(std::pow(traj.max_u[i], 1.0 - p));
      }
  if (ts.size() < 10)
    throw Error("insufficient growth data: " + std::to_string(ts.size()) + " points in the last decade");

  const double n     = static_cast<double>(ts.size());
  const double tbar  = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
  const double zbar  = std::accumulate(zs.begin(), zs.end(), 0.0) / n;
  double       sxx = 0.0, sxz = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i)
    {
      sxx += (ts[i] - tbar) * (ts[i] - tbar);
      sxz += (ts[i] - tbar) * (zs[i] - zbar);
    }
  const double slope = sxz / sxx;
  if (!(slope < 0.0))
    throw Error("max u is not growing like a blow-up profile");
  return tbar - zbar / slope;
}

// ---------------------------------------------------------------------------
// Comparison checks

namespace {

double adaptive_simpson(const std::function<double(double)> & g, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth)
{
  const double m   = 0.5 * (a + b);
  const double lm  = 0.5 * (a + m);
  const double rm  = 0.5 * (m + b);
  const double flm = g(lm);
  const double frm = g(rm);
  const double left  = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double blowup_time_bound(const ReactionTerm & reaction, double a)
{
  reaction.validate();
  if (reaction.kind == ReactionKind::none || !(a > 0.0))
    return std::numeric_limits<double>::infinity();
  // z = a / s^m maps (0, 1] onto [a, inf); m is chosen so the integrand vanishes at s = 0.
  const double m = std::ceil(2.0 / (reaction.p - 1.0)) + 1.0;
  auto         g = [&](double s) {
    if (s <= 0.0)
      return 0.0;
    const double z = a * std::pow(s, -m);
    return a * m * std::pow(s, -m - 1.0) / reaction(z);
  };
  const double fa = g(0.0), fm = g(0.5), fb = g(1.0);
  const double whole = (fa + 4.0 * fm + fb) / 6.0;
  return adaptive_simpson(g, 0.0, 1.0, fa, fm, fb, whole, 1e-13, 50);
}

JensenReport jensen_check(const Trajectory & traj, const DiscreteManifold & M, const ReactionTerm & reaction,
                          double tolerance, double time_tolerance)
{
  if (traj.manifold_id != M.id())
    throw ManifoldMismatch("trajectory was computed on another manifold");
  reaction.validate();
  if (reaction.kind == ReactionKind::power_odd)
    throw InvalidArgument("Jensen comparison needs a convex reaction; |u|^{p-1}u is not convex");
  if (traj.size() < 2)
    throw InvalidArgument("trajectory too short for a derivative");

  const Differencing  kind = consistent_differencing(traj.scheme);
  const auto          dm   = time_derivative(traj.times, traj.mean_u, kind);
  const std::size_t   last = kind == Differencing::forward ? traj.size() - 1 : traj.size();

  JensenReport r;
  r.tolerance      = tolerance;
  r.time_tolerance = time_tolerance;
  r.t0             = traj.times.front();
  r.mean0          = traj.mean_u.front();
  r.min_D          = std::numeric_limits<double>::infinity();
  r.min_D_relative = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < last; ++i)
    {
      const double fm = reaction(traj.mean_u[i]);
      const double D  = dm[i] - fm;
      r.D.push_back(D);
      r.min_D          = std::min(r.min_D, D);
      r.min_D_relative = std::min(r.min_D_relative, D / std::max(1.0, std::abs(fm)));
    }
  r.T_bound = r.t0 + blowup_time_bound(reaction, r.mean0);

  bool time_ok = true;
  if (traj.blowup && traj.blowup->detected)
    {
      const double est = traj.blowup->T_star_estimate;
      r.T_star         = std::isfinite(est) ? est : traj.times.back();
      time_ok          = *r.T_star <= r.T_bound + time_tolerance;
    }
  else
    time_ok = traj.times.back() <= r.T_bound + time_tolerance;
  r.pass = time_ok && r.min_D_relative >= -tolerance;
  return r;
}

MinTrackerReport min_tracker_check(const Trajectory & traj, const ReactionTerm & reaction, double tolerance)
{
  reaction.validate();
  if (reaction.kind == ReactionKind::power_odd)
    throw InvalidArgument("minimum tracking needs a nonnegative reaction");
  if (traj.size() < 2)
    throw InvalidArgument("trajectory too short for a derivative");

  const Differencing kind = consistent_differencing(traj.scheme);
  const auto         dphi = time_derivative(traj.times, traj.min_u, kind);
  const std::size_t  last = kind == Differencing::forward ? traj.size() - 1 : traj.size();

  MinTrackerReport r;
  r.tolerance    = tolerance;
  r.min_residual = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < last; ++i)
    {
      const double f = reaction(traj.min_u[i]);
      r.min_residual = std::min(r.min_residual, (dphi[i] - f) / std::max(1.0, std::abs(f)));
    }

  // Time-reversed series psi(s) = phi(t_end - s) obeys dpsi/ds <= -f(psi).
  std::vector<double> s(traj.size()), psi(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i)
    {
      s[i]   = traj.times.back() - traj.times[traj.size() - 1 - i];
      psi[i] = traj.min_u[traj.size() - 1 - i];
    }
  std::vector<double> dpsi(traj.size(), 0.0);
  if (kind == Differencing::forward)
    {
      // Forward differences in t are backward differences in s.
      for (std::size_t i = 1; i < s.size(); ++i)
        dpsi[i] = (psi[i] - psi[i - 1]) / (s[i] - s[i - 1]);
    }
  else
    dpsi = time_derivative(s, psi, Differencing::centered);
  r.backward_max = -std::numeric_limits<double>::infinity();
  const std::size_t first = kind == Differencing::forward ? 1 : 0;
  for (std::size_t i = first; i < s.size(); ++i)
    {
      const double f = reaction(psi[i]);
      r.backward_max = std::max(r.backward_max, (dpsi[i] + f) / std::max(1.0, std::abs(f)));
    }
  r.pass = r.min_residual >= -tolerance && r.backward_max <= tolerance;
  return r;
}

double linear_flow_tolerance(const ScalarField & u0, const DiscreteManifold & M, const FlowConfig & config)
{
  FlowConfig linear     = config;
  linear.dt             = Stepper(M, config).base_dt(u0);
  linear.reaction       = ReactionTerm{};
  linear.t_end          = std::min(config.t_end, 200.0 * *linear.dt);
  linear.blowup_threshold = std::max(config.blowup_threshold, 2.0 * u0.values.cwiseAbs().maxCoeff() + 1.0);
  const Trajectory traj = evolve(u0, M, linear);
  const auto       dm   = time_derivative(traj.times, traj.mean_u, Differencing::forward);
  double           defect = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i)
    defect = std::max(defect, std::abs(dm[i]) / std::max(1.0, std::abs(traj.mean_u[i])));
  // a difference quotient of the mean cannot resolve less than eps / dt
  return 10.0 * std::max(defect, std::numeric_limits<double>::epsilon() / *linear.dt);
}

double scaling_symmetry_check(double p, double k)
{
  if (!(p > 1.0))
    throw InvalidArgument("scaling check needs p > 1");
  if (!(k > 0.0))
    throw InvalidArgument("scaling factor k must be positive");
  constexpr double T     = 1.0;
  const double     q     = 1.0 / (p - 1.0);
  const double     amp   = std::pow(k, 2.0 * q);
  double           worst = 0.0;
  for (int j = 0; j < 100; ++j)
    {
      const double t = 0.99 * T / (k * k) * j / 100.0;
      const double s = (p - 1.0) * (T - k * k * t);
      // u_k = k^{2/(p-1)} s^{-1/(p-1)};  du_k/dt = k^{2/(p-1)} k^2 s^{-p/(p-1)} by the chain rule.
      const double uk   = amp * std::pow(s, -q);
      const double duk  = amp * k * k * std::pow(s, -p * q);
      const double rhs  = std::pow(uk, p);
      worst = std::max(worst, std::abs(duk - rhs) / std::abs(rhs));
    }
  return worst;
}

} // namespace liyau::heatflow
