#include <liyau/harnack.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace liyau::harnack {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

/// Weights of the three-point derivative at the middle node for steps h1 (back), h2 (forward).
struct MidStencil
{
  double w0, w1, w2;
  MidStencil(double h1, double h2)
    : w0(-h2 / (h1 * (h1 + h2)))
    , w1((h2 - h1) / (h1 * h2))
    , w2(h1 / (h2 * (h1 + h2)))
  {}
};

Vector reaction_power(const Vector & u, double exponent)
{
  return u.array().pow(exponent).matrix();
}

Vector clamped_log(const Vector & u, double floor)
{
  return u.array().max(floor).log().matrix();
}

void finish_frame(MonitorFrame & f, const DiscreteManifold & M, const HarnackParams & params)
{
  f.w         = geometry::gradient_sq(M, f.v);
  f.lap_log_u = geometry::laplacian_apply(M, f.v);
  Vector rho  = f.w.values - params.gamma * f.vt.values;
  if (!f.linear)
    rho += params.beta * reaction_power(f.u.values, params.p - 1.0);
  f.rho = M.field(std::move(rho));
  if (static_cast<Index>(f.clamped.size()) == M.node_count())
    throw InvalidArgument("frame invalid: every node is clamped at the positivity floor");
}

std::vector<bool> union_mask(std::span<const MonitorFrame> frames)
{
  std::vector<bool> mask = frames.front().active();
  for (const auto & f : frames.subspan(1))
    for (Index i : f.clamped)
      mask[static_cast<std::size_t>(i)] = false;
  return mask;
}

void require_three(std::span<const MonitorFrame> frames)
{
  if (frames.size() != 3)
    throw InvalidArgument("three consecutive frames are required");
  if (!(frames[0].t < frames[1].t && frames[1].t < frames[2].t))
    throw InvalidArgument("frame times must be increasing");
}

/// rho_t at the middle frame.
Vector rho_time_derivative(std::span<const MonitorFrame> frames)
{
  const MidStencil s(frames[1].t - frames[0].t, frames[2].t - frames[1].t);
  return s.w0 * frames[0].rho.values + s.w1 * frames[1].rho.values + s.w2 * frames[2].rho.values;
}

double masked_max_abs(const Vector & r, const std::vector<bool> & mask)
{
  double m = 0.0;
  for (Index i = 0; i < r.size(); ++i)
    if (mask[static_cast<std::size_t>(i)])
      m = std::max(m, std::abs(r[i]));
  return m;
}

/// Right-hand side of the rho evolution: -2|Hess v|^2 - 2 Ric(grad v, grad v) + 2 <grad v, grad rho>
/// plus the reaction terms when the frame is nonlinear.
Vector rho_evolution_rhs(const MonitorFrame & f, const DiscreteManifold & M, const HarnackParams & params)
{
  const Vector hess = geometry::hessian_sq(M, f.v).values;
  const Vector cross = geometry::gradient_dot(M, f.v, f.rho).values;
  Vector       rhs = -2.0 * hess - 2.0 * M.ricci_pointwise().cwiseProduct(f.w.values) + 2.0 * cross;
  if (!f.linear)
    {
      const double p = params.p, beta = params.beta, gamma = params.gamma;
      const Vector U = reaction_power(f.u.values, p - 1.0);
      rhs.array() += U.array() * (2.0 * (1.0 - beta) * (p - 1.0) * f.w.values.array() -
                                  gamma * (p - 1.0) * f.vt.values.array() + beta * (p - 1.0) * U.array() -
                                  beta * (p - 1.0) * (p - 2.0) * f.w.values.array());
    }
  return rhs;
}

} // namespace

std::vector<bool> MonitorFrame::active() const
{
  std::vector<bool> mask(static_cast<std::size_t>(u.size()), true);
  for (Index i : clamped)
    mask[static_cast<std::size_t>(i)] = false;
  return mask;
}

HarnackParams linear_params(int N, double gamma)
{
  if (N < 1)
    throw InvalidArgument("dimension N must be at least 1");
  if (!(gamma >= 1.0))
    throw InvalidArgument("gamma must be at least 1 for the linear quantity");
  HarnackParams hp;
  hp.N     = N;
  hp.gamma = gamma;
  hp.beta  = 0.0;
  return hp;
}

MonitorFrame make_frame(double t, const ScalarField & u, const ScalarField & ut, const DiscreteManifold & M,
                        const HarnackParams & params, bool linear, double floor)
{
  M.check(u);
  M.check(ut);
  MonitorFrame f;
  f.t      = t;
  f.linear = linear;
  f.u      = u;
  f.v      = M.field(clamped_log(u.values, floor));
  Vector vt(u.size());
  for (Index i = 0; i < u.size(); ++i)
    {
      if (u[i] <= floor)
        {
          f.clamped.push_back(i);
          vt[i] = 0.0;
        }
      else
        vt[i] = ut[i] / u[i];
    }
  f.vt = M.field(std::move(vt));
  finish_frame(f, M, params);
  return f;
}

MonitorFrame rho_field(const ScalarField & u_prev, const ScalarField & u, const ScalarField & u_next, double dt,
                       const DiscreteManifold & M, const HarnackParams & params, bool linear, double t, double floor)
{
  return rho_field(u_prev, u, u_next, dt, dt, M, params, linear, t, floor);
}

MonitorFrame rho_field(const ScalarField & u_prev, const ScalarField & u, const ScalarField & u_next, double dt_back,
                       double dt_fwd, const DiscreteManifold & M, const HarnackParams & params, bool linear, double t,
                       double floor)
{
  M.check(u_prev);
  M.check(u);
  M.check(u_next);
  if (!(dt_back > 0.0) || !(dt_fwd > 0.0))
    throw InvalidArgument("time steps must be positive");

  MonitorFrame f;
  f.t      = t;
  f.linear = linear;
  f.u      = u;
  f.v      = M.field(clamped_log(u.values, floor));

  const MidStencil s(dt_back, dt_fwd);
  const Vector     lp = clamped_log(u_prev.values, floor);
  const Vector     ln = clamped_log(u_next.values, floor);
  Vector           vt = s.w0 * lp + s.w1 * f.v.values + s.w2 * ln;
  for (Index i = 0; i < u.size(); ++i)
    if (u_prev[i] <= floor || u[i] <= floor || u_next[i] <= floor)
      {
        f.clamped.push_back(i);
        vt[i] = 0.0;
      }
  f.vt = M.field(std::move(vt));
  finish_frame(f, M, params);
  return f;
}

std::string_view to_string(Identity id)
{
  switch (id)
    {
    case Identity::eq_3_2: return "eq_3_2";
    case Identity::eq_3_7: return "eq_3_7";
    case Identity::eq_3_8: return "eq_3_8";
    case Identity::eq_6_2: return "eq_6_2";
    }
  return "?";
}

double identity_residual(Identity kind, std::span<const MonitorFrame> frames, const DiscreteManifold & M,
                         const HarnackParams & params)
{
  require_three(frames);
  const MonitorFrame & f    = frames[1];
  const auto           mask = union_mask(frames);
  const double         p    = params.p;

  switch (kind)
    {
    case Identity::eq_3_2:
      {
        Vector r = f.vt.values - f.lap_log_u.values - f.w.values;
        if (!f.linear)
          r -= reaction_power(f.u.values, p - 1.0);
        return masked_max_abs(r, mask);
      }
    case Identity::eq_3_7:
      {
        const Vector U    = reaction_power(f.u.values, p - 1.0);
        const Vector Ut   = (p - 1.0) * U.cwiseProduct(f.vt.values);
        const Vector lapU = geometry::laplacian_apply(M, M.field(U)).values;
        Vector       rhs  = -(p - 1.0) * (p - 2.0) * U.cwiseProduct(f.w.values);
        if (!f.linear)
          rhs += (p - 1.0) * U.cwiseProduct(U);
        return masked_max_abs(Ut - lapU - rhs, mask);
      }
    case Identity::eq_3_8:
    case Identity::eq_6_2:
      {
        if (!M.structured())
          throw UnsupportedManifold(std::string(to_string(kind)) + " needs the Hessian (structured grids only)");
        if (kind == Identity::eq_6_2 && !f.linear)
          throw InvalidArgument("eq_6_2 applies to frames of the linear heat equation");
        if (kind == Identity::eq_3_8 && f.linear)
          throw InvalidArgument("eq_3_8 applies to frames of the power reaction");
        const Vector lhs = rho_time_derivative(frames) - geometry::laplacian_apply(M, f.rho).values;
        return masked_max_abs(lhs - rho_evolution_rhs(f, M, params), mask);
      }
    }
  return 0.0;
}

SlackReport inequality_3_11_residual(std::span<const MonitorFrame> frames, const DiscreteManifold & M,
                                     const HarnackParams & params, double K)
{
  require_three(frames);
  if (frames[1].linear)
    throw InvalidArgument("the inequality needs a power reaction flow");
  if (!M.structured())
    throw UnsupportedManifold("the inequality check runs on structured grids only");
  const auto check = feasibility::check_constraints(params.N, params.p, params.beta, params.gamma);
  if (!check.feasible)
    throw feasibility::Infeasible("parameters violate the constraint system", 0.0);
  if (K < 0.0)
    throw InvalidArgument("K must be nonnegative");

  const MonitorFrame & f    = frames[1];
  const auto           mask = union_mask(frames);
  const Vector &       X    = f.lap_log_u.values;
  const Vector &       w    = f.w.values;
  const Vector &       rho  = f.rho.values;
  const Vector lhs   = rho_time_derivative(frames) - geometry::laplacian_apply(M, f.rho).values;
  const Vector cross = geometry::gradient_dot(M, f.v, f.rho).values;

  SlackReport r;
  r.min_slack = inf;
  for (Index i = 0; i < X.size(); ++i)
    {
      if (!mask[static_cast<std::size_t>(i)])
        continue;
      const double rhs = -params.alpha1 * X[i] * X[i] + 2.0 * cross[i] - params.alpha2 * rho[i] * rho[i] -
                         params.alpha3 * w[i] * w[i] + 2.0 * K * w[i];
      r.min_slack = std::min(r.min_slack, rhs - lhs[i]);
      ++r.checked;
    }
  r.vacuous = r.checked == 0;
  if (r.vacuous)
    r.min_slack = 0.0;
  return r;
}

SlackReport lemma_4_1_check(const MonitorFrame & frame, const HarnackParams & params)
{
  const double a    = (params.gamma - params.beta) / params.gamma;
  const double b    = (params.gamma - 1.0) / params.gamma;
  const auto   mask = frame.active();

  SlackReport r;
  r.min_slack = inf;
  for (Index i = 0; i < frame.u.size(); ++i)
    {
      const double rho = frame.rho[i];
      if (!mask[static_cast<std::size_t>(i)] || !(rho > 0.0))
        continue;
      const double X = frame.lap_log_u[i];
      const double w = frame.w[i];
      double       bound = rho * rho / (params.gamma * params.gamma) + b * b * w * w;
      if (!frame.linear)
        {
          const double U = std::pow(frame.u[i], params.p - 1.0);
          bound += a * a * U * U;
        }
      r.min_slack = std::min(r.min_slack, X * X - bound);
      ++r.checked;
    }
  r.vacuous = r.checked == 0;
  if (r.vacuous)
    r.min_slack = 0.0;
  return r;
}

OdeComparisonReport ode_comparison_check(std::span<const MonitorFrame> frames, const HarnackParams & params,
                                         double C0, double K, double tolerance)
{
  OdeComparisonReport r;
  r.tolerance = tolerance;
  r.min_slack = inf;
  for (const auto & f : frames)
    {
      if (f.linear)
        throw InvalidArgument("the ODE comparison needs a power reaction flow");
      const auto mask = f.active();
      for (Index i = 0; i < f.u.size(); ++i)
        {
          if (!mask[static_cast<std::size_t>(i)] || f.rho[i] > 0.0)
            continue;
          const double u   = f.u[i];
          const double ut  = u * f.vt[i];
          const double rhs = params.beta / params.gamma * std::pow(u, params.p) - C0 * K / params.gamma * u;
          const double s   = (ut - rhs) / std::max(1.0, std::abs(rhs));
          r.min_slack      = std::min(r.min_slack, s);
          if (s < -tolerance)
            ++r.violations;
          ++r.checked;
        }
    }
  if (r.checked == 0)
    r.min_slack = 0.0;
  r.pass = r.violations == 0;
  return r;
}

double sup_bound(const HarnackParams & params, double C0, double K)
{
  if (!(K > 0.0))
    throw InvalidArgument("sup bound needs K > 0 (no nontrivial bound for nonnegative Ricci curvature)");
  if (!(params.beta > 0.0) || !(params.p > 1.0))
    throw InvalidArgument("sup bound needs beta > 0 and p > 1");
  return std::pow(2.0 * C0 * K / params.beta, 1.0 / (params.p - 1.0));
}

double KernelFrame::sup_rho() const
{
  return rho.empty() ? -inf : *std::max_element(rho.begin(), rho.end());
}

std::vector<KernelFrame> gaussian_kernel_frames(int N, double gamma, const std::vector<double> & times,
                                                const std::vector<double> & radii)
{
  if (N < 1)
    throw InvalidArgument("dimension N must be at least 1");
  std::vector<KernelFrame> out;
  out.reserve(times.size());
  for (double t : times)
    {
      if (!(t > 0.0))
        throw InvalidArgument("kernel times must be positive");
      KernelFrame f;
      f.t = t;
      for (double r : radii)
        {
          const double q = r * r / (4.0 * t * t);
          f.r.push_back(r);
          f.w.push_back(q);
          f.vt.push_back(-N / (2.0 * t) + q);
          f.rho.push_back((1.0 - gamma) * q + gamma * N / (2.0 * t));
        }
      out.push_back(std::move(f));
    }
  return out;
}

FlowMonitor monitor_flow(const ScalarField & u0, const DiscreteManifold & M, const heatflow::FlowConfig & config,
                         const HarnackParams & params, bool linear, int every, double C0)
{
  if (every < 1)
    throw InvalidArgument("monitor stride must be at least 1");
  if (linear != (config.reaction.kind == heatflow::ReactionKind::none))
    throw InvalidArgument("linear monitors need f = 0 and nonlinear monitors a power reaction");

  FlowMonitor out;
  out.series.params = params;
  out.series.linear = linear;
  out.series.K      = M.K();

  const bool structured = M.structured();
  const bool feasible   = !linear && params.beta > 0.0 && params.gamma > params.beta &&
                        feasibility::check_constraints(params.N, params.p, params.beta, params.gamma).feasible;

  std::deque<heatflow::FlowState> states;
  std::deque<MonitorFrame>        frames;
  std::size_t                     window = 0;

  auto evaluate = [&]() {
    const std::vector<MonitorFrame> span_frames(frames.begin(), frames.end());
    const MonitorFrame &            f    = span_frames[1];
    const auto                      mask = union_mask(span_frames);
    MonitorEntry                    e;
    e.t       = f.t;
    e.sup_rho = -inf;
    e.inf_rho = inf;
    for (Index i = 0; i < f.rho.size(); ++i)
      if (mask[static_cast<std::size_t>(i)])
        {
          if (f.rho[i] > e.sup_rho)
            {
              e.sup_rho    = f.rho[i];
              e.argmax_rho = i;
            }
          e.inf_rho = std::min(e.inf_rho, f.rho[i]);
        }
    e.clamped_count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), false));
    e.residual_3_2  = identity_residual(Identity::eq_3_2, span_frames, M, params);
    if (!linear)
      {
        e.residual_3_7 = identity_residual(Identity::eq_3_7, span_frames, M, params);
        if (structured && feasible)
          e.min_slack_3_11 = inequality_3_11_residual(span_frames, M, params, M.K()).min_slack;
        e.ode_slack = ode_comparison_check(std::span(span_frames).subspan(1, 1), params, C0, M.K(), 0.0).min_slack;
      }
    else if (structured)
      e.residual_6_2 = identity_residual(Identity::eq_6_2, span_frames, M, params);
    const auto lemma = lemma_4_1_check(f, params);
    if (!lemma.vacuous)
      e.min_slack_4_1 = lemma.min_slack;
    out.series.entries.push_back(e);
  };

  auto observer = [&](const heatflow::FlowState & s) {
    states.push_back(s);
    if (states.size() > 3)
      states.pop_front();
    if (states.size() < 3)
      return;
    frames.push_back(rho_field(states[0].u, states[1].u, states[2].u, states[1].t - states[0].t,
                               states[2].t - states[1].t, M, params, linear, states[1].t, config.positivity_floor));
    if (frames.size() > 3)
      frames.pop_front();
    if (frames.size() == 3 && window++ % static_cast<std::size_t>(every) == 0)
      evaluate();
  };

  out.trajectory    = heatflow::evolve(u0, M, config, observer);
  out.series.blowup = out.trajectory.blowup.has_value();
  return out;
}

double linear_flow_residual(const ScalarField & u0, const DiscreteManifold & M, const heatflow::FlowConfig & config,
                            double gamma, int steps)
{
  if (steps < 5)
    throw InvalidArgument("linear reference flow needs at least five steps");
  heatflow::FlowConfig lin = config;
  const double         dt  = config.dt ? *config.dt : heatflow::Stepper(M, config).base_dt(u0);
  lin.reaction             = heatflow::ReactionTerm{heatflow::ReactionKind::none, config.reaction.p};
  lin.dt                   = dt;
  lin.t_end                = steps * dt;
  lin.snapshot_stride      = std::max(1, steps);
  lin.blowup_threshold     = std::max(config.blowup_threshold, 2.0 * u0.values.maxCoeff());

  HarnackParams params = linear_params(M.dimension(), gamma);
  params.p             = config.reaction.p;
  const auto   mon     = monitor_flow(u0, M, lin, params, true);
  double       worst   = 0.0;
  for (const auto & e : mon.series.entries)
    worst = std::max(worst, M.structured() ? e.residual_6_2 : e.residual_3_2);
  return worst;
}

std::string_view to_string(TrendStatus status)
{
  switch (status)
    {
    case TrendStatus::pass: return "pass";
    case TrendStatus::fail: return "fail";
    case TrendStatus::blowup_regime: return "blow-up regime, Liouville mechanism confirmed";
    }
  return "?";
}

namespace {

struct HyperbolaFit
{
  double a = 0.0, b = 0.0, sse = inf;
};

HyperbolaFit fit_for_shift(const std::vector<double> & x, const std::vector<double> & y, double s)
{
  // Least squares for y ~ a + b z with z = 1 / (x + s).
  double n = 0, sz = 0, szz = 0, sy = 0, szy = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    {
      const double z = 1.0 / (x[i] + s);
      n += 1;
      sz += z;
      szz += z * z;
      sy += y[i];
      szy += z * y[i];
    }
  const double det = n * szz - sz * sz;
  HyperbolaFit f;
  if (!(std::abs(det) > 1e-300))
    {
      f.a = sy / n;
      f.b = 0.0;
    }
  else
    {
      f.b = (n * szy - sz * sy) / det;
      f.a = (sy - f.b * sz) / n;
    }
  f.sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    {
      const double r = y[i] - f.a - f.b / (x[i] + s);
      f.sse += r * r;
    }
  return f;
}

} // namespace

TrendReport harnack_trend_check(const std::vector<double> & t, const std::vector<double> & sup_rho, double C,
                                double K, double tolerance, bool blowup)
{
  if (t.size() != sup_rho.size() || t.size() < 4)
    throw InvalidArgument("trend check needs at least four samples");
  TrendReport r;
  r.t       = t;
  r.sup_rho = sup_rho;
  r.bound   = C * K + tolerance;
  if (blowup)
    {
      r.status = TrendStatus::blowup_regime;
      return r;
    }
  const double t0 = t.front(), t1 = t.back();
  if (!(t1 - t0 >= 1.0 - 1e-9))
    throw InvalidArgument("trend check needs a time span of at least 1");

  std::vector<double> x, y;
  const double        half = t0 + 0.5 * (t1 - t0);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= half)
      {
        x.push_back(t[i] - t0);
        y.push_back(sup_rho[i]);
      }
  if (x.size() < 3)
    throw InvalidArgument("trend check needs at least three samples in the second half");

  const double span = t1 - t0;
  const int    grid = 240;
  double       best_log = 0.0;
  HyperbolaFit best;
  for (int k = 0; k <= grid; ++k)
    {
      const double ls = std::log(1e-3 * span) + k * std::log(1e6) / grid;
      const auto   f  = fit_for_shift(x, y, std::exp(ls));
      if (f.sse < best.sse)
        {
          best     = f;
          best_log = ls;
        }
    }
  // Golden-section refinement of log s around the best grid point.
  const double step = std::log(1e6) / grid;
  double       lo = best_log - step, hi = best_log + step;
  const double g  = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it)
    {
      const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
      if (fit_for_shift(x, y, std::exp(m1)).sse < fit_for_shift(x, y, std::exp(m2)).sse)
        hi = m2;
      else
        lo = m1;
    }
  const double s_ref = std::exp(0.5 * (lo + hi));
  const auto   fine  = fit_for_shift(x, y, s_ref);
  if (fine.sse <= best.sse)
    {
      best     = fine;
      best_log = std::log(s_ref);
    }

  r.asymptote = best.a;
  r.amplitude = best.b;
  r.shift     = std::exp(best_log);
  r.status    = r.asymptote <= r.bound ? TrendStatus::pass : TrendStatus::fail;
  return r;
}

TrendReport harnack_trend_check(const MonitorSeries & series, double C, double K, double tolerance)
{
  std::vector<double> t, s;
  for (const auto & e : series.entries)
    {
      t.push_back(e.t);
      s.push_back(e.sup_rho);
    }
  if (series.blowup && t.size() < 4)
    {
      TrendReport r;
      r.status = TrendStatus::blowup_regime;
      r.t      = t;
      r.sup_rho = s;
      r.bound  = C * K + tolerance;
      return r;
    }
  return harnack_trend_check(t, s, C, K, tolerance, series.blowup);
}

LowerBoundReport blowup_lower_bound_check(const heatflow::Trajectory & traj, double u_x0_t0, double t0,
                                          const HarnackParams & params, double tolerance)
{
  if (!(u_x0_t0 > 0.0))
    throw InvalidArgument("the reference value must be positive");
  const double p = params.p;
  LowerBoundReport r;
  r.t0         = t0;
  r.u0         = u_x0_t0;
  r.min_margin = inf;
  for (std::size_t i = 0; i < traj.size(); ++i)
    {
      const double t = traj.times[i];
      if (t < t0)
        continue;
      const double bracket = std::pow(u_x0_t0, 1.0 - p) - params.beta / params.gamma * (p - 1.0) * (t - t0);
      if (!(bracket > 0.0))
        break;
      const double bound = std::pow(bracket, -1.0 / (p - 1.0));
      r.min_margin       = std::min(r.min_margin, (traj.max_u[i] - bound) / std::max(1.0, bound));
    }
  if (r.min_margin == inf)
    r.min_margin = 0.0;
  r.pass = r.min_margin >= -tolerance;
  return r;
}

double calibrate_constant(std::span<const MonitorSeries> suite, double tail_fraction)
{
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw InvalidArgument("tail fraction must lie in (0, 1]");
  double worst = 0.0;
  bool   any   = false;
  for (const auto & s : suite)
    {
      if (!(s.K > 0.0))
        throw InvalidArgument("calibration needs series with K > 0");
      if (s.entries.empty())
        continue;
      const double t0 = s.entries.front().t, t1 = s.entries.back().t;
      const double from = t1 - tail_fraction * (t1 - t0);
      for (const auto & e : s.entries)
        {
          if (e.t < from)
            continue;
          worst = std::max(worst, e.sup_rho / s.K);
          any   = true;
        }
    }
  if (!any)
    throw InvalidArgument("calibration suite is empty");
  return 1.1 * worst;
}

} // namespace liyau::harnack
