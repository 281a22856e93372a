#pragma once

#include <liyau/feasibility.hpp>
#include <liyau/geometry.hpp>
#include <liyau/heatflow.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

/// The Li-Yau quantity rho = |grad log u|^2 - gamma (log u)_t + beta u^{p-1}
/// (beta term absent for the linear heat equation) and the differential
/// identities and inequalities it obeys, evaluated on discrete snapshots.
namespace liyau::harnack {

using feasibility::HarnackParams;
using geometry::DiscreteManifold;
using geometry::Index;
using geometry::ScalarField;
using geometry::Vector;

struct MonitorFrame
{
  double             t = 0.0;
  bool               linear = false;
  ScalarField        u;
  ScalarField        v;         ///< log u (clamped at the positivity floor)
  ScalarField        rho;
  ScalarField        w;         ///< |grad v|^2
  ScalarField        vt;        ///< (log u)_t
  ScalarField        lap_log_u; ///< Lap v
  std::vector<Index> clamped;   ///< excluded from every reduction

  /// mask[i] == true when node i takes part in reductions.
  std::vector<bool> active() const;
};

/// Parameters for the linear quantity |grad u / u|^2 - gamma (log u)_t.
HarnackParams linear_params(int N, double gamma);

/// Frame from a field and its time derivative (analytic or differenced).
MonitorFrame make_frame(double t, const ScalarField & u, const ScalarField & ut, const DiscreteManifold & M,
                        const HarnackParams & params, bool linear, double floor = 1e-12);

/// Frame at the middle of three consecutive snapshots; (log u)_t by centered differences.
MonitorFrame rho_field(const ScalarField & u_prev, const ScalarField & u, const ScalarField & u_next, double dt,
                       const DiscreteManifold & M, const HarnackParams & params, bool linear, double t = 0.0,
                       double floor = 1e-12);

/// Nonuniform variant: snapshots at t - dt_back, t, t + dt_fwd.
MonitorFrame rho_field(const ScalarField & u_prev, const ScalarField & u, const ScalarField & u_next, double dt_back,
                       double dt_fwd, const DiscreteManifold & M, const HarnackParams & params, bool linear, double t,
                       double floor = 1e-12);

enum class Identity
{
  eq_3_2, ///< v_t - Lap v = u^{p-1} + |grad v|^2
  eq_3_7, ///< (d_t - Lap) u^{p-1} = (p-1) u^{2p-2} - (p-1)(p-2) u^{p-1} |grad v|^2
  eq_3_8, ///< full evolution of rho for the nonlinear equation
  eq_6_2  ///< rho_t - Lap rho = -2|Hess v|^2 - 2 Ric(grad v, grad v) + 2 <grad v, grad rho>
};

std::string_view to_string(Identity id);

/// Max absolute residual over active nodes; uses frames[1] and, for the rho
/// evolution identities, rho from frames[0] and frames[2].
double identity_residual(Identity kind, std::span<const MonitorFrame> frames, const DiscreteManifold & M,
                         const HarnackParams & params);

struct SlackReport
{
  double      min_slack = 0.0;
  std::size_t checked   = 0; ///< active nodes that entered the minimum
  bool        vacuous   = false;
};

/// slack = RHS - (rho_t - Lap rho) of
///   rho_t - Lap rho <= -a1 |Lap log u|^2 + 2 <grad log u, grad rho> - a2 rho^2 - a3 |grad u/u|^4 + 2K |grad u/u|^2.
SlackReport inequality_3_11_residual(std::span<const MonitorFrame> frames, const DiscreteManifold & M,
                                     const HarnackParams & params, double K);

/// At nodes where rho > 0: |Lap log u|^2 - [rho^2/gamma^2 + ((gamma-beta)/gamma)^2 u^{2p-2}
/// + ((gamma-1)/gamma)^2 w^2]; the u-term is absent for linear frames.
SlackReport lemma_4_1_check(const MonitorFrame & frame, const HarnackParams & params);

struct OdeComparisonReport
{
  double      min_slack  = 0.0; ///< min of [u_t - (beta/gamma) u^p + (C0 K / gamma) u] / max(1, |rhs|)
  std::size_t checked    = 0;
  std::size_t violations = 0; ///< slack below -tolerance
  double      tolerance  = 0.0;
  bool        pass       = false;
};

/// u_t >= (beta/gamma) u^p - (C0 K/gamma) u at every active node with rho <= 0.
OdeComparisonReport ode_comparison_check(std::span<const MonitorFrame> frames, const HarnackParams & params, double C0,
                                         double K, double tolerance);

/// (2 C0 K / beta)^{1/(p-1)}; requires K > 0.
double sup_bound(const HarnackParams & params, double C0, double K);

struct KernelFrame
{
  double              t = 0.0;
  std::vector<double> r, w, vt, rho;
  double              sup_rho() const;
};

/// Heat kernel (4 pi t)^{-N/2} e^{-r^2/4t}: w = r^2/(4t^2), vt = -N/(2t) + r^2/(4t^2),
/// rho_lin = (1 - gamma) r^2/(4t^2) + gamma N/(2t).
std::vector<KernelFrame> gaussian_kernel_frames(int N, double gamma, const std::vector<double> & times,
                                                const std::vector<double> & radii);

struct MonitorEntry
{
  double      t              = 0.0;
  double      sup_rho        = 0.0;
  double      inf_rho        = 0.0;
  Index       argmax_rho     = 0;
  double      min_slack_3_11 = std::numeric_limits<double>::quiet_NaN();
  double      residual_3_2   = 0.0;
  double      residual_3_7   = std::numeric_limits<double>::quiet_NaN();
  double      residual_6_2   = std::numeric_limits<double>::quiet_NaN();
  double      min_slack_4_1  = std::numeric_limits<double>::quiet_NaN();
  double      ode_slack      = std::numeric_limits<double>::quiet_NaN();
  std::size_t clamped_count  = 0;
};

struct MonitorSeries
{
  HarnackParams             params;
  bool                      linear = false;
  double                    K      = 0.0;
  std::vector<MonitorEntry> entries;
  bool                      blowup = false;
};

struct FlowMonitor
{
  heatflow::Trajectory trajectory;
  MonitorSeries        series;
};

/// Evolves u0 and evaluates every monitor on a sliding window of five
/// consecutive states each `every` steps.
FlowMonitor monitor_flow(const ScalarField & u0, const DiscreteManifold & M, const heatflow::FlowConfig & config,
                         const HarnackParams & params, bool linear, int every = 1, double C0 = 1.0);

/// max eq_6_2 residual of the f = 0 flow from u0 at the same discretization.
double linear_flow_residual(const ScalarField & u0, const DiscreteManifold & M, const heatflow::FlowConfig & config,
                            double gamma, int steps = 40);

enum class TrendStatus
{
  pass,
  fail,
  blowup_regime
};

std::string_view to_string(TrendStatus status);

struct TrendReport
{
  TrendStatus         status    = TrendStatus::fail;
  double              asymptote = 0.0; ///< a in a + b / (t - t0 + s)
  double              amplitude = 0.0; ///< b
  double              shift     = 0.0; ///< s
  double              bound     = 0.0; ///< C K + tolerance
  std::vector<double> t, sup_rho;      ///< raw trace
};

/// Fits sup rho(t) ~ a + b / (t - t0 + s) on the second half of the span and
/// compares the asymptote with C K.
TrendReport harnack_trend_check(const std::vector<double> & t, const std::vector<double> & sup_rho, double C,
                                double K, double tolerance = 0.05, bool blowup = false);
TrendReport harnack_trend_check(const MonitorSeries & series, double C, double K, double tolerance = 0.05);

struct LowerBoundReport
{
  double min_margin = 0.0; ///< min over t of max u(t) - bound(t), relative to max(1, bound)
  double t0         = 0.0;
  double u0         = 0.0;
  bool   pass       = false;
};

/// max u(t) >= (u(x0,t0)^{1-p} - (beta/gamma)(p-1)(t - t0))^{-1/(p-1)} for t >= t0
/// while the bracket stays positive.
LowerBoundReport blowup_lower_bound_check(const heatflow::Trajectory & traj, double u_x0_t0, double t0,
                                          const HarnackParams & params, double tolerance);

/// 1.1 x the largest sup rho / K over the trailing fraction of each series' time span.
double calibrate_constant(std::span<const MonitorSeries> suite, double tail_fraction = 0.5);

} // namespace liyau::harnack
