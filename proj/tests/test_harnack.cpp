#include <doctest.h>

#include <liyau/harnack.hpp>

#include <array>
#include <cmath>
#include <numbers>

using namespace liyau;
using namespace liyau::harnack;
using geometry::flat_torus;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// u = 2 + e^{-t} sin x solves the heat equation on the circle.
ScalarField decaying(const DiscreteManifold & M, double t)
{
  return M.sample([&](const auto & x) { return 2.0 + std::exp(-t) * std::sin(x[0]); });
}

ScalarField decaying_rate(const DiscreteManifold & M, double t)
{
  return M.sample([&](const auto & x) { return -std::exp(-t) * std::sin(x[0]); });
}

// three analytic frames of the decaying solution around t
std::array<MonitorFrame, 3> decaying_frames(const DiscreteManifold & M, const HarnackParams & hp, double t, double dt)
{
  return {make_frame(t - dt, decaying(M, t - dt), decaying_rate(M, t - dt), M, hp, true),
          make_frame(t, decaying(M, t), decaying_rate(M, t), M, hp, true),
          make_frame(t + dt, decaying(M, t + dt), decaying_rate(M, t + dt), M, hp, true)};
}

// spatially constant blow-up solution u' = c u^p with u(0) = 1
double ode_solution(double p, double c, double t)
{
  return std::pow(1.0 - (p - 1.0) * c * t, -1.0 / (p - 1.0));
}

std::array<MonitorFrame, 3> constant_frames(const DiscreteManifold & M, const HarnackParams & hp, double c, double t,
                                            double dt)
{
  std::array<MonitorFrame, 3> out;
  for (int k = 0; k < 3; ++k)
    {
      const double s = t + (k - 1) * dt;
      const double u = ode_solution(hp.p, c, s);
      out[k]         = make_frame(s, M.constant(u), M.constant(c * std::pow(u, hp.p)), M, hp, false);
    }
  return out;
}

} // namespace

TEST_CASE("Gaussian kernel frames")
{
  const auto f = gaussian_kernel_frames(2, 2.0, {1.0}, {0.0, 2.0});
  REQUIRE(f.size() == 1);
  CHECK(f[0].rho[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(f[0].rho[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f[0].w[1] == doctest::Approx(1.0));
  CHECK(f[0].vt[1] == doctest::Approx(0.0));

  // gamma = 1: rho does not depend on the radius
  for (const auto & k : gaussian_kernel_frames(3, 1.0, {0.5, 2.0}, {0.0, 0.7, 3.0}))
    for (double r : k.rho)
      CHECK(r == doctest::Approx(3.0 / (2.0 * k.t)).epsilon(1e-14));

  // exact supremum at r = 0 and decay in time
  std::vector<double> times = {0.1, 1.0, 10.0, 1e6};
  for (const auto & k : gaussian_kernel_frames(2, 2.5, times, {0.0, 0.5, 1.0, 4.0}))
    CHECK(std::abs(k.sup_rho() - 2.5 * 2.0 / (2.0 * k.t)) <= 1e-12);
  CHECK(gaussian_kernel_frames(2, 2.0, {1e9}, {0.0})[0].sup_rho() < 1e-8);
  CHECK_THROWS_AS(gaussian_kernel_frames(2, 2.0, {0.0}, {0.0}), InvalidArgument);
}

TEST_CASE("discrete rho on a sampled heat kernel")
{
  // one-dimensional kernel centred on a long circle, wrap-around negligible
  const double L = 40.0, t = 1.0, gamma = 2.0;
  const auto   M  = flat_torus(1, 1600, L);
  const auto   hp = linear_params(1, gamma);
  auto kernel = [&](double s) {
    return M.sample([&](const auto & x) {
      const double r = x[0] - L / 2;
      return std::exp(-r * r / (4 * s)) / std::sqrt(4 * std::numbers::pi * s);
    });
  };
  const double dt = 1e-4;
  const auto   f  = rho_field(kernel(t - dt), kernel(t), kernel(t + dt), dt, M, hp, true, t);
  const Index  centre = 800;
  const Index  off    = 800 + 80; // |x| = 2
  CHECK(f.rho[centre] == doctest::Approx(gamma / (2 * t)).epsilon(1e-3));
  CHECK(std::abs(f.rho[off] - ((1 - gamma) * 4.0 / 4.0 + gamma / 2.0)) <= 2e-3);
}

TEST_CASE("constant solutions of the heat equation")
{
  const auto M  = flat_torus(2, 16, two_pi);
  const auto hp = linear_params(2, 2.0);
  const auto c  = M.constant(3.0);
  const auto f  = rho_field(c, c, c, 1e-3, M, hp, true, 1.0);
  CHECK(f.rho.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.clamped.empty());

  const std::array<MonitorFrame, 3> frames = {rho_field(c, c, c, 1e-3, M, hp, true, 0.999),
                                              rho_field(c, c, c, 1e-3, M, hp, true, 1.0),
                                              rho_field(c, c, c, 1e-3, M, hp, true, 1.001)};
  for (Identity id : {Identity::eq_3_2, Identity::eq_3_7, Identity::eq_6_2})
    CHECK(identity_residual(id, frames, M, hp) <= 1e-10);
  CHECK(lemma_4_1_check(f, hp).vacuous);
}

TEST_CASE("logarithmic identity on the decaying solution")
{
  const auto   M  = flat_torus(1, 128, two_pi);
  const auto   hp = linear_params(1, 2.0);
  const double dt = 1e-3;
  std::array<MonitorFrame, 3> frames;
  for (int k = 0; k < 3; ++k)
    {
      const double t = 0.5 + (k - 1) * dt;
      frames[k]      = rho_field(decaying(M, t - dt), decaying(M, t), decaying(M, t + dt), dt, M, hp, true, t);
    }
  CHECK(identity_residual(Identity::eq_3_2, frames, M, hp) <= 5e-3);
}

TEST_CASE("identities converge at second order in space")
{
  auto hp = linear_params(1, 2.0);
  hp.p    = 3.0;
  for (Identity id : {Identity::eq_3_2, Identity::eq_3_7, Identity::eq_6_2})
    {
      CAPTURE(to_string(id));
      double r[2];
      int    k = 0;
      for (int n : {32, 64})
        {
          const auto M      = flat_torus(1, n, two_pi);
          const auto frames = decaying_frames(M, hp, 0.5, 1e-3);
          r[k++]            = identity_residual(id, frames, M, hp);
        }
      CHECK(std::log2(r[0] / r[1]) >= 1.8);
    }

  // the same on a two-dimensional torus with a mixed profile
  double r[2];
  int    k = 0;
  for (int n : {32, 64})
    {
      const auto M = flat_torus(2, n, two_pi);
      auto       u = [&](double t) {
        return M.sample([&](const auto & x) { return 3.0 + std::exp(-2 * t) * std::sin(x[0] + x[1]); });
      };
      auto ut = [&](double t) {
        return M.sample([&](const auto & x) { return -2.0 * std::exp(-2 * t) * std::sin(x[0] + x[1]); });
      };
      const auto                        h2 = linear_params(2, 1.5);
      const std::array<MonitorFrame, 3> frames = {make_frame(0.499, u(0.499), ut(0.499), M, h2, true),
                                                  make_frame(0.5, u(0.5), ut(0.5), M, h2, true),
                                                  make_frame(0.501, u(0.501), ut(0.501), M, h2, true)};
      r[k++] = identity_residual(Identity::eq_6_2, frames, M, h2);
    }
  CHECK(std::log2(r[0] / r[1]) >= 1.8);
}

TEST_CASE("identities on the spatially constant blow-up family")
{
  const auto M  = flat_torus(1, 32, two_pi);
  const auto hp = feasibility::find_params(1, 2.0);
  // u = 1/(1-t) with the analytic time derivative
  const auto frames = constant_frames(M, hp, 1.0, 0.3, 1e-4);
  CHECK(identity_residual(Identity::eq_3_2, frames, M, hp) <= 1e-6);
  CHECK(identity_residual(Identity::eq_3_7, frames, M, hp) <= 1e-6);
  CHECK(identity_residual(Identity::eq_3_8, frames, M, hp) <= 1e-5);

  CHECK_THROWS_AS(identity_residual(Identity::eq_6_2, frames, M, hp), InvalidArgument);
  const auto S  = geometry::icosphere(2);
  const auto sf = constant_frames(S, hp, 1.0, 0.3, 1e-4);
  CHECK_THROWS_AS(identity_residual(Identity::eq_3_8, sf, S, hp), UnsupportedManifold);
  CHECK(identity_residual(Identity::eq_3_7, sf, S, hp) <= 1e-6);
}

TEST_CASE("differential inequality on a spatially constant flow")
{
  const auto M = flat_torus(1, 16, two_pi);
  for (double p : {1.5, 2.0, 2.5})
    {
      CAPTURE(p);
      const auto   hp     = feasibility::find_params(1, p);
      const double t      = 0.2;
      const auto   frames = constant_frames(M, hp, 1.0, t, 1e-5);
      const auto   r      = inequality_3_11_residual(frames, M, hp, 0.0);
      const double U      = std::pow(ode_solution(p, 1.0, t), p - 1.0);
      const double g = hp.gamma, b = hp.beta;
      const double closed = (g - b) * U * U * ((p - 1.0) - hp.alpha * (g - b) / (g * g));
      CHECK(closed >= 0.0);
      CHECK(r.min_slack == doctest::Approx(closed).epsilon(1e-5));
      CHECK(r.checked == 16);
    }
}

TEST_CASE("differential inequality preconditions")
{
  const auto M  = flat_torus(1, 16, two_pi);
  const auto hp = feasibility::find_params(1, 2.0);
  auto       lin = linear_params(1, 2.0);
  lin.p          = 2.0;
  CHECK_THROWS_AS(inequality_3_11_residual(decaying_frames(M, lin, 0.5, 1e-3), M, hp, 0.0), InvalidArgument);

  auto bad  = hp;
  bad.gamma = 1.0 + 1e-6;
  bad.beta  = 1e-3;
  CHECK_THROWS_AS(inequality_3_11_residual(constant_frames(M, bad, 1.0, 0.2, 1e-3), M, bad, 0.0),
                  feasibility::Infeasible);

  const auto S = geometry::icosphere(2);
  CHECK_THROWS_AS(inequality_3_11_residual(constant_frames(S, hp, 1.0, 0.2, 1e-3), S, hp, 0.0), UnsupportedManifold);

  const auto frames = constant_frames(M, hp, 1.0, 0.2, 1e-3);
  const std::array<MonitorFrame, 3> shuffled = {frames[1], frames[0], frames[2]};
  CHECK_THROWS_AS(inequality_3_11_residual(shuffled, M, hp, 0.0), InvalidArgument);
  CHECK_THROWS_AS(inequality_3_11_residual(std::span(frames).first(2), M, hp, 0.0), InvalidArgument);
}

TEST_CASE("Laplacian lower bound at positive rho")
{
  const auto   M  = flat_torus(1, 8, two_pi);
  const auto   hp = feasibility::find_params(1, 2.0);
  const double u = 1.7, rho = 0.4;
  const double U = std::pow(u, hp.p - 1.0), g = hp.gamma, b = hp.beta;

  MonitorFrame f;
  f.u         = M.constant(u);
  f.w         = M.constant(0.0);
  f.rho       = M.constant(rho);
  f.lap_log_u = M.constant(-rho / g - (g - b) / g * U);
  const auto r = lemma_4_1_check(f, hp);
  CHECK_FALSE(r.vacuous);
  CHECK(r.checked == 8);
  CHECK(r.min_slack == doctest::Approx(2.0 * rho * (g - b) * U / (g * g)).epsilon(1e-12));

  f.rho = M.constant(-0.1);
  CHECK(lemma_4_1_check(f, hp).vacuous);
}

TEST_CASE("ODE comparison")
{
  const auto   M  = flat_torus(1, 8, two_pi);
  const auto   hp = feasibility::find_params(1, 2.0);
  const double c  = hp.beta / hp.gamma;
  // equality case: u_t = (beta/gamma) u^p gives rho = 0
  const auto eq = constant_frames(M, hp, c, 0.5, 1e-3);
  const auto r  = ode_comparison_check(eq, hp, 1.0, 0.0, 1e-12);
  CHECK(r.checked == 24);
  CHECK(std::abs(r.min_slack) <= 1e-12);
  CHECK(r.pass);

  // w = 0: slack = u (C0 K - rho) / gamma
  const double u = 2.0, rho = -0.5, C0 = 1.0, K = 1.0;
  const double U  = std::pow(u, hp.p - 1.0);
  const double ut = u * (hp.beta * U - rho) / hp.gamma;
  const auto   f  = make_frame(1.0, M.constant(u), M.constant(ut), M, hp, false);
  CHECK(f.rho[0] == doctest::Approx(rho).epsilon(1e-12));
  const double rhs = c * std::pow(u, hp.p) - C0 * K / hp.gamma * u;
  const auto   s   = ode_comparison_check(std::span(&f, 1), hp, C0, K, 0.0);
  CHECK(s.min_slack == doctest::Approx(u * (C0 * K - rho) / hp.gamma / std::max(1.0, std::abs(rhs))));
}

TEST_CASE("sup bound")
{
  HarnackParams hp;
  hp.beta = 0.5;
  hp.p    = 3.0;
  CHECK(sup_bound(hp, 1.0, 2.0) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
  hp.p = 1e9;
  CHECK(sup_bound(hp, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-8));
  hp.p = 2.7;
  CHECK(sup_bound(hp, 0.25, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(sup_bound(hp, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("fitted asymptote")
{
  std::vector<double> t, s;
  for (const auto & k : gaussian_kernel_frames(2, 2.0, [] {
         std::vector<double> ts;
         for (int i = 0; i <= 40; ++i)
           ts.push_back(1.0 + 0.25 * i);
         return ts;
       }(),
                                              {0.0, 1.0}))
    {
      t.push_back(k.t);
      s.push_back(k.sup_rho());
    }
  const auto r = harnack_trend_check(t, s, 1.0, 0.0);
  CHECK(r.status == TrendStatus::pass);
  CHECK(std::abs(r.asymptote) <= 1e-6);
  CHECK(r.amplitude == doctest::Approx(2.0).epsilon(1e-6));

  // a + b / (t + s) recovered from exact samples
  std::vector<double> y;
  for (double x : t)
    y.push_back(0.3 + 1.5 / (x - 1.0 + 0.7));
  const auto fit = harnack_trend_check(t, y, 1.0, 0.1);
  CHECK(fit.asymptote == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(fit.shift == doctest::Approx(0.7).epsilon(1e-4));
  CHECK(fit.status == TrendStatus::fail);
  CHECK(harnack_trend_check(t, y, 1.0, 0.5).status == TrendStatus::pass);

  const auto blow = harnack_trend_check(t, y, 1.0, 0.0, 0.05, true);
  CHECK(blow.status == TrendStatus::blowup_regime);
  CHECK(to_string(blow.status) == "blow-up regime, Liouville mechanism confirmed");

  CHECK_THROWS_AS(harnack_trend_check({0.0, 0.1, 0.2, 0.3}, {1, 1, 1, 1}, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("linear flow trend on curved and flat tori")
{
  heatflow::FlowConfig c;
  c.t_end = 4.0;
  for (double amplitude : {0.0, 0.1})
    {
      CAPTURE(amplitude);
      const auto M   = geometry::conformal_torus_sine(32, two_pi, amplitude);
      const auto u0  = M.sample([](const auto & x) { return 2.0 + std::sin(x[0]); });
      const auto mon = monitor_flow(u0, M, c, linear_params(2, 2.0), true, 20);
      const auto r   = harnack_trend_check(mon.series, 1.0, M.K());
      CHECK(r.status == TrendStatus::pass);
      CHECK(r.asymptote <= 1.0 * M.K() + 0.05);
    }
}

TEST_CASE("argmax of rho is invariant under scaling in the linear case")
{
  const auto   M  = flat_torus(2, 32, two_pi);
  const auto   hp = linear_params(2, 2.0);
  const double dt = 1e-3;
  auto u = [&](double t, double scale) {
    return M.sample([&](const auto & x) {
      return scale * (2.0 + std::exp(-t) * std::sin(x[0]) + 0.5 * std::exp(-2 * t) * std::cos(x[0] + x[1]));
    });
  };
  const auto a = rho_field(u(0.5 - dt, 1.0), u(0.5, 1.0), u(0.5 + dt, 1.0), dt, M, hp, true, 0.5);
  const auto b = rho_field(u(0.5 - dt, 7.0), u(0.5, 7.0), u(0.5 + dt, 7.0), dt, M, hp, true, 0.5);
  Index      ia, ib;
  a.rho.values.maxCoeff(&ia);
  b.rho.values.maxCoeff(&ib);
  CHECK(ia == ib);
  CHECK((a.rho.values - b.rho.values).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("clamped nodes")
{
  const auto M  = flat_torus(1, 16, two_pi);
  const auto hp = linear_params(1, 2.0);
  Vector     v  = Vector::Constant(16, 1.0);
  v[3]          = 0.0;
  const auto f  = M.field(v);
  const auto fr = rho_field(f, f, f, 1e-3, M, hp, true, 0.0);
  REQUIRE(fr.clamped.size() == 1);
  CHECK(fr.clamped[0] == 3);
  CHECK_FALSE(fr.active()[3]);
  CHECK_THROWS_AS(rho_field(M.constant(0.0), M.constant(0.0), M.constant(0.0), 1e-3, M, hp, true, 0.0),
                  InvalidArgument);
  CHECK_THROWS_AS(linear_params(1, 0.5), InvalidArgument);
}

TEST_CASE("monitored power flow before blow-up")
{
  const auto           M = flat_torus(1, 64, two_pi);
  heatflow::FlowConfig c;
  c.reaction      = {heatflow::ReactionKind::power_positive, 2.0};
  c.t_end         = 0.4;
  const auto u0   = M.sample([](const auto & x) { return 1.0 + 0.3 * std::sin(x[0]); });
  const auto hp   = feasibility::find_params(1, 2.0);
  const auto mon  = monitor_flow(u0, M, c, hp, false, 5);
  const double tol = 10.0 * linear_flow_residual(u0, M, c, hp.gamma);
  REQUIRE(!mon.series.entries.empty());
  for (const auto & e : mon.series.entries)
    {
      CHECK(e.min_slack_3_11 >= -tol);
      CHECK(e.ode_slack >= -tol);
      if (!std::isnan(e.min_slack_4_1))
        CHECK(e.min_slack_4_1 >= -tol);
      CHECK(e.clamped_count == 0);
      CHECK(e.inf_rho <= e.sup_rho);
    }
  CHECK_FALSE(mon.series.blowup);
  CHECK_THROWS_AS(monitor_flow(u0, M, c, hp, true), InvalidArgument);
}

TEST_CASE("blow-up lower bound from the Harnack inequality")
{
  const auto           M = flat_torus(1, 32, two_pi);
  heatflow::FlowConfig c;
  c.reaction      = {heatflow::ReactionKind::power_positive, 2.0};
  c.t_end         = 2.0;
  const auto traj = heatflow::evolve(M.constant(1.0), M, c);
  const auto hp   = feasibility::find_params(1, 2.0);
  const auto r    = blowup_lower_bound_check(traj, 1.0, 0.0, hp, 1e-9);
  CHECK(r.pass);
  CHECK(r.min_margin >= 0.0);
  CHECK_THROWS_AS(blowup_lower_bound_check(traj, 0.0, 0.0, hp, 1e-9), InvalidArgument);
}

TEST_CASE("calibration constant")
{
  MonitorSeries a, b;
  a.K = 0.5;
  b.K = 0.25;
  for (int i = 0; i <= 10; ++i)
    {
      a.entries.push_back({.t = double(i), .sup_rho = 1.0 - 0.05 * i});
      b.entries.push_back({.t = double(i), .sup_rho = 0.2});
    }
  const std::array<MonitorSeries, 2> suite = {a, b};
  // tail of a: sup rho at t = 5 is 0.75, / 0.5 = 1.5; b gives 0.8
  CHECK(calibrate_constant(suite) == doctest::Approx(1.1 * 1.5));
  CHECK(calibrate_constant(suite, 1.0) == doctest::Approx(1.1 * 2.0));
  b.K = 0.0;
  const std::array<MonitorSeries, 1> bad = {b};
  CHECK_THROWS_AS(calibrate_constant(bad), InvalidArgument);
}
