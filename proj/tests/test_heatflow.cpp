#include <doctest.h>

#include <liyau/heatflow.hpp>

#include <cmath>
#include <numbers>

using namespace liyau;
using namespace liyau::heatflow;
using geometry::flat_torus;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

FlowConfig power(double p, double t_end)
{
  FlowConfig c;
  c.reaction = {ReactionKind::power_positive, p};
  c.t_end    = t_end;
  return c;
}

// L-infinity error of the f = 0 flow from 2 + sin x against 2 + e^{-t} sin x at t = 1.
double linear_error(int n, double dt, Scheme scheme)
{
  const auto M = flat_torus(1, n, two_pi);
  FlowConfig c;
  c.scheme = scheme;
  Stepper   stepper(M, c);
  FlowState s{0.0, M.sample([](const auto & x) { return 2.0 + std::sin(x[0]); })};
  const int steps = static_cast<int>(std::lround(1.0 / dt));
  for (int i = 0; i < steps; ++i)
    s = stepper.step(s, dt);
  const auto exact = M.sample([&](const auto & x) { return 2.0 + std::exp(-s.t) * std::sin(x[0]); });
  return (s.u.values - exact.values).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("reaction terms")
{
  const ReactionTerm pos{ReactionKind::power_positive, 3.0};
  CHECK(pos(2.0) == doctest::Approx(8.0));
  CHECK(pos.derivative(2.0) == doctest::Approx(12.0));
  CHECK(pos.primitive(2.0) == doctest::Approx(4.0));
  const ReactionTerm odd{ReactionKind::power_odd, 2.0};
  CHECK(odd(-3.0) == doctest::Approx(-9.0));
  CHECK(odd.derivative(-3.0) == doctest::Approx(6.0));
  CHECK(ReactionTerm{}(5.0) == 0.0);
  CHECK_THROWS_AS((ReactionTerm{ReactionKind::power_positive, 1.0}.validate()), InvalidArgument);
  CHECK(reaction_kind_from_string("power_odd") == ReactionKind::power_odd);
  CHECK(scheme_from_string(to_string(Scheme::explicit_rk4)) == Scheme::explicit_rk4);
  CHECK_THROWS_AS(scheme_from_string("crank_nicolson"), InvalidArgument);
}

TEST_CASE("linear flow against the separable solution")
{
  CHECK(linear_error(128, 1e-3, Scheme::imex_euler) <= 1e-3);
}

TEST_CASE("implicit Euler is first order in time")
{
  const double e1 = linear_error(256, 4e-2, Scheme::imex_euler);
  const double e2 = linear_error(256, 2e-2, Scheme::imex_euler);
  const double e3 = linear_error(256, 1e-2, Scheme::imex_euler);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));
  CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("Runge-Kutta error plateaus at the spatial error")
{
  const int    n  = 64;
  const double h  = two_pi / n;
  const double e1 = linear_error(n, 0.2 * h * h, Scheme::explicit_rk4);
  const double e2 = linear_error(n, 0.1 * h * h, Scheme::explicit_rk4);
  // temporal error is negligible: halving dt leaves the spatial error unchanged
  CHECK(std::abs(e1 - e2) <= 1e-3 * e1);
  // spatial error of the stencil is e^{-1} h^2 / 12 at t = 1
  CHECK(e1 == doctest::Approx(std::exp(-1.0) * h * h / 12.0).epsilon(0.02));
}

TEST_CASE("constant states are equilibria of the heat flow")
{
  const auto M = flat_torus(2, 16, 1.0);
  for (Scheme scheme : {Scheme::imex_euler, Scheme::explicit_rk4})
    {
      FlowConfig c;
      c.scheme = scheme;
      c.dt     = 1e-4;
      Stepper   stepper(M, c);
      FlowState s{0.0, M.constant(2.5)};
      for (int i = 0; i < 50; ++i)
        s = stepper.step(s, 1e-4);
      CHECK((s.u.values.array() - 2.5).abs().maxCoeff() <= 1e-13);
    }
}

TEST_CASE("spatially constant data follows the ODE")
{
  const auto M = flat_torus(1, 32, two_pi);
  Stepper    stepper(M, power(2.0, 0.5));
  FlowState  s{0.0, M.constant(1.0)};
  for (int i = 0; i < 5000; ++i)
    s = stepper.step(s, 1e-4);
  CHECK(s.t == doctest::Approx(0.5));
  CHECK(std::abs(s.u.values.maxCoeff() - 2.0) <= 1e-2);
  CHECK(std::abs(s.u.values.minCoeff() - 2.0) <= 1e-2);
}

TEST_CASE("evolve stops at t_end or at blow-up")
{
  const auto M = flat_torus(1, 64, two_pi);
  FlowConfig lin;
  lin.t_end       = 0.5;
  const auto calm = evolve(M.sample([](const auto & x) { return 2.0 + std::sin(x[0]); }), M, lin);
  CHECK(calm.stop_reason == "t_end");
  CHECK_FALSE(calm.blowup);
  CHECK(calm.times.back() == doctest::Approx(0.5));
  for (std::size_t i = 1; i < calm.size(); ++i)
    CHECK(calm.times[i] > calm.times[i - 1]);
  CHECK(calm.max_u.size() == calm.size());
  CHECK(calm.energy.size() == calm.size());
  CHECK(calm.snapshots.back().t == calm.times.back());

  const auto hot = evolve(M.constant(1.0), M, power(2.0, 2.0));
  CHECK(hot.stop_reason == "blowup");
  REQUIRE(hot.blowup);
  CHECK(hot.blowup->detected);
  CHECK(hot.times.back() < 2.0);

  FlowConfig odd;
  odd.reaction    = {ReactionKind::power_odd, 3.0};
  odd.t_end       = 0.2;
  const auto zero = evolve(M.constant(0.0), M, odd);
  for (std::size_t i = 0; i < zero.size(); ++i)
    {
      CHECK(zero.max_u[i] == 0.0);
      CHECK(zero.min_u[i] == 0.0);
    }

  CHECK_THROWS_AS(evolve(M.constant(-1.0), M, power(2.0, 1.0)), InvalidArgument);
}

TEST_CASE("blow-up time estimates")
{
  const auto M = flat_torus(1, 64, two_pi);
  struct Case
  {
    double c, p, T;
  };
  for (auto [c, p, T] : {Case{1.0, 2.0, 1.0}, Case{1.0, 3.0, 0.5}, Case{2.0, 2.0, 0.5}})
    {
      CAPTURE(c);
      CAPTURE(p);
      const auto traj = evolve(M.constant(c), M, power(p, 2.0));
      REQUIRE(traj.blowup);
      CHECK(std::abs(traj.blowup->T_star_estimate - T) <= 0.02);
      CHECK(detect_blowup(traj, p) == traj.blowup->T_star_estimate);
    }

  FlowConfig lin;
  lin.t_end       = 0.1;
  const auto calm = evolve(M.constant(1.0), M, lin);
  CHECK_THROWS_AS(detect_blowup(calm, 2.0), Error);
}

TEST_CASE("Jensen comparison on the unit circle")
{
  const auto M  = flat_torus(1, 128, 1.0);
  const auto c  = power(2.0, 2.0);
  const auto u0 = M.sample([](const auto & x) { return 1.0 + 0.5 * std::sin(two_pi * x[0]); });
  const auto traj = evolve(u0, M, c);
  const double tol = linear_flow_tolerance(u0, M, c);
  CHECK(tol < 1e-8);
  const auto j = jensen_check(traj, M, c.reaction, tol);
  CHECK(j.T_bound == doctest::Approx(1.0).epsilon(1e-10));
  REQUIRE(j.T_star);
  CHECK(*j.T_star <= 1.0 + 0.02);
  CHECK(j.min_D_relative >= -tol);
  CHECK(j.pass);

  // equality case
  const auto flat = evolve(M.constant(1.0), M, power(2.0, 0.5));
  const auto eq   = jensen_check(flat, M, c.reaction, tol);
  for (double D : eq.D)
    CHECK(std::abs(D) <= 1e-9 * (1.0 + std::abs(D)) + 1e-9);

  CHECK(blowup_time_bound(c.reaction, 2.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(blowup_time_bound({ReactionKind::power_positive, 3.0}, 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::isinf(blowup_time_bound(ReactionTerm{}, 1.0)));
  CHECK_THROWS_AS(jensen_check(traj, M, {ReactionKind::power_odd, 2.0}, tol), InvalidArgument);
}

TEST_CASE("minimum tracking")
{
  const auto M  = flat_torus(1, 128, 1.0);
  const auto c  = power(2.0, 2.0);
  const auto u0 = M.sample([](const auto & x) { return 1.0 + 0.5 * std::sin(two_pi * x[0]); });
  const double tol = linear_flow_tolerance(u0, M, c);
  const auto   r   = min_tracker_check(evolve(u0, M, c), c.reaction, tol);
  CHECK(r.min_residual >= -tol);
  CHECK(r.pass);

  const auto eq = min_tracker_check(evolve(M.constant(1.0), M, power(3.0, 0.3)), c.reaction, tol);
  CHECK(std::abs(eq.min_residual) <= 1e-8);

  const auto M2 = flat_torus(1, 128, two_pi);
  FlowConfig lin;
  lin.t_end         = 1.0;
  const auto v0     = M2.sample([](const auto & x) { return 2.0 + std::sin(x[0]); });
  const auto heat   = min_tracker_check(evolve(v0, M2, lin), lin.reaction, linear_flow_tolerance(v0, M2, lin));
  CHECK(heat.pass);
}

TEST_CASE("mass conservation and maximum principle without reaction")
{
  std::vector<geometry::DiscreteManifold> ms;
  ms.push_back(flat_torus(1, 64, two_pi));
  ms.push_back(flat_torus(2, 32, two_pi));
  ms.push_back(flat_torus(3, 12, two_pi));
  ms.push_back(geometry::conformal_torus_sine(32, two_pi, 0.2));
  ms.push_back(geometry::icosphere(3));
  for (const auto & M : ms)
    {
      CAPTURE(geometry::to_string(M.kind()));
      FlowConfig c;
      c.t_end         = 0.3;
      const auto u0   = M.sample([](const auto & x) { return 2.0 + std::sin(3.0 * x[0]) + 0.5 * std::cos(x[1] + x[0]); });
      const auto traj = evolve(u0, M, c);
      for (std::size_t i = 1; i < traj.size(); ++i)
        {
          CHECK(std::abs(traj.mean_u[i] - traj.mean_u[0]) <= 1e-8 * std::abs(traj.mean_u[0]));
          const double dt = traj.times[i] - traj.times[i - 1];
          CHECK(traj.min_u[i] >= traj.min_u[i - 1] - 1e-8 * dt);
          CHECK(traj.max_u[i] <= traj.max_u[i - 1] + 1e-8 * dt);
        }
    }
}

TEST_CASE("positivity under the power reaction")
{
  const auto M    = flat_torus(2, 32, two_pi);
  const auto traj = evolve(M.sample([](const auto & x) { return 0.1 + 0.09 * std::sin(x[0]) * std::cos(x[1]); }), M,
                           power(2.0, 1.0));
  for (double m : traj.min_u)
    CHECK(m > 0.0);
}

TEST_CASE("automatic time step policy")
{
  const auto M = flat_torus(1, 64, two_pi);
  FlowConfig c = power(3.0, 1.0);
  CHECK(Stepper(M, c).base_dt(M.constant(1.0)) == doctest::Approx(1e-3));
  CHECK(Stepper(M, c).base_dt(M.constant(20.0)) == doctest::Approx(0.5 / 1200.0));
  c.scheme     = Scheme::explicit_rk4;
  const double h = two_pi / 64;
  CHECK(Stepper(M, c).base_dt(M.constant(1.0)) == doctest::Approx(0.2 * h * h));
  c.dt = 0.0;
  CHECK_THROWS_AS(Stepper(M, c), InvalidArgument);
}

TEST_CASE("time derivative of recorded series")
{
  const std::vector<double> t = {0.0, 0.1, 0.3, 0.6, 1.0};
  std::vector<double>       y;
  for (double s : t)
    y.push_back(3.0 * s * s - s);
  const auto d = time_derivative(t, y, Differencing::centered);
  // the three-point formula is exact on quadratics
  for (std::size_t i = 1; i + 1 < t.size(); ++i)
    CHECK(d[i] == doctest::Approx(6.0 * t[i] - 1.0).epsilon(1e-12));
  const auto f = time_derivative(t, y, Differencing::forward);
  CHECK(f[0] == doctest::Approx((y[1] - y[0]) / 0.1));
  CHECK_THROWS_AS(time_derivative(t, {1.0}, Differencing::forward), InvalidArgument);
}

TEST_CASE("scaling family")
{
  CHECK(scaling_symmetry_check(2.0, 2.0) <= 1e-12);
  CHECK(scaling_symmetry_check(2.0, 1.0) <= 1e-12);
  CHECK(scaling_symmetry_check(3.0, 0.5) <= 1e-12);
  // u_k(t) = 4 / (1 - 4t) for p = 2, k = 2
  const double t = 0.1, uk = 4.0 / (1.0 - 4.0 * t);
  CHECK(16.0 / std::pow(1.0 - 4.0 * t, 2) == doctest::Approx(uk * uk));
  CHECK_THROWS_AS(scaling_symmetry_check(2.0, 0.0), InvalidArgument);
}
