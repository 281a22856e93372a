#include <doctest.h>

#include <liyau/geometry.hpp>

#include <cmath>
#include <limits>
#include <numbers>

using namespace liyau;
using namespace liyau::geometry;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double max_abs_diff(const ScalarField & a, const Vector & b)
{
  return (a.values - b).cwiseAbs().maxCoeff();
}

Vector exact(const DiscreteManifold & M, auto && fn)
{
  return M.sample(fn).values;
}

} // namespace

TEST_CASE("flat torus measure")
{
  const auto M = flat_torus(1, 64, two_pi);
  CHECK(M.node_count() == 64);
  CHECK(M.total_volume() == doctest::Approx(two_pi).epsilon(1e-12));
  CHECK(std::abs(M.volume_weights().sum() - M.total_volume()) <= 1e-10);
  CHECK(M.K() == 0.0);

  const auto T3 = flat_torus(3, 8, 1.0);
  CHECK(T3.node_count() == 512);
  CHECK(T3.total_volume() == doctest::Approx(1.0));
}

TEST_CASE("invalid specs are rejected")
{
  CHECK_THROWS_AS(flat_torus(4, 16, 1.0), InvalidArgument);
  CHECK_THROWS_AS(flat_torus(1, 4, 1.0), InvalidArgument);
  CHECK_THROWS_AS(flat_torus(1, 16, -1.0), InvalidArgument);
  CHECK_THROWS_AS(icosphere(1), InvalidArgument);
  std::vector<double> phi(16 * 16, 0.0);
  phi[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(conformal_torus(16, 1.0, phi), InvalidArgument);
}

TEST_CASE("fields from another manifold are rejected")
{
  const auto A = flat_torus(1, 16, 1.0);
  const auto B = flat_torus(1, 16, 1.0);
  CHECK_THROWS_AS(laplacian_apply(A, B.constant(1.0)), ManifoldMismatch);
  CHECK_THROWS_AS(gradient_sq(B, A.constant(1.0)), ManifoldMismatch);
}

TEST_CASE("zero conformal factor reproduces the flat operator")
{
  const int  n = 64;
  const auto F = flat_torus(2, n, two_pi);
  const auto C = conformal_torus(n, two_pi, std::vector<double>(n * n, 0.0));
  const SparseMatrix diff = F.laplacian() - C.laplacian();
  double worst = 0.0;
  for (Index i = 0; i < diff.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(diff, i); it; ++it)
      worst = std::max(worst, std::abs(it.value()));
  CHECK(worst == 0.0);
  CHECK((F.volume_weights() - C.volume_weights()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("icosphere area approaches the sphere")
{
  const double area = 4.0 * std::numbers::pi;
  const auto   S3   = icosphere(3);
  const auto   S4   = icosphere(4);
  CHECK(std::abs(S4.total_volume() - area) / area <= 0.01);
  CHECK(std::abs(S4.total_volume() - area) < std::abs(S3.total_volume() - area));
  CHECK(std::abs(S4.volume_weights().sum() - S4.total_volume()) <= 1e-10);
  // vertices on the unit sphere
  CHECK((S4.coordinates().rowwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-14);
}

TEST_CASE("Laplacian of sin x converges at second order")
{
  double err[2];
  int    k = 0;
  for (int n : {64, 128})
    {
      const auto M = flat_torus(1, n, two_pi);
      const auto f = M.sample([](const auto & x) { return std::sin(x[0]); });
      err[k++] = max_abs_diff(laplacian_apply(M, f), exact(M, [](const auto & x) { return -std::sin(x[0]); }));
    }
  const double ratio = err[0] / err[1];
  CHECK(ratio >= 3.6);
  CHECK(ratio <= 4.4);
  CHECK(err[0] <= 2.0 * std::pow(two_pi / 64, 2) / 12.0);
}

TEST_CASE("constants are annihilated exactly")
{
  for (const auto & M : {flat_torus(1, 32, 1.0), flat_torus(2, 16, 3.0), conformal_torus_sine(16, two_pi, 0.2),
                         icosphere(2)})
    {
      const auto c = M.constant(3.7);
      CHECK(laplacian_apply(M, c).values.cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(gradient_sq(M, c).values.cwiseAbs().maxCoeff() == 0.0);
      if (M.structured())
        {
          CHECK(hessian_sq(M, c).values.cwiseAbs().maxCoeff() == 0.0);
          CHECK(bochner_residual(M, c) == 0.0);
        }
    }
}

TEST_CASE("conformal Laplacian and gradient")
{
  double lap_err[2], grad_err[2];
  int    k = 0;
  for (int n : {64, 128})
    {
      const auto M = conformal_torus_sine(n, two_pi, 0.1);
      const auto f = M.sample([](const auto & x) { return std::sin(x[0]); });
      lap_err[k]   = max_abs_diff(laplacian_apply(M, f), exact(M, [](const auto & x) {
                                  return -std::exp(-0.2 * std::sin(x[0])) * std::sin(x[0]);
                                }));
      grad_err[k]  = max_abs_diff(gradient_sq(M, f), exact(M, [](const auto & x) {
                                   return std::exp(-0.2 * std::sin(x[0])) * std::pow(std::cos(x[0]), 2);
                                 }));
      ++k;
    }
  CHECK(lap_err[0] <= 1e-3);
  CHECK(lap_err[0] / lap_err[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(grad_err[0] <= std::pow(two_pi / 64, 2));
  CHECK(grad_err[0] / grad_err[1] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("gradient squared of sin x on the circle")
{
  double err[2];
  int    k = 0;
  for (int n : {64, 128})
    {
      const auto M = flat_torus(1, n, two_pi);
      err[k++] = max_abs_diff(gradient_sq(M, M.sample([](const auto & x) { return std::sin(x[0]); })),
                              exact(M, [](const auto & x) { return std::pow(std::cos(x[0]), 2); }));
    }
  CHECK(err[0] <= std::pow(two_pi / 64, 2));
  CHECK(err[0] / err[1] >= 3.5);
  CHECK(err[0] / err[1] <= 4.5);
}

TEST_CASE("Hessian norm on the flat square torus")
{
  double e1[2], e2[2];
  int    k = 0;
  for (int n : {64, 128})
    {
      const auto M = flat_torus(2, n, two_pi);
      e1[k] = max_abs_diff(hessian_sq(M, M.sample([](const auto & x) { return std::sin(x[0]); })),
                           exact(M, [](const auto & x) { return std::pow(std::sin(x[0]), 2); }));
      e2[k] = max_abs_diff(hessian_sq(M, M.sample([](const auto & x) { return std::sin(x[0]) + std::cos(x[1]); })),
                           exact(M, [](const auto & x) {
                             return std::pow(std::sin(x[0]), 2) + std::pow(std::cos(x[1]), 2);
                           }));
      ++k;
    }
  CHECK(e1[0] <= std::pow(two_pi / 64, 2));
  CHECK(e2[0] <= std::pow(two_pi / 64, 2));
  CHECK(e1[0] / e1[1] >= 3.5);
  CHECK(e2[0] / e2[1] >= 3.5);
  CHECK(e2[0] / e2[1] <= 4.5);
  const auto S = icosphere(2);
  CHECK_THROWS_AS(hessian_sq(S, S.constant(1.0)), UnsupportedManifold);
}

TEST_CASE("Ricci lower bounds")
{
  const auto flat = ricci_lower_bound(flat_torus(2, 16, 1.0));
  CHECK(flat.lambda_min == 0.0);
  CHECK(flat.K == 0.0);

  const auto sphere = ricci_lower_bound(icosphere(3));
  CHECK(sphere.lambda_min == 1.0);
  CHECK(sphere.K == 0.0);

  // Gaussian curvature 0.1 e^{-0.2 sin x} sin x is smallest at sin x = -1.
  const double expected = -0.1 * std::exp(0.2);
  const auto   conf     = ricci_lower_bound(conformal_torus_sine(128, two_pi, 0.1));
  CHECK(conf.lambda_min == doctest::Approx(expected).epsilon(1e-3));
  CHECK(conf.K == doctest::Approx(-expected).epsilon(1e-3));
  CHECK(conf.K == doctest::Approx(0.12214).epsilon(1e-3));
}

TEST_CASE("Gauss-Bonnet on the conformal torus")
{
  double err[2];
  int    k = 0;
  for (int n : {32, 64})
    {
      const auto M = conformal_torus_sine(n, two_pi, 0.3);
      err[k++]     = std::abs(M.integrate(M.field(M.ricci_pointwise())));
    }
  CHECK(err[1] <= 1e-8);
  CHECK(err[1] <= err[0] + 1e-12);
}

TEST_CASE("Bochner residual")
{
  double r[2];
  int    k = 0;
  for (int n : {64, 128})
    {
      const auto M = flat_torus(2, n, two_pi);
      r[k++]       = bochner_residual(M, M.sample([](const auto & x) { return std::sin(x[0]); }));
    }
  CHECK(r[0] <= 0.01);
  CHECK(r[0] / r[1] >= 3.5);
  CHECK(r[0] / r[1] <= 4.5);

  // curved metric: the Ricci term carries the curvature of the conformal factor
  double c[2];
  k = 0;
  for (int n : {64, 128})
    {
      const auto M = conformal_torus_sine(n, two_pi, 0.1);
      c[k++]       = bochner_residual(M, M.sample([](const auto & x) { return std::sin(x[0]) + std::cos(x[1]); }));
    }
  CHECK(c[0] / c[1] >= 3.5);
  CHECK(c[0] / c[1] <= 4.5);
  const auto S = icosphere(2);
  CHECK_THROWS_AS(bochner_residual(S, S.constant(1.0)), UnsupportedManifold);
}

TEST_CASE("Laplacian comparison on the unit sphere")
{
  const auto g = [](double r) { return r * std::cos(r) / std::sin(r); };
  CHECK(std::abs(g(std::numbers::pi / 2)) <= 1e-15);
  CHECK(g(std::numbers::pi / 3) == doctest::Approx(std::numbers::pi / 3 / std::sqrt(3.0)));
  CHECK(g(1e-6) == doctest::Approx(1.0));

  const double v = laplace_comparison_check(4, 0.0);
  CHECK(v <= 0.0);
  // largest value sits next to r = 0.1, just below 1
  CHECK(v == doctest::Approx(0.1 / std::tan(0.1) - 1.0).epsilon(1e-3));
  CHECK(laplace_comparison_check(3, 0.5) < v);
  CHECK_THROWS_AS(laplace_comparison_check(3, -1.0), InvalidArgument);
}

TEST_CASE("operator contracts on every kind")
{
  for (const auto & M : {flat_torus(1, 128, two_pi), flat_torus(2, 32, two_pi), flat_torus(3, 12, 1.0),
                         conformal_torus_sine(32, two_pi, 0.2), icosphere(3)})
    {
      CAPTURE(to_string(M.kind()));
      const auto c = operator_contracts(M, 11);
      CHECK(c.constant_kernel <= 1e-12);
      CHECK(c.self_adjointness <= 1e-10);
      CHECK(c.max_rayleigh <= 1e-10);
      CHECK(c.green <= 1e-10);
    }
}

TEST_CASE("Dirichlet energy matches the quadratic form")
{
  const auto   M = conformal_torus_sine(32, two_pi, 0.2);
  const auto   f = M.sample([](const auto & x) { return std::sin(x[0]) * std::cos(2 * x[1]); });
  const double E = dirichlet_energy(M, f);
  CHECK(E > 0.0);
  CHECK(E == doctest::Approx(-0.5 * M.inner(laplacian_apply(M, f), f)).epsilon(1e-12));
}
