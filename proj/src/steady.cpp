#include <liyau/steady.hpp>

#include <liyau/elliptic.hpp>
#include <liyau/exponents.hpp>

#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace liyau::steady {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;
using geometry::Index;

Vector signed_power(const Vector & u, double q)
{
  return u.unaryExpr([q](double x) { return std::copysign(std::pow(std::abs(x), q), x); });
}

Vector abs_power(const Vector & u, double q)
{
  return u.array().abs().pow(q).matrix();
}

double weighted_sum(const Vector & W, const Vector & f)
{
  return W.dot(f);
}

void require_exponent(const DiscreteManifold & M, double p)
{
  if (!(p > 1.0))
    throw InvalidArgument("exponent p must exceed 1");
  const double ps = exponents::exponent_table(M.dimension()).p_sobolev;
  if (!(p < ps))
    throw InvalidArgument("exponent p must stay below the Sobolev exponent " + std::to_string(ps));
}

/// Kinetic form -S (positive semidefinite, column-major).
ColMatrix kinetic(const DiscreteManifold & M)
{
  return ColMatrix(-M.stiffness());
}

} // namespace

ConstraintState constraint_state(const ScalarField & u, const DiscreteManifold & M, double p)
{
  M.check(u);
  const Vector & W = M.volume_weights();
  ConstraintState s;
  s.u  = u;
  s.c1 = weighted_sum(W, abs_power(u.values, p + 1.0));
  s.c2 = weighted_sum(W, signed_power(u.values, p));
  s.E  = geometry::dirichlet_energy(M, u);
  return s;
}

Projection project_to_A_detail(const ScalarField & u, const DiscreteManifold & M, double p)
{
  M.check(u);
  if (!(p > 1.0))
    throw InvalidArgument("exponent p must exceed 1");
  const Vector & W  = M.volume_weights();
  const double   lo0 = u.values.minCoeff(), hi0 = u.values.maxCoeff();
  if (!(hi0 - lo0 > 1e-14 * std::max(1.0, std::max(std::abs(lo0), std::abs(hi0)))))
    throw InvalidArgument("cannot project a constant field onto the constraint family");

  auto sign_integral = [&](double c) {
    return weighted_sum(W, signed_power((u.values.array() - c).matrix(), p));
  };

  double c = 0.0;
  const double scale0 = weighted_sum(W, abs_power(u.values, p));
  if (std::abs(sign_integral(0.0)) > 1e-15 * scale0)
    {
      double lo = lo0, hi = hi0; // sign_integral(lo) >= 0 >= sign_integral(hi)
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it)
        {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi)
            break;
          (sign_integral(mid) > 0.0 ? lo : hi) = mid;
        }
      c = 0.5 * (lo + hi);
    }

  const Vector shifted = (u.values.array() - c).matrix();
  const double norm    = weighted_sum(W, abs_power(shifted, p + 1.0));
  if (!(norm > 0.0))
    throw InvalidArgument("shifted field vanishes; cannot scale");
  Projection out;
  out.shift = c;
  out.scale = std::pow(norm, -1.0 / (p + 1.0));
  out.u     = M.field(out.scale * shifted);
  return out;
}

ScalarField project_to_A(const ScalarField & u, const DiscreteManifold & M, double p)
{
  return project_to_A_detail(u, M, p).u;
}

Multipliers multipliers(const ScalarField & u, const DiscreteManifold & M, double p)
{
  M.check(u);
  const ColMatrix K  = kinetic(M);
  const Vector    Ku = K * u.values;
  Multipliers     m;
  m.lambda = u.values.dot(Ku);
  m.mu     = Ku.sum() / weighted_sum(M.volume_weights(), abs_power(u.values, p - 1.0));
  return m;
}

double pde_residual(const ScalarField & U, const DiscreteManifold & M, double p)
{
  M.check(U);
  const double peak = U.values.cwiseAbs().maxCoeff();
  if (!(peak > 0.0))
    throw InvalidArgument("residual of the zero field is undefined");
  const Vector r = M.laplacian() * U.values + signed_power(U.values, p);
  return r.cwiseAbs().maxCoeff() / std::pow(peak, p);
}

Rescaled rescale_and_residual(const ScalarField & u, double lambda, const DiscreteManifold & M, double p)
{
  if (!(lambda > 0.0))
    throw InvalidArgument("lambda must be positive");
  Rescaled r;
  r.U        = M.field(std::pow(lambda, 1.0 / (p - 1.0)) * u.values);
  r.residual = pde_residual(r.U, M, p);
  return r;
}

SteadyResult minimize_energy(const DiscreteManifold & M, double p, const ScalarField & seed,
                             const MinimizeOptions & opts)
{
  require_exponent(M, p);
  M.check(seed);

  const Vector &  W = M.volume_weights();
  const ColMatrix K = kinetic(M);
  ColMatrix       P = K;
  for (Eigen::Index i = 0; i < W.size(); ++i)
    P.coeffRef(i, i) += W[i];
  Eigen::SimplicialLDLT<ColMatrix> precond(P);
  if (precond.info() != Eigen::Success)
    throw ConvergenceFailure("factorization of the preconditioner failed");

  auto energy = [&](const Vector & v) { return 0.5 * v.dot(K * v); };

  SteadyResult res;
  Vector       u   = project_to_A(seed, M, p).values;
  double       E   = energy(u);
  double       tau = opts.initial_step;
  if (opts.record_history)
    res.energy_history.push_back(E);

  // Gradient direction in the (I - Lap) metric, tangent to both constraints.
  auto tangent_gradient = [&](const Vector & v, double & residual_norm) -> Vector {
    const Vector Kv  = K * v;
    const Vector g1  = W.cwiseProduct(signed_power(v, p));
    const Vector g2  = W.cwiseProduct(abs_power(v, p - 1.0));
    const Vector pK  = precond.solve(Kv);
    const Vector pg1 = precond.solve(g1);
    const Vector pg2 = precond.solve(g2);
    Eigen::Matrix2d A;
    A << g1.dot(pg1), g1.dot(pg2), g2.dot(pg1), g2.dot(pg2);
    const Eigen::Vector2d rhs(g1.dot(pK), g2.dot(pK));
    const Eigen::Vector2d ab = A.fullPivLu().solve(rhs);
    const Vector          r  = (Kv - ab[0] * g1 - ab[1] * g2).cwiseQuotient(W);
    const double          lambda = v.dot(Kv);
    residual_norm = std::sqrt(r.dot(W.cwiseProduct(r))) / std::max(lambda, 1e-300);
    return pK - ab[0] * pg1 - ab[1] * pg2;
  };

  double gnorm = 0.0;
  Vector G     = tangent_gradient(u, gnorm);
  int    it    = 0;
  for (; it < opts.max_iterations; ++it)
    {
      bool   accepted = false;
      Vector trial;
      double E_trial = E;
      for (int halving = 0; halving < 80; ++halving)
        {
          trial = project_to_A(M.field(u - tau * G), M, p).values;
          // E(trial) - E(u) in product form keeps its relative precision near the minimum.
          const double change = 0.5 * (trial - u).dot(K * (trial + u));
          E_trial             = E + change;
          if (change <= 0.0)
            {
              accepted = true;
              break;
            }
          tau *= 0.5;
        }
      if (!accepted)
        break;

      const double dE = E - E_trial;
      u               = trial;
      E               = energy(u);
      if (opts.record_history)
        res.energy_history.push_back(E);
      G   = tangent_gradient(u, gnorm);
      tau = std::min(2.0 * tau, 1e6);
      if (dE <= opts.energy_tolerance && gnorm <= opts.gradient_tolerance)
        {
          res.converged = true;
          ++it;
          break;
        }
    }
  if (!res.converged)
    res.converged = gnorm <= opts.gradient_tolerance;

  res.iterations    = it;
  res.gradient_norm = gnorm;
  res.u_inf         = M.field(u);
  res.energy        = E;
  const auto m      = multipliers(res.u_inf, M, p);
  res.lambda        = m.lambda;
  res.mu            = m.mu;
  if (res.lambda > 0.0)
    {
      auto r           = rescale_and_residual(res.u_inf, res.lambda, M, p);
      res.U            = std::move(r.U);
      res.pde_residual = r.residual;
    }
  else
    res.converged = false;
  return res;
}

// ----------------------------------------------------------------------------
// One-dimensional oracle

PeriodicProfile::PeriodicProfile(double p, double L, int modes, double amplitude, std::vector<double> quarter_values,
                                 std::vector<double> quarter_slopes, bool elliptic)
  : p_(p)
  , L_(L)
  , modes_(modes)
  , amplitude_(amplitude)
  , values_(std::move(quarter_values))
  , slopes_(std::move(quarter_slopes))
  , elliptic_(elliptic)
{}

std::pair<double, double> PeriodicProfile::quarter(double x) const
{
  if (elliptic_)
    {
      const auto j = elliptic::jacobi(amplitude_ * x, 0.5);
      return {amplitude_ * j.cn, -amplitude_ * amplitude_ * j.sn * j.dn};
    }
  const double      q    = period() / 4.0;
  const std::size_t n    = values_.size() - 1;
  const double      h    = q / static_cast<double>(n);
  const double      pos  = std::clamp(x / h, 0.0, static_cast<double>(n));
  const std::size_t i    = std::min(static_cast<std::size_t>(pos), n - 1);
  const double      s    = pos - static_cast<double>(i);
  const double      y0 = values_[i], y1 = values_[i + 1];
  const double      m0 = slopes_[i] * h, m1 = slopes_[i + 1] * h;
  const double      s2 = s * s, s3 = s2 * s;
  const double      val = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
  const double      der = ((6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * y1 +
                      (3 * s2 - 2 * s) * m1) /
                     h;
  return {val, der};
}

double PeriodicProfile::operator()(double x) const
{
  const double P = period();
  double       y = std::fmod(x, P);
  if (y < 0.0)
    y += P;
  if (y > P / 2.0)
    y = P - y;
  if (y > P / 4.0)
    return -quarter(P / 2.0 - y).first;
  return quarter(y).first;
}

double PeriodicProfile::derivative(double x) const
{
  const double P    = period();
  double       y    = std::fmod(x, P);
  double       sign = 1.0;
  if (y < 0.0)
    y += P;
  if (y > P / 2.0)
    {
      y    = P - y;
      sign = -1.0;
    }
  if (y > P / 4.0)
    return sign * quarter(P / 2.0 - y).second;
  return sign * quarter(y).second;
}

namespace {

template <class Fn>
double simpson(Fn && f, double a, double b, int panels)
{
  if (panels % 2)
    ++panels;
  const double h   = (b - a) / panels;
  double       acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i)
    acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

} // namespace

double PeriodicProfile::energy(int panels) const
{
  return 0.5 * simpson([this](double x) { const double d = derivative(x); return d * d; }, 0.0, L_, panels);
}

double PeriodicProfile::norm_pow(int panels) const
{
  return simpson([this](double x) { return std::pow(std::abs((*this)(x)), p_ + 1.0); }, 0.0, L_, panels);
}

double PeriodicProfile::normalized_energy(int panels) const
{
  return energy(panels) / std::pow(norm_pow(panels), 2.0 / (p_ + 1.0));
}

double PeriodicProfile::normalized_lambda(int panels) const
{
  return std::pow(norm_pow(panels), (p_ - 1.0) / (p_ + 1.0));
}

ScalarField PeriodicProfile::sample(const DiscreteManifold & M, double shift, double sign) const
{
  if (M.dimension() != 1 || M.kind() != geometry::ManifoldKind::flat_torus)
    throw UnsupportedManifold("the periodic profile lives on a one-dimensional torus");
  return M.sample([&](const auto & row) { return sign * (*this)(row[0] - shift); });
}

namespace {

struct ShotResult
{
  double              quarter_time = 0.0;
  std::vector<double> values, slopes;
};

/// Integrates U'' = -|U|^{p-1} U from (A, 0) with RK4; returns the time of the first zero.
double first_zero(double p, double A)
{
  auto         acc = [p](double y) { return -std::copysign(std::pow(std::abs(y), p), y); };
  const double dt  = 1e-3 * std::pow(A, (1.0 - p) / 2.0);
  double       t = 0.0, y = A, v = 0.0;
  for (long step = 0; step < 100000000; ++step)
    {
      const double k1y = v, k1v = acc(y);
      const double k2y = v + 0.5 * dt * k1v, k2v = acc(y + 0.5 * dt * k1y);
      const double k3y = v + 0.5 * dt * k2v, k3v = acc(y + 0.5 * dt * k2y);
      const double k4y = v + dt * k3v, k4v = acc(y + dt * k3y);
      const double yn = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
      const double vn = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
      if (yn <= 0.0)
        {
          // Cubic Hermite root on [t, t + dt] by bisection.
          double lo = 0.0, hi = 1.0;
          for (int it = 0; it < 80; ++it)
            {
              const double s  = 0.5 * (lo + hi);
              const double s2 = s * s, s3 = s2 * s;
              const double val = (2 * s3 - 3 * s2 + 1) * y + (s3 - 2 * s2 + s) * v * dt + (-2 * s3 + 3 * s2) * yn +
                                 (s3 - s2) * vn * dt;
              (val > 0.0 ? lo : hi) = s;
            }
          return t + 0.5 * (lo + hi) * dt;
        }
      t += dt;
      y = yn;
      v = vn;
    }
  throw ConvergenceFailure("shooting did not reach a zero");
}

ShotResult tabulate(double p, double A, double quarter_time, int steps)
{
  auto       acc = [p](double y) { return -std::copysign(std::pow(std::abs(y), p), y); };
  const double dt = quarter_time / steps;
  ShotResult r;
  r.quarter_time = quarter_time;
  double y = A, v = 0.0;
  r.values.push_back(y);
  r.slopes.push_back(v);
  for (int i = 0; i < steps; ++i)
    {
      const double k1y = v, k1v = acc(y);
      const double k2y = v + 0.5 * dt * k1v, k2v = acc(y + 0.5 * dt * k1y);
      const double k3y = v + 0.5 * dt * k2v, k3v = acc(y + 0.5 * dt * k2y);
      const double k4y = v + dt * k3v, k4v = acc(y + dt * k3y);
      y += dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
      v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
      r.values.push_back(y);
      r.slopes.push_back(v);
    }
  return r;
}

} // namespace

PeriodicProfile oracle_1d(double p, double L, int modes)
{
  if (!(p > 1.0))
    throw InvalidArgument("exponent p must exceed 1");
  if (!(L > 0.0))
    throw InvalidArgument("circle length must be positive");
  if (modes < 1)
    throw InvalidArgument("no periodic orbit with fewer than one mode");

  const double target = L / (4.0 * modes);
  if (p == 3.0)
    {
      const double a = 4.0 * modes * elliptic::complete_first_kind(0.5) / L;
      return PeriodicProfile(p, L, modes, a, {}, {}, true);
    }

  // The quarter period decreases with the amplitude; bracket and bisect.
  double lo = 1.0, hi = 1.0;
  while (first_zero(p, lo) < target)
    lo *= 0.5;
  while (first_zero(p, hi) > target)
    hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it)
    {
      const double mid = 0.5 * (lo + hi);
      (first_zero(p, mid) > target ? lo : hi) = mid;
    }
  const double A    = 0.5 * (lo + hi);
  const double tq   = first_zero(p, A);
  if (std::abs(tq - target) > 1e-8 * target)
    throw ConvergenceFailure("no periodic orbit found at the requested mode count");
  auto shot = tabulate(p, A, target, 8192);
  return PeriodicProfile(p, L, modes, A, std::move(shot.values), std::move(shot.slopes), false);
}

Alignment align_to_oracle(const ScalarField & U, const DiscreteManifold & M, const PeriodicProfile & oracle)
{
  M.check(U);
  if (M.dimension() != 1 || M.kind() != geometry::ManifoldKind::flat_torus)
    throw UnsupportedManifold("oracle alignment runs on a one-dimensional torus");
  const Index    n = M.node_count();
  const double   h = M.spacing(0);
  const Vector & W = M.volume_weights();
  if (std::abs(n * h - oracle.length()) > 1e-9 * oracle.length())
    throw InvalidArgument("oracle length differs from the circle length");

  Vector o(n);
  for (Index j = 0; j < n; ++j)
    o[j] = oracle(j * h);

  auto distance_sq = [&](double shift, double sign) {
    double acc = 0.0;
    for (Index i = 0; i < n; ++i)
      {
        const double d = U[i] - sign * oracle(M.coordinates()(i, 0) - shift);
        acc += W[i] * d * d;
      }
    return acc;
  };

  Alignment best;
  double    best_d = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < n; ++k)
    for (double sign : {1.0, -1.0})
      {
        double acc = 0.0;
        for (Index i = 0; i < n; ++i)
          {
            const double d = U[i] - sign * o[(i - k + n) % n];
            acc += W[i] * d * d;
          }
        if (acc < best_d)
          {
            best_d     = acc;
            best.shift = (k + M.coordinates()(0, 0) / h) * h;
            best.sign  = sign;
          }
      }

  double       lo = best.shift - h, hi = best.shift + h;
  const double g  = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 80; ++it)
    {
      const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
      if (distance_sq(m1, best.sign) < distance_sq(m2, best.sign))
        hi = m2;
      else
        lo = m1;
    }
  const double refined = 0.5 * (lo + hi);
  const double d_ref   = distance_sq(refined, best.sign);
  const double d_grid  = distance_sq(best.shift, best.sign);
  if (d_ref < d_grid)
    best.shift = refined;
  best.distance = std::sqrt(std::min(d_ref, d_grid));
  return best;
}

} // namespace liyau::steady
