#include <liyau/geometry.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>

namespace liyau::geometry {

namespace {

std::uint64_t next_manifold_id()
{
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

using Triplet = Eigen::Triplet<double>;

void require(bool condition, const std::string & message)
{
  if (!condition)
    throw InvalidArgument(message);
}

} // namespace

std::string_view to_string(ManifoldKind kind)
{
  switch (kind)
    {
      case ManifoldKind::flat_torus:
        return "flat_torus";
      case ManifoldKind::conformal_torus:
        return "conformal_torus";
      case ManifoldKind::icosphere:
        return "icosphere";
    }
  return "unknown";
}

void GridSpec::validate() const
{
  require(dimension >= 1 && dimension <= 3, "grid dimension must be 1, 2 or 3");
  require(nodes_per_axis >= 8, "grid needs at least 8 nodes per axis");
  require(static_cast<int>(period_lengths.size()) == dimension,
          "grid needs one period length per axis");
  for (double L : period_lengths)
    require(std::isfinite(L) && L > 0.0, "period lengths must be positive");
}

DiscreteManifold::DiscreteManifold(ManifoldSpec spec)
  : spec_(std::move(spec))
  , kind_(static_cast<ManifoldKind>(spec_.index()))
  , id_(next_manifold_id())
{
  if (const auto * flat = std::get_if<FlatTorus>(&spec_))
    {
      flat->grid.validate();
      build_grid(flat->grid, nullptr);
    }
  else if (const auto * conf = std::get_if<ConformalTorus>(&spec_))
    {
      conf->grid.validate();
      require(conf->grid.dimension == 2, "conformal torus must be two-dimensional");
      const auto count = static_cast<std::size_t>(conf->grid.nodes_per_axis) * conf->grid.nodes_per_axis;
      require(conf->phi.size() == count, "conformal factor needs one sample per node");
      for (double v : conf->phi)
        require(std::isfinite(v), "conformal factor must be finite at every node");
      build_grid(conf->grid, &conf->phi);
    }
  else
    {
      const auto & ico = std::get<Icosphere>(spec_);
      require(ico.subdivision >= 2 && ico.subdivision <= 8, "icosphere subdivision must lie in [2, 8]");
      build_icosphere(ico.subdivision);
    }
  total_volume_ = weights_.sum();
}

void DiscreteManifold::build_grid(const GridSpec & grid, const std::vector<double> * phi)
{
  dimension_    = grid.dimension;
  const int   n = grid.nodes_per_axis;
  Index count   = 1;
  for (int a = 0; a < dimension_; ++a)
    count *= n;

  spacing_.resize(dimension_);
  double cell = 1.0;
  for (int a = 0; a < dimension_; ++a)
    {
      spacing_[a] = grid.period_lengths[a] / n;
      cell *= spacing_[a];
    }

  coordinates_.resize(count, dimension_);
  for (Index node = 0; node < count; ++node)
    {
      Index rest = node;
      for (int a = 0; a < dimension_; ++a)
        {
          coordinates_(node, a) = static_cast<double>(rest % n) * spacing_[a];
          rest /= n;
        }
    }

  phi_ = Vector::Zero(count);
  if (phi)
    phi_ = Eigen::Map<const Vector>(phi->data(), count);
  inv_metric_ = (-2.0 * phi_.array()).exp().matrix();
  weights_    = cell * (2.0 * phi_.array()).exp().matrix();

  // Stiffness S = W L is the flat stencil scaled by the cell volume: in two
  // dimensions sqrt(det g) g^{ij} = delta^{ij}, so the conformal factor only
  // enters through the weights.
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(count) * (2 * dimension_ + 1));
  for (Index node = 0; node < count; ++node)
    {
      double diag = 0.0;
      for (int a = 0; a < dimension_; ++a)
        {
          const double c = cell / (spacing_[a] * spacing_[a]);
          entries.emplace_back(node, neighbor(node, a, +1), c);
          entries.emplace_back(node, neighbor(node, a, -1), c);
          diag -= 2.0 * c;
        }
      entries.emplace_back(node, node, diag);
    }
  stiffness_.resize(count, count);
  stiffness_.setFromTriplets(entries.begin(), entries.end());
  laplacian_ = weights_.cwiseInverse().asDiagonal() * stiffness_;
  laplacian_.makeCompressed();

  // In 2-D, Ric = K_gauss g with K_gauss = -e^{-2 phi} Lap_flat phi = -(L phi).
  if (kind_ == ManifoldKind::conformal_torus)
    ricci_pointwise_ = -(laplacian_ * phi_);
  else
    ricci_pointwise_ = Vector::Zero(count);
  ricci_.lambda_min = ricci_pointwise_.minCoeff();
  ricci_.K          = std::max(0.0, -ricci_.lambda_min);
}

void DiscreteManifold::build_icosphere(int subdivision)
{
  dimension_ = 2;
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;

  std::vector<Eigen::Vector3d> verts = {
    {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
    {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
    {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  for (auto & v : verts)
    v.normalize();
  std::vector<std::array<int, 3>> faces = {
    {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
    {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
    {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
    {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
  };

  for (int level = 0; level < subdivision; ++level)
    {
      std::map<std::pair<int, int>, int> midpoint;
      auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it        = midpoint.find(key);
        if (it != midpoint.end())
          return it->second;
        verts.push_back((verts[a] + verts[b]).normalized());
        const int idx = static_cast<int>(verts.size()) - 1;
        midpoint.emplace(key, idx);
        return idx;
      };
      std::vector<std::array<int, 3>> refined;
      refined.reserve(faces.size() * 4);
      for (const auto & f : faces)
        {
          const int ab = mid(f[0], f[1]);
          const int bc = mid(f[1], f[2]);
          const int ca = mid(f[2], f[0]);
          refined.push_back({f[0], ab, ca});
          refined.push_back({f[1], bc, ab});
          refined.push_back({f[2], ca, bc});
          refined.push_back({ab, bc, ca});
        }
      faces = std::move(refined);
    }

  const Index count = static_cast<Index>(verts.size());
  coordinates_.resize(count, 3);
  for (Index i = 0; i < count; ++i)
    coordinates_.row(i) = verts[i].transpose();
  faces_.resize(static_cast<Index>(faces.size()), 3);
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (int k = 0; k < 3; ++k)
      faces_(static_cast<Index>(f), k) = faces[f][k];

  // Cotangent stiffness and barycentric dual areas.
  weights_ = Vector::Zero(count);
  std::vector<Triplet> entries;
  entries.reserve(faces.size() * 6);
  for (const auto & f : faces)
    {
      const double area = 0.5 * (verts[f[1]] - verts[f[0]]).cross(verts[f[2]] - verts[f[0]]).norm();
      for (int k = 0; k < 3; ++k)
        {
          weights_[f[k]] += area / 3.0;
          const int i = f[(k + 1) % 3];
          const int j = f[(k + 2) % 3];
          const Eigen::Vector3d e1 = verts[i] - verts[f[k]];
          const Eigen::Vector3d e2 = verts[j] - verts[f[k]];
          const double cot = e1.dot(e2) / e1.cross(e2).norm();
          entries.emplace_back(i, j, 0.5 * cot);
          entries.emplace_back(j, i, 0.5 * cot);
        }
    }
  SparseMatrix off(count, count);
  off.setFromTriplets(entries.begin(), entries.end());
  Vector rowsum = off * Vector::Ones(count);
  entries.clear();
  for (Index i = 0; i < count; ++i)
    {
      for (SparseMatrix::InnerIterator it(off, i); it; ++it)
        entries.emplace_back(i, it.col(), it.value());
      entries.emplace_back(i, i, -rowsum[i]);
    }
  stiffness_.resize(count, count);
  stiffness_.setFromTriplets(entries.begin(), entries.end());
  laplacian_ = weights_.cwiseInverse().asDiagonal() * stiffness_;
  laplacian_.makeCompressed();

  phi_              = Vector::Zero(count);
  inv_metric_       = Vector::Ones(count);
  ricci_pointwise_  = Vector::Ones(count);
  ricci_.lambda_min = 1.0; // Ric = (N - 1) g on the unit sphere
  ricci_.K          = 0.0;
}

const GridSpec & DiscreteManifold::grid() const
{
  if (const auto * flat = std::get_if<FlatTorus>(&spec_))
    return flat->grid;
  if (const auto * conf = std::get_if<ConformalTorus>(&spec_))
    return conf->grid;
  throw UnsupportedManifold("icosphere has no structured grid");
}

double DiscreteManifold::spacing(int axis) const
{
  if (!structured())
    throw UnsupportedManifold("icosphere has no grid spacing");
  return spacing_.at(static_cast<std::size_t>(axis));
}

Index DiscreteManifold::neighbor(Index node, int axis, int offset) const
{
  const Index n      = grid().nodes_per_axis;
  Index       stride = 1;
  for (int a = 0; a < axis; ++a)
    stride *= n;
  const Index coord   = (node / stride) % n;
  const Index shifted = ((coord + offset) % n + n) % n;
  return node + (shifted - coord) * stride;
}

ScalarField DiscreteManifold::field(Vector values) const
{
  if (values.size() != node_count())
    throw InvalidArgument("field length " + std::to_string(values.size()) + " does not match node count " +
                          std::to_string(node_count()));
  if (!values.allFinite())
    throw InvalidArgument("field values must be finite");
  return ScalarField{id_, std::move(values)};
}

ScalarField DiscreteManifold::constant(double c) const
{
  return field(Vector::Constant(node_count(), c));
}

void DiscreteManifold::check(const ScalarField & f) const
{
  if (f.manifold_id != id_ || f.size() != node_count())
    throw ManifoldMismatch("field does not belong to this manifold");
}

double DiscreteManifold::integrate(const ScalarField & f) const
{
  check(f);
  return weights_.dot(f.values);
}

double DiscreteManifold::mean(const ScalarField & f) const
{
  return integrate(f) / total_volume_;
}

double DiscreteManifold::inner(const ScalarField & f, const ScalarField & g) const
{
  check(f);
  check(g);
  return (weights_.array() * f.values.array() * g.values.array()).sum();
}

DiscreteManifold build_manifold(const ManifoldSpec & spec)
{
  return DiscreteManifold(spec);
}

DiscreteManifold flat_torus(int dimension, int nodes_per_axis, double period_length)
{
  return DiscreteManifold(FlatTorus{GridSpec{dimension, nodes_per_axis,
                                             std::vector<double>(static_cast<std::size_t>(dimension), period_length)}});
}

DiscreteManifold conformal_torus(int nodes_per_axis, double period_length, const std::vector<double> & phi)
{
  return DiscreteManifold(ConformalTorus{GridSpec{2, nodes_per_axis, {period_length, period_length}}, phi});
}

DiscreteManifold conformal_torus_sine(int nodes_per_axis, double period_length, double amplitude)
{
  const int           n = nodes_per_axis;
  const double        h = period_length / n;
  std::vector<double> phi(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      phi[static_cast<std::size_t>(j) * n + i] = amplitude * std::sin(i * h);
  return conformal_torus(n, period_length, phi);
}

DiscreteManifold icosphere(int subdivision)
{
  return DiscreteManifold(Icosphere{subdivision});
}

ScalarField laplacian_apply(const DiscreteManifold & M, const ScalarField & f)
{
  M.check(f);
  return ScalarField{M.id(), M.laplacian() * f.values};
}

namespace {

/// Centered first differences, one column per axis.
Eigen::MatrixXd grid_gradient(const DiscreteManifold & M, const Vector & f)
{
  const int       d = M.dimension();
  Eigen::MatrixXd g(f.size(), d);
  for (int a = 0; a < d; ++a)
    {
      const double inv2h = 1.0 / (2.0 * M.spacing(a));
      for (Index i = 0; i < f.size(); ++i)
        g(i, a) = (f[M.neighbor(i, a, +1)] - f[M.neighbor(i, a, -1)]) * inv2h;
    }
  return g;
}

/// Area-weighted vertex average of per-face P1 gradients, projected onto the tangent plane.
Eigen::MatrixXd mesh_gradient(const DiscreteManifold & M, const Vector & f)
{
  const auto &    X = M.coordinates();
  const auto &    F = M.faces();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(f.size(), 3);
  Vector          area_sum = Vector::Zero(f.size());
  for (Index t = 0; t < F.rows(); ++t)
    {
      const Eigen::Vector3d p0 = X.row(F(t, 0)).transpose();
      const Eigen::Vector3d p1 = X.row(F(t, 1)).transpose();
      const Eigen::Vector3d p2 = X.row(F(t, 2)).transpose();
      const Eigen::Vector3d n2 = (p1 - p0).cross(p2 - p0);
      const double          area2 = n2.norm();
      const Eigen::Vector3d n     = n2 / area2;
      const Eigen::Vector3d grad =
        ((f[F(t, 1)] - f[F(t, 0)]) * n.cross(p0 - p2) + (f[F(t, 2)] - f[F(t, 0)]) * n.cross(p1 - p0)) / area2;
      for (int k = 0; k < 3; ++k)
        {
          g.row(F(t, k)) += 0.5 * area2 * grad.transpose();
          area_sum[F(t, k)] += 0.5 * area2;
        }
    }
  for (Index i = 0; i < f.size(); ++i)
    {
      const Eigen::Vector3d normal = X.row(i).transpose().normalized();
      Eigen::Vector3d       v      = g.row(i).transpose() / area_sum[i];
      v -= v.dot(normal) * normal;
      g.row(i) = v.transpose();
    }
  return g;
}

Eigen::MatrixXd coordinate_gradient(const DiscreteManifold & M, const Vector & f)
{
  return M.structured() ? grid_gradient(M, f) : mesh_gradient(M, f);
}

} // namespace

ScalarField gradient_sq(const DiscreteManifold & M, const ScalarField & f)
{
  M.check(f);
  const Eigen::MatrixXd g = coordinate_gradient(M, f.values);
  return ScalarField{M.id(), (g.rowwise().squaredNorm().array() * M.inverse_metric_factor().array()).matrix()};
}

ScalarField gradient_dot(const DiscreteManifold & M, const ScalarField & f, const ScalarField & h)
{
  M.check(f);
  M.check(h);
  const Eigen::MatrixXd gf = coordinate_gradient(M, f.values);
  const Eigen::MatrixXd gh = coordinate_gradient(M, h.values);
  return ScalarField{M.id(),
                     (gf.cwiseProduct(gh).rowwise().sum().array() * M.inverse_metric_factor().array()).matrix()};
}

ScalarField hessian_sq(const DiscreteManifold & M, const ScalarField & f)
{
  M.check(f);
  if (!M.structured())
    throw UnsupportedManifold("covariant Hessian is only offered on structured grids");

  const int       d  = M.dimension();
  const Vector &  u  = f.values;
  const Index     nn = u.size();
  const Eigen::MatrixXd du   = grid_gradient(M, u);
  const Eigen::MatrixXd dphi = grid_gradient(M, M.phi());
  const bool      conformal  = M.kind() == ManifoldKind::conformal_torus;

  Vector out(nn);
  for (Index i = 0; i < nn; ++i)
    {
      double sum = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          {
            double hab;
            if (a == b)
              {
                const double h = M.spacing(a);
                hab = (u[M.neighbor(i, a, +1)] - 2.0 * u[i] + u[M.neighbor(i, a, -1)]) / (h * h);
              }
            else
              {
                const Index pp = M.neighbor(M.neighbor(i, a, +1), b, +1);
                const Index pm = M.neighbor(M.neighbor(i, a, +1), b, -1);
                const Index mp = M.neighbor(M.neighbor(i, a, -1), b, +1);
                const Index mm = M.neighbor(M.neighbor(i, a, -1), b, -1);
                hab = (u[pp] - u[pm] - u[mp] + u[mm]) / (4.0 * M.spacing(a) * M.spacing(b));
              }
            if (conformal)
              {
                // Gamma^k_ab = delta_ak d_b phi + delta_bk d_a phi - delta_ab d_k phi
                hab -= dphi(i, a) * du(i, b) + dphi(i, b) * du(i, a);
                if (a == b)
                  hab += dphi.row(i).dot(du.row(i));
              }
            sum += hab * hab;
          }
      out[i] = sum * M.inverse_metric_factor()[i] * M.inverse_metric_factor()[i];
    }
  return ScalarField{M.id(), std::move(out)};
}

RicciBound ricci_lower_bound(const DiscreteManifold & M)
{
  return RicciBound{M.ricci_lower(), M.K()};
}

double bochner_residual(const DiscreteManifold & M, const ScalarField & U)
{
  M.check(U);
  if (!M.structured())
    throw UnsupportedManifold("Bochner residual needs the covariant Hessian (structured grids only)");
  const ScalarField grad2 = gradient_sq(M, U);
  const Vector      lhs   = M.laplacian() * grad2.values;
  const ScalarField hess  = hessian_sq(M, U);
  const ScalarField lapU  = laplacian_apply(M, U);
  const ScalarField cross = gradient_dot(M, U, lapU);
  const Vector      ric   = M.ricci_pointwise().cwiseProduct(grad2.values);
  return (lhs - 2.0 * hess.values - 2.0 * cross.values - 2.0 * ric).cwiseAbs().maxCoeff();
}

double laplace_comparison_check(int subdivision, double K)
{
  if (!(K >= 0.0))
    throw InvalidArgument("Ricci parameter K must be nonnegative");
  const DiscreteManifold sphere = icosphere(subdivision);
  const auto &           X      = sphere.coordinates();
  const double           lo = 0.1, hi = std::numbers::pi - 0.1;
  const double           sqrtK  = std::sqrt(K);
  auto violation = [&](double r) { return r * std::cos(r) / std::sin(r) - (1.0 + sqrtK * r); };

  double worst = -std::numeric_limits<double>::infinity();
  for (Index i = 1; i < X.rows(); ++i)
    {
      const double r = std::acos(std::clamp(X.row(i).dot(X.row(0)), -1.0, 1.0));
      if (r > lo && r < hi)
        worst = std::max(worst, violation(r));
    }
  constexpr int sweep = 1000;
  for (int k = 1; k < sweep; ++k)
    worst = std::max(worst, violation(lo + (hi - lo) * k / sweep));
  return worst;
}

double dirichlet_energy(const DiscreteManifold & M, const ScalarField & f)
{
  M.check(f);
  const auto & S = M.stiffness();
  double       energy = 0.0;
  for (Index i = 0; i < S.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(S, i); it; ++it)
      if (it.col() > i)
        {
          const double diff = f.values[i] - f.values[it.col()];
          energy += it.value() * diff * diff;
        }
  return 0.5 * energy;
}

OperatorContracts operator_contracts(const DiscreteManifold & M, std::uint64_t seed, int pairs)
{
  OperatorContracts out;
  const auto &      L = M.laplacian();
  for (Index i = 0; i < L.outerSize(); ++i)
    out.scale = std::max(out.scale, std::abs(L.coeff(i, i)));

  out.constant_kernel = (L * Vector::Ones(M.node_count())).cwiseAbs().maxCoeff() / out.scale;

  std::mt19937_64                        rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto random_field = [&] {
    Vector v(M.node_count());
    for (Index i = 0; i < v.size(); ++i)
      v[i] = dist(rng);
    return M.field(std::move(v));
  };

  out.max_rayleigh = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < pairs; ++k)
    {
      const ScalarField f  = random_field();
      const ScalarField g  = random_field();
      const ScalarField Lf = laplacian_apply(M, f);
      const ScalarField Lg = laplacian_apply(M, g);
      const double      nf = std::sqrt(M.inner(f, f));
      const double      ng = std::sqrt(M.inner(g, g));
      out.self_adjointness =
        std::max(out.self_adjointness, std::abs(M.inner(Lf, g) - M.inner(f, Lg)) / (out.scale * nf * ng));
      out.max_rayleigh = std::max(out.max_rayleigh, M.inner(Lf, f) / (out.scale * nf * nf));
      const double abs_int = M.volume_weights().dot(f.values.cwiseAbs());
      out.green            = std::max(out.green, std::abs(M.integrate(Lf)) / (out.scale * abs_int));
    }
  return out;
}

} // namespace liyau::geometry
