#pragma once

#include <liyau/error.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

/// Discrete Riemannian manifolds and metric-aware differential operators.
///
/// Three families are offered: flat tori T^N (N = 1, 2, 3) with the periodic
/// second-difference stencil, two-dimensional conformal tori g = e^{2 phi} delta,
/// and the unit icosphere with the cotangent Laplacian. Every manifold is
/// immutable after construction.
namespace liyau::geometry {

using Vector       = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index        = Eigen::Index;

struct GridSpec
{
  int                 dimension      = 1;
  int                 nodes_per_axis = 128;
  std::vector<double> period_lengths; ///< one entry per axis

  void validate() const;
};

struct FlatTorus
{
  GridSpec grid;
};

/// g = e^{2 phi} delta on a two-dimensional periodic grid; phi sampled per node.
struct ConformalTorus
{
  GridSpec            grid;
  std::vector<double> phi;
};

struct Icosphere
{
  int subdivision = 4;
};

using ManifoldSpec = std::variant<FlatTorus, ConformalTorus, Icosphere>;

enum class ManifoldKind
{
  flat_torus,
  conformal_torus,
  icosphere
};

std::string_view to_string(ManifoldKind kind);

/// Nodal values tagged with the id of the manifold they live on.
struct ScalarField
{
  std::uint64_t manifold_id = 0;
  Vector        values;

  Index  size() const { return values.size(); }
  double operator[](Index i) const { return values[i]; }
};

struct RicciBound
{
  double lambda_min = 0.0;
  double K          = 0.0; ///< max(0, -lambda_min)
};

class DiscreteManifold
{
public:
  explicit DiscreteManifold(ManifoldSpec spec);

  std::uint64_t        id() const { return id_; }
  ManifoldKind         kind() const { return kind_; }
  const ManifoldSpec & spec() const { return spec_; }
  Index                node_count() const { return weights_.size(); }
  /// Intrinsic dimension N.
  int                  dimension() const { return dimension_; }
  bool                 structured() const { return kind_ != ManifoldKind::icosphere; }

  const Vector &       volume_weights() const { return weights_; }
  double               total_volume() const { return total_volume_; }
  /// Row-major Laplace-Beltrami matrix; self-adjoint in the volume-weighted inner product.
  const SparseMatrix & laplacian() const { return laplacian_; }
  /// Symmetric stiffness W * L (W = diag of volume weights).
  const SparseMatrix & stiffness() const { return stiffness_; }
  double               ricci_lower() const { return ricci_.lambda_min; }
  double               K() const { return ricci_.K; }
  /// Pointwise Ricci lower eigenvalue (Gaussian curvature in 2-D, 0 on flat tori).
  const Vector &       ricci_pointwise() const { return ricci_pointwise_; }

  /// Node coordinates, one row per node (grid coordinates on tori, R^3 on the sphere).
  const Eigen::MatrixXd & coordinates() const { return coordinates_; }

  // Structured-grid accessors (throw UnsupportedManifold on the icosphere).
  const GridSpec & grid() const;
  double           spacing(int axis) const;
  Index            neighbor(Index node, int axis, int offset) const;
  /// phi per node (zero on flat tori).
  const Vector &   phi() const { return phi_; }
  /// e^{-2 phi} per node, the inverse metric factor.
  const Vector &   inverse_metric_factor() const { return inv_metric_; }

  // Icosphere accessor.
  const Eigen::MatrixXi & faces() const { return faces_; }

  ScalarField field(Vector values) const;
  ScalarField constant(double c) const;
  template <class Fn>
  ScalarField sample(Fn && fn) const
  {
    Vector v(node_count());
    for (Index i = 0; i < node_count(); ++i)
      v[i] = fn(coordinates_.row(i));
    return field(std::move(v));
  }

  /// Throws ManifoldMismatch unless f lives on this manifold.
  void check(const ScalarField & f) const;

  double integrate(const ScalarField & f) const;
  /// Volume-normalized mean.
  double mean(const ScalarField & f) const;
  double inner(const ScalarField & f, const ScalarField & g) const;

private:
  void build_grid(const GridSpec & grid, const std::vector<double> * phi);
  void build_icosphere(int subdivision);

  ManifoldSpec    spec_;
  ManifoldKind    kind_;
  std::uint64_t   id_;
  int             dimension_ = 1;
  Vector          weights_;
  double          total_volume_ = 0.0;
  SparseMatrix    laplacian_;
  SparseMatrix    stiffness_;
  RicciBound      ricci_;
  Vector          ricci_pointwise_;
  Eigen::MatrixXd coordinates_;
  Vector          phi_;
  Vector          inv_metric_;
  Eigen::MatrixXi faces_;
  std::vector<double> spacing_;
};

DiscreteManifold build_manifold(const ManifoldSpec & spec);

/// Convenience constructors with the default resolutions.
DiscreteManifold flat_torus(int dimension, int nodes_per_axis, double period_length);
DiscreteManifold conformal_torus(int nodes_per_axis, double period_length, const std::vector<double> & phi);
/// Conformal torus with phi(x, y) = amplitude * sin(x) on [0, L)^2.
DiscreteManifold conformal_torus_sine(int nodes_per_axis, double period_length, double amplitude);
DiscreteManifold icosphere(int subdivision);

ScalarField laplacian_apply(const DiscreteManifold & M, const ScalarField & f);
/// |grad f|_g^2 per node.
ScalarField gradient_sq(const DiscreteManifold & M, const ScalarField & f);
/// <grad f, grad h>_g per node.
ScalarField gradient_dot(const DiscreteManifold & M, const ScalarField & f, const ScalarField & h);
/// |Hess f|_g^2 per node; structured grids only.
ScalarField hessian_sq(const DiscreteManifold & M, const ScalarField & f);

RicciBound ricci_lower_bound(const DiscreteManifold & M);

/// max over nodes of |Lap|grad U|^2 - 2|Hess U|^2 - 2 <grad U, grad Lap U> - 2 Ric(grad U, grad U)|.
double bochner_residual(const DiscreteManifold & M, const ScalarField & U);

/// max over sampled geodesic radii r in (0.1, pi - 0.1) on the unit sphere of
/// r cot r - (1 + sqrt(K) r). The radii are the distances of the icosphere
/// vertices from vertex 0 plus a uniform sweep of the same interval.
double laplace_comparison_check(int subdivision, double K);

/// Dirichlet energy 1/2 int |grad f|^2 in edge-difference form (consistent with the Laplacian).
double dirichlet_energy(const DiscreteManifold & M, const ScalarField & f);

/// Measured operator contracts on random fields.
struct OperatorContracts
{
  double scale            = 0.0; ///< max |L_ii|
  double constant_kernel  = 0.0; ///< ||L 1||_inf / scale
  double self_adjointness = 0.0; ///< max relative |<Lf,g> - <f,Lg>|
  double max_rayleigh     = 0.0; ///< max <Lf,f> / (scale <f,f>)
  double green            = 0.0; ///< max |int Lf| / (scale * int |f|)
};

OperatorContracts operator_contracts(const DiscreteManifold & M, std::uint64_t seed, int pairs = 20);

} // namespace liyau::geometry
