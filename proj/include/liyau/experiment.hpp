#pragma once

#include <liyau/geometry.hpp>
#include <liyau/heatflow.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

/// Experiment configuration files, the check registry, batch runs and
/// markdown reports.
namespace liyau::experiment {

struct ManifoldConfig
{
  std::string kind           = "flat_torus"; ///< flat_torus | conformal_torus | icosphere
  int         dimension      = 1;            ///< flat tori only
  int         nodes_per_axis = 128;
  double      period_length  = 6.283185307179586;
  double      phi_amplitude  = 0.0; ///< conformal factor phi = amplitude * sin(x)
  int         subdivision    = 4;

  geometry::DiscreteManifold build() const;
  int                        intrinsic_dimension() const;
  bool                       operator==(const ManifoldConfig &) const = default;
};

/// u0 = mean + amplitude * s(x), with s = sin of the first coordinate ("sine"),
/// s = 0 ("constant") or uniform noise in [-1, 1] from the run seed ("random").
struct InitialData
{
  std::string kind      = "sine";
  double      mean      = 1.0;
  double      amplitude = 0.5;

  geometry::ScalarField sample(const geometry::DiscreteManifold & M, std::uint64_t seed) const;
  bool                  operator==(const InitialData &) const = default;
};

struct HarnackSettings
{
  double                gamma = 2.0; ///< used for the linear quantity and when beta is given
  std::optional<double> beta;        ///< absent: (beta, gamma) from the feasibility search
  double                C0                 = 1.0;
  double                C_lin              = 1.0;
  double                tolerance_factor   = 10.0; ///< slack tolerance = factor x linear-flow residual
  double                identity_tolerance = 0.05;
  double                trend_tolerance    = 0.05;
  double                linear_t_end       = 4.0;
  int                   monitor_stride     = 1;

  bool operator==(const HarnackSettings &) const = default;
};

struct SteadySettings
{
  double      p              = 3.0;
  std::string seed           = "sine"; ///< sine | odd_random
  int         max_iterations = 50000;

  bool operator==(const SteadySettings &) const = default;
};

struct Expectations
{
  std::optional<double> T_star;
  double                T_star_tolerance = 0.02;

  bool operator==(const Expectations &) const = default;
};

struct ExperimentConfig
{
  ManifoldConfig           manifold;
  InitialData              initial;
  heatflow::FlowConfig     flow;
  HarnackSettings          harnack;
  SteadySettings           steady;
  Expectations             expect;
  std::vector<std::string> checks;
  std::string              output_dir;
  std::uint64_t            random_seed = 0;

  /// Schema-level and cross-field validation (checks drawn from the registry,
  /// automatic parameters only below the feasibility threshold).
  void validate() const;
  bool operator==(const ExperimentConfig &) const = default;
};

/// JSON text; unknown keys and wrong types are configuration errors.
ExperimentConfig parse_config(std::string_view text);
std::string      serialize_config(const ExperimentConfig & config);
ExperimentConfig load_config(const std::filesystem::path & path);

/// Names accepted in the checks list.
const std::vector<std::string> & check_registry();

enum class Status
{
  pass,
  fail,
  vacuous
};

std::string_view to_string(Status status);

enum class Relation
{
  at_most,
  at_least,
  info
};

struct Quantity
{
  std::string name;
  Relation    relation = Relation::info;
  double      bound    = 0.0;
  double      measured = 0.0;

  /// Positive when the assertion holds; NaN for informational rows.
  double slack() const;
};

struct CheckResult
{
  std::string           name;
  Status                status = Status::pass;
  std::vector<Quantity> rows;
  std::string           note;
};

struct RunReport
{
  std::vector<CheckResult> checks;
  std::vector<std::string> files; ///< relative to the output directory

  /// 0 when nothing failed, 1 otherwise.
  int exit_code() const;
};

/// Runs the requested checks; output_dir (when non-empty) receives CSV, JSON and report.md.
RunReport run(const ExperimentConfig & config);

std::string report_render(const RunReport & report);

struct Calibration
{
  double K     = 0.0;
  double C0    = 0.0; ///< 1.1 x max sup rho / K over the nonlinear suite
  double C_lin = 0.0; ///< the same for the linear suite
};

/// Validation suite on a conformal torus with positive K.
Calibration calibrate(int nodes_per_axis = 32, double phi_amplitude = 0.1);

} // namespace liyau::experiment
