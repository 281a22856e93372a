#include <liyau/experiment.hpp>

#include <liyau/exponents.hpp>
#include <liyau/feasibility.hpp>
#include <liyau/harnack.hpp>
#include <liyau/io.hpp>
#include <liyau/steady.hpp>

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace liyau::experiment {

using nlohmann::json;
using geometry::DiscreteManifold;
using geometry::ScalarField;
using geometry::Vector;

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> registry = {
  "exponents",      "feasibility",     "blowup",         "jensen",          "min_tracker",
  "identity_3_2",   "identity_3_7",    "inequality_3_11", "lemma_4_1",      "ode_comparison",
  "harnack_trend",  "harnack_nonlinear", "bochner",      "operator_contracts", "scaling",
  "steady",
};

// ---------------------------------------------------------------------------
// Schema helpers

class Section
{
public:
  Section(const json & j, std::string name)
    : j_(j)
    , name_(std::move(name))
  {
    if (!j_.is_object())
      throw InvalidArgument("config: '" + name_ + "' must be an object");
  }

  template <class T>
  void read(const char * key, T & out)
  {
    seen_.insert(key);
    if (!j_.contains(key))
      return;
    const json & v = j_.at(key);
    try
      {
        if constexpr (std::is_same_v<T, double>)
          {
            if (!v.is_number())
              throw InvalidArgument("");
          }
        else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>)
          {
            if (!v.is_number_integer())
              throw InvalidArgument("");
          }
        else if constexpr (std::is_same_v<T, std::string>)
          {
            if (!v.is_string())
              throw InvalidArgument("");
          }
        out = v.get<T>();
      }
    catch (const std::exception &)
      {
        throw InvalidArgument("config: '" + name_ + "." + key + "' has the wrong type");
      }
  }

  void read_optional(const char * key, std::optional<double> & out, const char * automatic)
  {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null())
      {
        out.reset();
        return;
      }
    const json & v = j_.at(key);
    if (v.is_string() && v.get<std::string>() == automatic)
      out.reset();
    else if (v.is_number())
      out = v.get<double>();
    else
      throw InvalidArgument("config: '" + name_ + "." + key + "' must be a number or \"" + automatic + "\"");
  }

  const json & sub(const char * key)
  {
    seen_.insert(key);
    static const json empty = json::object();
    return j_.contains(key) ? j_.at(key) : empty;
  }

  void finish() const
  {
    for (const auto & [k, v] : j_.items())
      if (!seen_.count(k))
        throw InvalidArgument("config: unknown key '" + name_ + "." + k + "'");
  }

private:
  const json &          j_;
  std::string           name_;
  std::set<std::string> seen_;
};

ScalarField odd_random_seed(const DiscreteManifold & M, std::uint64_t seed)
{
  std::mt19937_64                        rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double                                 a[4];
  for (double & c : a)
    c = dist(rng);
  a[0] = 1.0 + 0.1 * a[0];
  const double L = M.structured() ? M.grid().period_lengths[0] : 2.0 * M_PI;
  const double k = 2.0 * M_PI / L;
  return M.sample([&](const auto & row) {
    double s = 0.0;
    for (int m = 0; m < 4; ++m)
      s += (m == 0 ? a[m] : 0.1 * a[m]) * std::sin((m + 1) * k * row[0]);
    return s;
  });
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

DiscreteManifold ManifoldConfig::build() const
{
  if (kind == "flat_torus")
    return geometry::flat_torus(dimension, nodes_per_axis, period_length);
  if (kind == "conformal_torus")
    return geometry::conformal_torus_sine(nodes_per_axis, period_length, phi_amplitude);
  if (kind == "icosphere")
    return geometry::icosphere(subdivision);
  throw InvalidArgument("config: unknown manifold kind '" + kind + "'");
}

int ManifoldConfig::intrinsic_dimension() const
{
  return kind == "flat_torus" ? dimension : 2;
}

ScalarField InitialData::sample(const DiscreteManifold & M, std::uint64_t seed) const
{
  if (kind == "constant")
    return M.constant(mean);
  if (kind == "sine")
    {
      const double k = M.structured() ? 2.0 * M_PI / M.grid().period_lengths[0] : 1.0;
      return M.sample([&](const auto & row) {
        return mean + amplitude * (M.structured() ? std::sin(k * row[0]) : row[2]);
      });
    }
  if (kind == "random")
    {
      std::mt19937_64                        rng(seed);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      Vector                                 v(M.node_count());
      for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = mean + amplitude * dist(rng);
      return M.field(std::move(v));
    }
  throw InvalidArgument("config: unknown initial data kind '" + kind + "'");
}

void ExperimentConfig::validate() const
{
  if (manifold.kind != "flat_torus" && manifold.kind != "conformal_torus" && manifold.kind != "icosphere")
    throw InvalidArgument("config: unknown manifold kind '" + manifold.kind + "'");
  if (manifold.kind == "flat_torus" && (manifold.dimension < 1 || manifold.dimension > 3))
    throw InvalidArgument("config: flat torus dimension must be 1, 2 or 3");
  if (manifold.kind != "icosphere" && (manifold.nodes_per_axis < 4 || !(manifold.period_length > 0.0)))
    throw InvalidArgument("config: grids need at least 4 nodes per axis and a positive period");
  if (manifold.kind == "icosphere" && (manifold.subdivision < 0 || manifold.subdivision > 7))
    throw InvalidArgument("config: icosphere subdivision must lie in [0, 7]");
  if (initial.kind != "constant" && initial.kind != "sine" && initial.kind != "random")
    throw InvalidArgument("config: unknown initial data kind '" + initial.kind + "'");
  if (steady.seed != "sine" && steady.seed != "odd_random")
    throw InvalidArgument("config: unknown steady seed '" + steady.seed + "'");
  if (harnack.monitor_stride < 1)
    throw InvalidArgument("config: harnack.monitor_stride must be at least 1");
  flow.validate();

  std::set<std::string> seen;
  for (const auto & c : checks)
    {
      if (std::find(registry.begin(), registry.end(), c) == registry.end())
        throw InvalidArgument("config: unknown check name '" + c + "'");
      if (!seen.insert(c).second)
        throw InvalidArgument("config: check '" + c + "' requested twice");
    }

  if (!harnack.beta && flow.reaction.kind != heatflow::ReactionKind::none)
    {
      const int    N      = manifold.intrinsic_dimension();
      const double p_star = exponents::exponent_table(N).p_star;
      if (!(flow.reaction.p < p_star))
        throw feasibility::Infeasible(fmt::format("config: automatic Harnack parameters need p below the feasibility "
                                                  "threshold {:.6g} for N = {} (got p = {:.6g})",
                                                  p_star, N, flow.reaction.p),
                                      p_star);
    }
}

ExperimentConfig parse_config(std::string_view text)
{
  json root;
  try
    {
      root = json::parse(text.begin(), text.end());
    }
  catch (const json::parse_error & e)
    {
      throw InvalidArgument(std::string("config: malformed JSON: ") + e.what());
    }

  ExperimentConfig c;
  Section          top(root, "config");
  {
    Section s(top.sub("manifold"), "manifold");
    s.read("kind", c.manifold.kind);
    s.read("dimension", c.manifold.dimension);
    s.read("nodes_per_axis", c.manifold.nodes_per_axis);
    s.read("period_length", c.manifold.period_length);
    s.read("phi_amplitude", c.manifold.phi_amplitude);
    s.read("subdivision", c.manifold.subdivision);
    s.finish();
  }
  {
    Section s(top.sub("initial"), "initial");
    s.read("kind", c.initial.kind);
    s.read("mean", c.initial.mean);
    s.read("amplitude", c.initial.amplitude);
    s.finish();
  }
  {
    Section     s(top.sub("flow"), "flow");
    std::string reaction = std::string(heatflow::to_string(c.flow.reaction.kind));
    std::string scheme   = std::string(heatflow::to_string(c.flow.scheme));
    s.read("reaction", reaction);
    s.read("p", c.flow.reaction.p);
    s.read("scheme", scheme);
    s.read_optional("dt", c.flow.dt, "auto");
    s.read("t_end", c.flow.t_end);
    s.read("blowup_threshold", c.flow.blowup_threshold);
    s.read("positivity_floor", c.flow.positivity_floor);
    s.read("snapshot_stride", c.flow.snapshot_stride);
    s.read("growth_limit", c.flow.growth_limit);
    s.read("solver_tolerance", c.flow.solver_tolerance);
    s.read("solver_iterations", c.flow.solver_iterations);
    s.finish();
    c.flow.reaction.kind = heatflow::reaction_kind_from_string(reaction);
    c.flow.scheme        = heatflow::scheme_from_string(scheme);
  }
  {
    Section s(top.sub("harnack"), "harnack");
    s.read("gamma", c.harnack.gamma);
    s.read_optional("beta", c.harnack.beta, "auto");
    s.read("C0", c.harnack.C0);
    s.read("C_lin", c.harnack.C_lin);
    s.read("tolerance_factor", c.harnack.tolerance_factor);
    s.read("identity_tolerance", c.harnack.identity_tolerance);
    s.read("trend_tolerance", c.harnack.trend_tolerance);
    s.read("linear_t_end", c.harnack.linear_t_end);
    s.read("monitor_stride", c.harnack.monitor_stride);
    s.finish();
  }
  {
    Section s(top.sub("steady"), "steady");
    s.read("p", c.steady.p);
    s.read("seed", c.steady.seed);
    s.read("max_iterations", c.steady.max_iterations);
    s.finish();
  }
  {
    Section s(top.sub("expect"), "expect");
    s.read_optional("T_star", c.expect.T_star, "none");
    s.read("T_star_tolerance", c.expect.T_star_tolerance);
    s.finish();
  }
  top.sub("checks");
  if (root.contains("checks"))
    {
      if (!root.at("checks").is_array())
        throw InvalidArgument("config: 'checks' must be a list of names");
      for (const auto & v : root.at("checks"))
        {
          if (!v.is_string())
            throw InvalidArgument("config: check names must be strings");
          c.checks.push_back(v.get<std::string>());
        }
    }
  top.read("output_dir", c.output_dir);
  top.read("random_seed", c.random_seed);
  top.finish();
  c.validate();
  return c;
}

std::string serialize_config(const ExperimentConfig & c)
{
  json j;
  j["manifold"] = {{"kind", c.manifold.kind},
                   {"dimension", c.manifold.dimension},
                   {"nodes_per_axis", c.manifold.nodes_per_axis},
                   {"period_length", c.manifold.period_length},
                   {"phi_amplitude", c.manifold.phi_amplitude},
                   {"subdivision", c.manifold.subdivision}};
  j["initial"]  = {{"kind", c.initial.kind}, {"mean", c.initial.mean}, {"amplitude", c.initial.amplitude}};
  j["flow"]     = {{"reaction", heatflow::to_string(c.flow.reaction.kind)},
                   {"p", c.flow.reaction.p},
                   {"scheme", heatflow::to_string(c.flow.scheme)},
                   {"dt", c.flow.dt ? json(*c.flow.dt) : json("auto")},
                   {"t_end", c.flow.t_end},
                   {"blowup_threshold", c.flow.blowup_threshold},
                   {"positivity_floor", c.flow.positivity_floor},
                   {"snapshot_stride", c.flow.snapshot_stride},
                   {"growth_limit", c.flow.growth_limit},
                   {"solver_tolerance", c.flow.solver_tolerance},
                   {"solver_iterations", c.flow.solver_iterations}};
  j["harnack"]  = {{"gamma", c.harnack.gamma},
                   {"beta", c.harnack.beta ? json(*c.harnack.beta) : json("auto")},
                   {"C0", c.harnack.C0},
                   {"C_lin", c.harnack.C_lin},
                   {"tolerance_factor", c.harnack.tolerance_factor},
                   {"identity_tolerance", c.harnack.identity_tolerance},
                   {"trend_tolerance", c.harnack.trend_tolerance},
                   {"linear_t_end", c.harnack.linear_t_end},
                   {"monitor_stride", c.harnack.monitor_stride}};
  j["steady"]   = {{"p", c.steady.p}, {"seed", c.steady.seed}, {"max_iterations", c.steady.max_iterations}};
  j["expect"]   = {{"T_star", c.expect.T_star ? json(*c.expect.T_star) : json("none")},
                   {"T_star_tolerance", c.expect.T_star_tolerance}};
  j["checks"]      = c.checks;
  j["output_dir"]  = c.output_dir;
  j["random_seed"] = c.random_seed;
  return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path & path)
{
  return parse_config(io::read_text(path));
}

const std::vector<std::string> & check_registry()
{
  return registry;
}

// ---------------------------------------------------------------------------
// Reports

std::string_view to_string(Status status)
{
  switch (status)
    {
    case Status::pass: return "PASS";
    case Status::fail: return "FAIL";
    case Status::vacuous: return "VACUOUS";
    }
  return "?";
}

double Quantity::slack() const
{
  switch (relation)
    {
    case Relation::at_most: return bound - measured;
    case Relation::at_least: return measured - bound;
    case Relation::info: return nan;
    }
  return nan;
}

int RunReport::exit_code() const
{
  for (const auto & c : checks)
    if (c.status == Status::fail)
      return 1;
  return 0;
}

std::string report_render(const RunReport & report)
{
  std::ostringstream out;
  out << "# Run report\n\n";
  if (report.checks.empty())
    out << "No checks requested.\n";
  else
    {
      out << "| check | status |\n|---|---|\n";
      for (const auto & c : report.checks)
        out << "| " << c.name << " | " << to_string(c.status) << " |\n";
    }
  for (const auto & c : report.checks)
    {
      out << "\n## " << c.name << ": " << to_string(c.status) << "\n\n";
      if (!c.note.empty())
        out << c.note << "\n\n";
      out << "| quantity | bound | measured | slack |\n|---|---|---|---|\n";
      for (const auto & q : c.rows)
        {
          std::string bound = "-";
          if (q.relation == Relation::at_most)
            bound = "<= " + io::format_number(q.bound);
          else if (q.relation == Relation::at_least)
            bound = ">= " + io::format_number(q.bound);
          const std::string slack = q.relation == Relation::info ? "-" : io::format_number(q.slack());
          out << "| " << q.name << " | " << bound << " | " << io::format_number(q.measured) << " | " << slack
              << " |\n";
        }
    }
  if (!report.files.empty())
    {
      out << "\n## Files\n\n";
      for (const auto & f : report.files)
        out << "- " << f << "\n";
    }
  return out.str();
}

// ---------------------------------------------------------------------------
// Run

namespace {

Status status_of(const std::vector<Quantity> & rows)
{
  for (const auto & q : rows)
    if (q.relation != Relation::info && !(q.slack() >= 0.0))
      return Status::fail;
  return Status::pass;
}

CheckResult make_result(std::string name, std::vector<Quantity> rows, std::string note = {})
{
  CheckResult r;
  r.name   = std::move(name);
  r.status = status_of(rows);
  r.rows   = std::move(rows);
  r.note   = std::move(note);
  return r;
}

double finite_min(double a, double b)
{
  if (std::isnan(b))
    return a;
  if (std::isnan(a))
    return b;
  return std::min(a, b);
}

class Context
{
public:
  explicit Context(const ExperimentConfig & c)
    : cfg(c)
    , M(c.manifold.build())
    , u0(c.initial.sample(M, c.random_seed))
  {}

  const ExperimentConfig & cfg;
  DiscreteManifold         M;
  ScalarField              u0;

  const feasibility::HarnackParams & params()
  {
    if (!params_)
      {
        const int    N = M.dimension();
        const double p = cfg.flow.reaction.p;
        params_        = cfg.harnack.beta
                           ? feasibility::complete_params(N, p, *cfg.harnack.beta, cfg.harnack.gamma, cfg.harnack.C0)
                           : feasibility::find_params(N, p);
        params_->c0    = cfg.harnack.C0;
      }
    return *params_;
  }

  bool nonlinear() const { return cfg.flow.reaction.kind != heatflow::ReactionKind::none; }

  const heatflow::Trajectory & trajectory()
  {
    if (monitor_)
      return monitor_->trajectory;
    if (!trajectory_)
      trajectory_ = heatflow::evolve(u0, M, cfg.flow);
    return *trajectory_;
  }

  const harnack::FlowMonitor & monitor()
  {
    if (!monitor_)
      {
        if (!nonlinear())
          throw InvalidArgument("Harnack monitors need a power reaction in the flow section");
        monitor_ = harnack::monitor_flow(u0, M, cfg.flow, params(), false, cfg.harnack.monitor_stride, cfg.harnack.C0);
      }
    return *monitor_;
  }

  /// eq_6_2 (eq_3_2 off-grid) residual of the f = 0 flow at the run's discretization.
  double linear_residual()
  {
    if (!linear_residual_)
      linear_residual_ = harnack::linear_flow_residual(u0, M, cfg.flow, params().gamma);
    return *linear_residual_;
  }

  const harnack::FlowMonitor & linear_monitor()
  {
    if (!linear_monitor_)
      {
        heatflow::FlowConfig lin = cfg.flow;
        lin.reaction             = {heatflow::ReactionKind::none, cfg.flow.reaction.p};
        lin.t_end                = cfg.harnack.linear_t_end;
        auto hp                  = harnack::linear_params(M.dimension(), cfg.harnack.gamma);
        linear_monitor_          = harnack::monitor_flow(u0, M, lin, hp, true, cfg.harnack.monitor_stride);
      }
    return *linear_monitor_;
  }

  const steady::SteadyResult & steady_result()
  {
    if (!steady_)
      {
        ScalarField seed;
        if (cfg.steady.seed == "odd_random")
          seed = odd_random_seed(M, cfg.random_seed);
        else
          {
            const double k = M.structured() ? 2.0 * M_PI / M.grid().period_lengths[0] : 1.0;
            seed           = M.sample([&](const auto & row) {
              return M.structured() ? std::sin(k * row[0]) + 0.1 * std::cos(2.0 * k * row[0])
                                              : row[2] + 0.1 * row[0];
            });
          }
        steady::MinimizeOptions opts;
        opts.max_iterations = cfg.steady.max_iterations;
        steady_             = steady::minimize_energy(M, cfg.steady.p, seed, opts);
      }
    return *steady_;
  }

  bool has_monitor() const { return monitor_.has_value(); }
  bool has_linear_monitor() const { return linear_monitor_.has_value(); }
  bool has_steady() const { return steady_.has_value(); }
  bool has_trajectory() const { return trajectory_.has_value() || monitor_.has_value(); }

private:
  std::optional<feasibility::HarnackParams> params_;
  std::optional<heatflow::Trajectory>       trajectory_;
  std::optional<harnack::FlowMonitor>       monitor_;
  std::optional<harnack::FlowMonitor>       linear_monitor_;
  std::optional<double>                     linear_residual_;
  std::optional<steady::SteadyResult>       steady_;
};

CheckResult run_check(const std::string & name, Context & ctx)
{
  const auto & cfg = ctx.cfg;
  const int    N   = ctx.M.dimension();

  if (name == "exponents")
    {
      const auto t = exponents::exponent_table(N);
      return make_result(name, {{"dimension N", Relation::info, 0, double(N)},
                                {"Fujita exponent", Relation::info, 0, t.p_fujita},
                                {"feasibility threshold", Relation::info, 0, t.p_star},
                                {"Bidaut-Veron exponent", Relation::info, 0, t.p_bidaut_veron},
                                {"Sobolev exponent", Relation::info, 0, t.p_sobolev},
                                {"threshold above Fujita", Relation::at_least, 0.0, t.p_star - t.p_fujita}});
    }

  if (name == "feasibility")
    {
      const auto & hp = ctx.params();
      const auto   r  = feasibility::check_constraints(N, hp.p, hp.beta, hp.gamma);
      return make_result(name, {{"beta", Relation::info, 0, hp.beta},
                                {"gamma", Relation::info, 0, hp.gamma},
                                {"gamma - max{1, beta, 2 - beta p}", Relation::at_least, 0.0, r.s1},
                                {"8/N - gamma^2 (p-1)/(gamma-beta)", Relation::at_least, 0.0, r.s2},
                                {"alpha1", Relation::at_least, 0.0, hp.alpha1}});
    }

  if (name == "blowup")
    {
      const auto &          traj = ctx.trajectory();
      std::vector<Quantity> rows;
      const bool            detected = traj.blowup.has_value();
      rows.push_back({"blow-up detected (1 = yes)", Relation::at_least, 1.0, detected ? 1.0 : 0.0});
      const double T = detected ? traj.blowup->T_star_estimate : nan;
      if (cfg.expect.T_star)
        {
          rows.push_back({"T* estimate", Relation::at_most, *cfg.expect.T_star + cfg.expect.T_star_tolerance, T});
          rows.push_back({"T* estimate", Relation::at_least, *cfg.expect.T_star - cfg.expect.T_star_tolerance, T});
        }
      else
        rows.push_back({"T* estimate", Relation::info, 0, T});
      rows.push_back({"max u at stop", Relation::info, 0, traj.max_u.back()});
      return make_result(name, rows, detected ? traj.blowup->method : "no blow-up before t_end");
    }

  if (name == "jensen")
    {
      const double tol = heatflow::linear_flow_tolerance(ctx.u0, ctx.M, cfg.flow);
      const auto   r   = heatflow::jensen_check(ctx.trajectory(), ctx.M, cfg.flow.reaction, tol);
      std::vector<Quantity> rows{{"min D / max(1, f(mean))", Relation::at_least, -tol, r.min_D_relative},
                                 {"Jensen bound on T*", Relation::info, 0, r.T_bound}};
      if (r.T_star)
        rows.push_back({"detected T*", Relation::at_most, r.T_bound + r.time_tolerance, *r.T_star});
      return make_result(name, rows);
    }

  if (name == "min_tracker")
    {
      const double tol = heatflow::linear_flow_tolerance(ctx.u0, ctx.M, cfg.flow);
      const auto   r   = heatflow::min_tracker_check(ctx.trajectory(), cfg.flow.reaction, tol);
      return make_result(name, {{"min (phi' - f(phi)) / max(1, |f(phi)|)", Relation::at_least, -tol, r.min_residual},
                                {"time-reversed max", Relation::info, 0, r.backward_max}});
    }

  if (name == "identity_3_2" || name == "identity_3_7")
    {
      const auto & series = ctx.monitor().series;
      double       worst  = 0.0;
      for (const auto & e : series.entries)
        worst = std::max(worst, name == "identity_3_2" ? e.residual_3_2 : e.residual_3_7);
      if (series.entries.empty())
        return {name, Status::vacuous, {}, "no monitor frames"};
      return make_result(name, {{"max residual", Relation::at_most, cfg.harnack.identity_tolerance, worst}});
    }

  if (name == "inequality_3_11")
    {
      if (!ctx.M.structured())
        throw UnsupportedManifold("inequality_3_11 runs on structured grids only");
      const auto & series = ctx.monitor().series;
      double       worst  = std::numeric_limits<double>::infinity();
      for (const auto & e : series.entries)
        worst = finite_min(worst, e.min_slack_3_11);
      const double tol = cfg.harnack.tolerance_factor * ctx.linear_residual();
      if (series.entries.empty())
        return {name, Status::vacuous, {}, "no monitor frames"};
      return make_result(name, {{"min slack", Relation::at_least, -tol, worst},
                                {"linear-flow residual", Relation::info, 0, ctx.linear_residual()}});
    }

  if (name == "lemma_4_1")
    {
      const auto & series = ctx.monitor().series;
      double       worst  = nan;
      for (const auto & e : series.entries)
        worst = finite_min(worst, e.min_slack_4_1);
      if (std::isnan(worst))
        return {name, Status::vacuous, {{"nodes with rho > 0", Relation::info, 0, 0.0}}, "rho <= 0 at every node"};
      const double tol = cfg.harnack.tolerance_factor * ctx.linear_residual();
      return make_result(name, {{"min slack", Relation::at_least, -tol, worst}});
    }

  if (name == "ode_comparison")
    {
      const auto & series = ctx.monitor().series;
      double       worst  = nan;
      for (const auto & e : series.entries)
        worst = finite_min(worst, e.ode_slack);
      if (std::isnan(worst))
        return {name, Status::vacuous, {}, "no nodes with rho <= 0"};
      return make_result(name, {{"min relative slack", Relation::at_least, -1e-9, worst}});
    }

  if (name == "harnack_trend")
    {
      const auto & series = ctx.linear_monitor().series;
      const auto   r      = harnack::harnack_trend_check(series, cfg.harnack.C_lin, ctx.M.K(), cfg.harnack.trend_tolerance);
      auto res = make_result(name, {{"fitted asymptote", Relation::at_most, r.bound, r.asymptote},
                                    {"K", Relation::info, 0, ctx.M.K()},
                                    {"final sup rho", Relation::info, 0, r.sup_rho.back()}});
      return res;
    }

  if (name == "harnack_nonlinear")
    {
      const auto & series = ctx.monitor().series;
      if (series.entries.size() < 4)
        return {name, Status::vacuous, {}, "too few monitor frames"};
      const auto r = harnack::harnack_trend_check(series, cfg.harnack.C0, ctx.M.K(), cfg.harnack.trend_tolerance);
      if (r.status == harnack::TrendStatus::blowup_regime)
        return make_result(name, {{"final sup rho", Relation::info, 0, r.sup_rho.back()}},
                           std::string(harnack::to_string(r.status)));
      return make_result(name, {{"fitted asymptote", Relation::at_most, r.bound, r.asymptote}});
    }

  if (name == "bochner")
    {
      const double k = 2.0 * M_PI / ctx.M.grid().period_lengths[0];
      const auto   U = ctx.M.sample([&](const auto & row) { return std::sin(k * row[0]); });
      return make_result(name, {{"max residual", Relation::at_most, 0.01, geometry::bochner_residual(ctx.M, U)}});
    }

  if (name == "operator_contracts")
    {
      const auto c = geometry::operator_contracts(ctx.M, cfg.random_seed);
      return make_result(name, {{"constant kernel", Relation::at_most, 1e-10, c.constant_kernel},
                                {"self-adjointness", Relation::at_most, 1e-10, c.self_adjointness},
                                {"max Rayleigh quotient", Relation::at_most, 1e-12, c.max_rayleigh},
                                {"Green identity", Relation::at_most, 1e-10, c.green}});
    }

  if (name == "scaling")
    {
      std::vector<Quantity> rows;
      for (double p : {2.0, 3.0})
        for (double k : {0.5, 1.0, 2.0})
          rows.push_back({fmt::format("p = {}, k = {}", p, k), Relation::at_most, 1e-12,
                          heatflow::scaling_symmetry_check(p, k)});
      return make_result(name, rows);
    }

  if (name == "steady")
    {
      const auto & r  = ctx.steady_result();
      const double p  = cfg.steady.p;
      const auto   cs = steady::constraint_state(r.u_inf, ctx.M, p);
      const double up = ctx.M.integrate(ctx.M.field(r.u_inf.values.array().abs().pow(p).matrix()));
      std::vector<Quantity> rows{
        {"converged (1 = yes)", Relation::at_least, 1.0, r.converged ? 1.0 : 0.0},
        {"iterations", Relation::info, 0, double(r.iterations)},
        {"energy", Relation::info, 0, r.energy},
        {"|int |u|^{p+1} - 1|", Relation::at_most, 1e-10, std::abs(cs.c1 - 1.0)},
        {"|int |u|^{p-1} u| / int |u|^p", Relation::at_most, 1e-10, std::abs(cs.c2) / up},
        {"lambda", Relation::at_least, 0.0, r.lambda},
        {"|mu| / lambda", Relation::at_most, 1e-6, std::abs(r.mu) / r.lambda},
        {"|lambda - 2E| / lambda", Relation::at_most, 1e-8, std::abs(r.lambda - 2.0 * r.energy) / r.lambda},
        {"PDE residual", Relation::at_most, 5e-3, r.pde_residual},
        {"min u", Relation::at_most, 0.0, r.u_inf.values.minCoeff()},
        {"max u", Relation::at_least, 0.0, r.u_inf.values.maxCoeff()}};
      if (ctx.M.kind() == geometry::ManifoldKind::flat_torus && N == 1)
        {
          const auto oracle = steady::oracle_1d(p, ctx.M.grid().period_lengths[0]);
          const auto a      = steady::align_to_oracle(r.U, ctx.M, oracle);
          rows.push_back({"oracle amplitude", Relation::info, 0, oracle.amplitude()});
          rows.push_back({"L2 distance to oracle", Relation::at_most, 1e-2, a.distance});
        }
      return make_result(name, rows);
    }

  throw InvalidArgument("unknown check name '" + name + "'");
}

} // namespace

RunReport run(const ExperimentConfig & config)
{
  config.validate();
  Context   ctx(config);
  RunReport report;
  for (const auto & name : config.checks)
    report.checks.push_back(run_check(name, ctx));

  if (config.output_dir.empty())
    return report;

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  if (ctx.has_trajectory())
    {
      const auto & traj = ctx.trajectory();
      io::write_trajectory_csv(dir / "trajectory.csv", traj);
      report.files.push_back("trajectory.csv");
      io::write_field_csv(dir / "u_final.csv", ctx.M, ctx.M.field(traj.snapshots.back().values));
      report.files.push_back("u_final.csv");
    }
  if (ctx.has_monitor())
    {
      io::write_monitor_csv(dir / "monitor.csv", ctx.monitor().series);
      report.files.push_back("monitor.csv");
    }
  if (ctx.has_linear_monitor())
    {
      io::write_monitor_csv(dir / "monitor_linear.csv", ctx.linear_monitor().series);
      report.files.push_back("monitor_linear.csv");
    }
  if (ctx.has_steady())
    {
      const auto & r = ctx.steady_result();
      if (r.lambda > 0.0)
        {
          io::write_field_csv(dir / "steady_profile.csv", ctx.M, r.U);
          report.files.push_back("steady_profile.csv");
        }
    }

  json summary = json::object();
  for (const auto & c : report.checks)
    {
      json rows = json::array();
      for (const auto & q : c.rows)
        rows.push_back({{"quantity", q.name},
                        {"relation", q.relation == Relation::at_most    ? "<="
                                     : q.relation == Relation::at_least ? ">="
                                                                        : "info"},
                        {"bound", io::format_number(q.bound)},
                        {"measured", io::format_number(q.measured)}});
      summary[c.name] = {{"status", to_string(c.status)}, {"rows", rows}, {"note", c.note}};
    }
  report.files.push_back("summary.json");
  report.files.push_back("report.md");
  io::write_text(dir / "summary.json", summary.dump(2) + "\n");
  io::write_text(dir / "report.md", report_render(report));
  return report;
}

Calibration calibrate(int nodes_per_axis, double phi_amplitude)
{
  const auto M = geometry::conformal_torus_sine(nodes_per_axis, 2.0 * M_PI, phi_amplitude);
  if (!(M.K() > 0.0))
    throw InvalidArgument("calibration needs a manifold with K > 0");
  Calibration out;
  out.K = M.K();

  const auto u_lin = M.sample([](const auto & row) { return 2.0 + std::sin(row[0]); });
  heatflow::FlowConfig lin;
  lin.t_end = 2.0;
  auto lin_series = harnack::monitor_flow(u_lin, M, lin, harnack::linear_params(2, 2.0), true, 5).series;
  out.C_lin       = harnack::calibrate_constant(std::span(&lin_series, 1));

  const double         p   = 1.5;
  const auto           u_n = M.sample([](const auto & row) { return 0.2 + 0.05 * std::sin(row[0]); });
  heatflow::FlowConfig nl;
  nl.reaction = {heatflow::ReactionKind::power_positive, p};
  nl.t_end    = 2.0;
  auto nl_series = harnack::monitor_flow(u_n, M, nl, feasibility::find_params(2, p), false, 5).series;
  out.C0         = harnack::calibrate_constant(std::span(&nl_series, 1));
  return out;
}

} // namespace liyau::experiment
