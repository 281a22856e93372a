// Command-line front end for the Li-Yau / semilinear heat flow toolkit.

#include <liyau/experiment.hpp>
#include <liyau/exponents.hpp>
#include <liyau/feasibility.hpp>
#include <liyau/harnack.hpp>
#include <liyau/io.hpp>
#include <liyau/steady.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>

namespace {

using namespace liyau;
using io::format_number;

struct Globals
{
  std::string                  config;
  std::string                  out;
  std::optional<std::uint64_t> seed;
  bool                         quiet = false;
};

experiment::ExperimentConfig load(const Globals & g)
{
  if (g.config.empty())
    throw InvalidArgument("--config is required for this subcommand");
  auto c = experiment::load_config(g.config);
  if (!g.out.empty())
    c.output_dir = g.out;
  if (g.seed)
    c.random_seed = *g.seed;
  return c;
}

void say(const Globals & g, const std::string & text)
{
  if (!g.quiet)
    std::cout << text;
}

nlohmann::json number_or_inf(double x)
{
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json("inf");
}

int cmd_exponents(const Globals & g, std::optional<int> N)
{
  const int      lo = N ? *N : 1, hi = N ? *N : 6;
  nlohmann::json rows = nlohmann::json::array();
  say(g, fmt::format("{:>3} {:>12} {:>12} {:>16} {:>12}\n", "N", "p_fujita", "p_star", "p_bidaut_veron", "p_sobolev"));
  for (int n = lo; n <= hi; ++n)
    {
      const auto t = exponents::exponent_table(n);
      say(g, fmt::format("{:>3} {:>12} {:>12} {:>16} {:>12}\n", n, format_number(t.p_fujita),
                         format_number(t.p_star), format_number(t.p_bidaut_veron), format_number(t.p_sobolev)));
      rows.push_back({{"N", n},
                      {"p_fujita", t.p_fujita},
                      {"p_star", t.p_star},
                      {"p_bidaut_veron", number_or_inf(t.p_bidaut_veron)},
                      {"p_sobolev", number_or_inf(t.p_sobolev)}});
    }
  say(g, rows.dump(2) + "\n");
  return 0;
}

nlohmann::json report_json(const feasibility::FeasibilityReport & r)
{
  nlohmann::json j = {{"feasible", r.feasible}, {"s1", r.s1}, {"s2", r.s2}};
  if (r.witness)
    j["witness"] = {{"beta", r.witness->first}, {"gamma", r.witness->second}};
  if (r.grid_steps > 0)
    {
      j["box"]         = {{"beta", {r.box.beta_lo, r.box.beta_hi}}, {"gamma", {r.box.gamma_lo, r.box.gamma_hi}}};
      j["grid_steps"]  = r.grid_steps;
      j["refinements"] = r.refinements;
    }
  return j;
}

int cmd_feasible(const Globals & g, int N, double p, std::optional<double> beta, std::optional<double> gamma,
                 bool scan)
{
  if (beta && gamma)
    {
      const auto r = feasibility::check_constraints(N, p, *beta, *gamma);
      say(g, report_json(r).dump(2) + "\n");
      return r.feasible ? 0 : 1;
    }
  if (scan)
    {
      const auto r = feasibility::feasible_scan(N, p);
      say(g, report_json(r).dump(2) + "\n");
      return r.feasible ? 0 : 1;
    }
  try
    {
      const auto     hp = feasibility::find_params(N, p);
      const auto     r  = feasibility::check_constraints(N, p, hp.beta, hp.gamma);
      nlohmann::json j  = report_json(r);
      j["params"] = {{"N", hp.N},          {"p", hp.p},           {"beta", hp.beta},     {"gamma", hp.gamma},
                     {"alpha", hp.alpha},  {"alpha_max", hp.alpha_max}, {"alpha1", hp.alpha1},
                     {"alpha2", hp.alpha2}, {"alpha3", hp.alpha3}};
      say(g, j.dump(2) + "\n");
      return 0;
    }
  catch (const feasibility::Infeasible & e)
    {
      say(g, nlohmann::json({{"feasible", false}, {"threshold", e.threshold()}, {"message", e.what()}}).dump(2) +
               "\n");
      return 1;
    }
}

int cmd_threshold(const Globals & g, int N, double tol)
{
  std::vector<feasibility::BisectionStep> trace;
  const double                            est = feasibility::threshold_estimate(N, tol, &trace);
  say(g, "step,lo,hi,mid,feasible\n");
  for (std::size_t i = 0; i < trace.size(); ++i)
    say(g, fmt::format("{},{},{},{},{}\n", i, format_number(trace[i].lo), format_number(trace[i].hi),
                       format_number(trace[i].mid), trace[i].feasible ? 1 : 0));
  const double p_star = exponents::exponent_table(N).p_star;
  say(g, fmt::format("# threshold={} closed_form={} difference={}\n", format_number(est), format_number(p_star),
                     format_number(est - p_star)));
  return 0;
}

int cmd_evolve(const Globals & g)
{
  const auto c    = load(g);
  const auto M    = c.manifold.build();
  const auto u0   = c.initial.sample(M, c.random_seed);
  const auto traj = heatflow::evolve(u0, M, c.flow);
  if (!c.output_dir.empty())
    {
      const std::filesystem::path dir(c.output_dir);
      io::write_trajectory_csv(dir / "trajectory.csv", traj);
      io::write_field_csv(dir / "u_final.csv", M, M.field(traj.snapshots.back().values));
    }
  say(g, fmt::format("steps={} t_final={} max_u={} stop={}\n", traj.size() - 1, format_number(traj.times.back()),
                     format_number(traj.max_u.back()), traj.stop_reason));
  if (traj.blowup)
    say(g, fmt::format("T*={}\n", format_number(traj.blowup->T_star_estimate)));
  return 0;
}

int cmd_harnack(const Globals & g)
{
  const auto c      = load(g);
  const auto M      = c.manifold.build();
  const auto u0     = c.initial.sample(M, c.random_seed);
  const bool linear = c.flow.reaction.kind == heatflow::ReactionKind::none;
  const auto params = linear ? harnack::linear_params(M.dimension(), c.harnack.gamma)
                      : c.harnack.beta
                        ? feasibility::complete_params(M.dimension(), c.flow.reaction.p, *c.harnack.beta,
                                                       c.harnack.gamma, c.harnack.C0)
                        : feasibility::find_params(M.dimension(), c.flow.reaction.p);
  const auto mon = harnack::monitor_flow(u0, M, c.flow, params, linear, c.harnack.monitor_stride, c.harnack.C0);
  if (!c.output_dir.empty())
    io::write_monitor_csv(std::filesystem::path(c.output_dir) / "monitor.csv", mon.series);

  int rc = 0;
  if (!linear && M.structured())
    {
      const double tol   = c.harnack.tolerance_factor * harnack::linear_flow_residual(u0, M, c.flow, params.gamma);
      double       worst = std::numeric_limits<double>::infinity();
      for (const auto & e : mon.series.entries)
        if (!std::isnan(e.min_slack_3_11))
          worst = std::min(worst, e.min_slack_3_11);
      say(g, fmt::format("min_slack_3_11={} tolerance={}\n", format_number(worst), format_number(tol)));
      if (worst < -tol)
        rc = 1;
    }
  double sup = -std::numeric_limits<double>::infinity();
  for (const auto & e : mon.series.entries)
    sup = std::max(sup, e.sup_rho);
  say(g, fmt::format("frames={} sup_rho={} K={} blowup={}\n", mon.series.entries.size(), format_number(sup),
                     format_number(M.K()), mon.series.blowup));
  return rc;
}

int cmd_steady(const Globals & g, const std::string & manifold, int n, double L, double p, const std::string & seed,
               int modes)
{
  geometry::DiscreteManifold M = manifold == "flat1"       ? geometry::flat_torus(1, n, L)
                                 : manifold == "flat2"     ? geometry::flat_torus(2, n, L)
                                 : manifold == "icosphere" ? geometry::icosphere(n)
                                                           : throw InvalidArgument("unknown manifold '" + manifold + "'");
  experiment::ExperimentConfig c;
  c.steady.p    = p;
  c.steady.seed = seed;
  c.random_seed = g.seed.value_or(0);
  c.validate();

  geometry::ScalarField u;
  if (seed == "odd_random")
    {
      std::mt19937_64                        rng(c.random_seed);
      std::uniform_real_distribution<double> dist(-0.1, 0.1);
      const double                           a = dist(rng), b = dist(rng);
      const double                           k = M.structured() ? 2.0 * M_PI / L : 1.0;
      u = M.sample([&](const auto & row) { return std::sin(k * row[0]) + a * std::sin(2 * k * row[0]) + b * std::sin(3 * k * row[0]); });
    }
  else
    {
      const double k = M.structured() ? 2.0 * M_PI / L : 1.0;
      u              = M.sample([&](const auto & row) {
        return M.structured() ? std::sin(k * row[0]) + 0.1 * std::cos(2 * k * row[0]) : row[2] + 0.1 * row[0];
      });
    }
  const auto r = steady::minimize_energy(M, p, u);

  nlohmann::json j = {{"energy", r.energy},      {"lambda", r.lambda},         {"mu", r.mu},
                      {"residual", r.pde_residual}, {"iterations", r.iterations}, {"converged", r.converged}};
  if (manifold == "flat1")
    {
      const auto oracle = steady::oracle_1d(p, L, modes);
      const auto a      = steady::align_to_oracle(r.U, M, oracle);
      j["oracle"]       = {{"amplitude", oracle.amplitude()},
                           {"normalized_energy", oracle.normalized_energy()},
                           {"l2_distance", a.distance},
                           {"shift", a.shift},
                           {"sign", a.sign}};
    }
  if (!g.out.empty())
    {
      const std::filesystem::path dir(g.out);
      io::write_field_csv(dir / "steady_profile.csv", M, r.U);
      io::write_text(dir / "steady.json", j.dump(2) + "\n");
    }
  say(g, j.dump(2) + "\n");
  return r.converged ? 0 : 1;
}

int cmd_run(const Globals & g)
{
  const auto c      = load(g);
  const auto report = experiment::run(c);
  say(g, experiment::report_render(report));
  return report.exit_code();
}

int cmd_calibrate(const Globals & g, int n, double amplitude)
{
  const auto c = experiment::calibrate(n, amplitude);
  say(g, fmt::format("K={} C0={} C_lin={}\n", format_number(c.K), format_number(c.C0), format_number(c.C_lin)));
  return 0;
}

} // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Li-Yau estimates and blow-up for semilinear heat flows on discrete manifolds"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "random seed");
  app.add_flag("--quiet", g.quiet, "suppress standard output");

  std::optional<int> exp_N;
  auto *             exp = app.add_subcommand("exponents", "critical exponents table");
  exp->add_option("--dim,--N", exp_N, "dimension (default: 1..6)");

  int                   fN = 1;
  double                fp = 2.0;
  std::optional<double> fbeta, fgamma;
  bool                  fscan = false;
  auto *                fea   = app.add_subcommand("feasible", "Harnack parameters for (N, p)");
  fea->add_option("--dim,--N", fN)->required();
  fea->add_option("--p", fp)->required();
  fea->add_option("--beta", fbeta);
  fea->add_option("--gamma", fgamma);
  fea->add_flag("--scan", fscan, "brute-force grid scan instead of the case analysis");

  int    tN   = 1;
  double ttol = 1e-3;
  auto * thr  = app.add_subcommand("threshold", "bisection for the feasibility threshold");
  thr->add_option("--dim,--N", tN)->required();
  thr->add_option("--tol", ttol);

  auto * evo = app.add_subcommand("evolve", "run a flow from --config");
  auto * har = app.add_subcommand("harnack", "monitor the Li-Yau quantity along a flow from --config");

  std::string sman  = "flat1", sseed = "sine";
  int         sn    = 256, smodes = 1;
  double      sL    = 2.0 * M_PI, sp = 3.0;
  auto *      ste   = app.add_subcommand("steady", "sign-changing steady state by constrained minimization");
  ste->add_option("--manifold", sman, "flat1 | flat2 | icosphere");
  ste->add_option("--n", sn, "nodes per axis (subdivision for the icosphere)");
  ste->add_option("--L", sL, "period length");
  ste->add_option("--p", sp);
  ste->add_option("--seed-profile", sseed, "sine | odd_random");
  ste->add_option("--modes", smodes, "oracle mode count");

  auto * run = app.add_subcommand("run", "execute the checks of --config and write report.md");

  int    cn = 32;
  double ca = 0.1;
  auto * cal = app.add_subcommand("calibrate", "empirical Harnack constants on a conformal torus");
  cal->add_option("--n", cn);
  cal->add_option("--amplitude", ca);

  for (auto * sub : {exp, fea, thr, evo, har, ste, run, cal})
    {
      sub->add_option("--config", g.config, "experiment config (JSON)");
      sub->add_option("--out", g.out, "output directory");
      sub->add_option("--seed", g.seed, "random seed");
      sub->add_flag("--quiet", g.quiet, "suppress standard output");
    }

  try
    {
      app.parse(argc, argv);
    }
  catch (const CLI::ParseError & e)
    {
      const int rc = app.exit(e);
      return rc == 0 ? 0 : 2;
    }

  try
    {
      if (*exp)
        return cmd_exponents(g, exp_N);
      if (*fea)
        return cmd_feasible(g, fN, fp, fbeta, fgamma, fscan);
      if (*thr)
        return cmd_threshold(g, tN, ttol);
      if (*evo)
        return cmd_evolve(g);
      if (*har)
        return cmd_harnack(g);
      if (*ste)
        return cmd_steady(g, sman, sn, sL, sp, sseed, smodes);
      if (*run)
        return cmd_run(g);
      if (*cal)
        return cmd_calibrate(g, cn, ca);
    }
  catch (const std::exception & e)
    {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  return 2;
}
