#include <liyau/io.hpp>

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace liyau::io {

std::string format_number(double x)
{
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  if (x == 0.0)
    return "0";
  return fmt::format("{:.6g}", x);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path & path)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot open " + path.string() + " for writing");
  return out;
}

} // namespace

void write_field_csv(const std::filesystem::path & path, const geometry::DiscreteManifold & M,
                     const geometry::ScalarField & f)
{
  M.check(f);
  auto        out  = open_for_write(path);
  const auto &  X  = M.coordinates();
  static const char * axes[] = {"x", "y", "z"};
  out << "node";
  for (Eigen::Index c = 0; c < X.cols(); ++c)
    out << ',' << axes[c];
  out << ",value\n";
  for (Eigen::Index i = 0; i < f.size(); ++i)
    {
      out << i;
      for (Eigen::Index c = 0; c < X.cols(); ++c)
        out << ',' << format_number(X(i, c));
      out << ',' << format_number(f[i]) << '\n';
    }
}

void write_trajectory_csv(const std::filesystem::path & path, const heatflow::Trajectory & traj)
{
  auto out = open_for_write(path);
  out << "t,max_u,min_u,mean_u,energy\n";
  for (std::size_t i = 0; i < traj.size(); ++i)
    out << format_number(traj.times[i]) << ',' << format_number(traj.max_u[i]) << ','
        << format_number(traj.min_u[i]) << ',' << format_number(traj.mean_u[i]) << ','
        << format_number(traj.energy[i]) << '\n';
}

void write_monitor_csv(const std::filesystem::path & path, const harnack::MonitorSeries & series)
{
  auto out = open_for_write(path);
  out << "t,sup_rho,inf_rho,min_slack_3_11,residual_3_2,residual_3_7,clamped_count\n";
  for (const auto & e : series.entries)
    out << format_number(e.t) << ',' << format_number(e.sup_rho) << ',' << format_number(e.inf_rho) << ','
        << format_number(e.min_slack_3_11) << ',' << format_number(e.residual_3_2) << ','
        << format_number(e.residual_3_7) << ',' << e.clamped_count << '\n';
}

void write_text(const std::filesystem::path & path, const std::string & text)
{
  auto out = open_for_write(path);
  out << text;
}

std::string read_text(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace liyau::io
