#pragma once

#include <liyau/geometry.hpp>
#include <liyau/harnack.hpp>
#include <liyau/heatflow.hpp>

#include <filesystem>
#include <string>

namespace liyau::io {

/// Six significant digits, the precision of every report and CSV value.
std::string format_number(double x);

/// node, coordinate columns, value
void write_field_csv(const std::filesystem::path & path, const geometry::DiscreteManifold & M,
                     const geometry::ScalarField & f);

/// t, max_u, min_u, mean_u, energy
void write_trajectory_csv(const std::filesystem::path & path, const heatflow::Trajectory & traj);

/// t, sup_rho, inf_rho, min_slack_3_11, residual_3_2, residual_3_7, clamped_count
void write_monitor_csv(const std::filesystem::path & path, const harnack::MonitorSeries & series);

void write_text(const std::filesystem::path & path, const std::string & text);
std::string read_text(const std::filesystem::path & path);

} // namespace liyau::io
