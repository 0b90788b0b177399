#pragma once

#include <filesystem>
#include <string>

#include "pvi/analysis.hpp"
#include "pvi/timeloop.hpp"

namespace pvi {

/// Legacy ASCII VTK unstructured grid with point scalars B, N and Lambda.
std::string format_vtk(const SimplicialMesh& mesh, const Capture& capture);
void write_vtk(const std::filesystem::path& path, const SimplicialMesh& mesh,
               const Capture& capture);

/// One row per time level:
/// step,t,total_B,total_N,active_nodes,newton_iters,residual,clamp_count,dn_sum
std::string format_series_csv(const Trajectory& trajectory);
void write_series_csv(const std::filesystem::path& path, const Trajectory& trajectory);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pvi
