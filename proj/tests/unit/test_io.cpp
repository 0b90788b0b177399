#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pvi/io.hpp"
#include "pvi/timeloop.hpp"

using namespace pvi;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("config files override experiment defaults") {
    const ConfigFile c = parse_config_text(
        "# comment\nexperiment = ex5_1\ndt = 0.01\nT = 0.2\nsamples = 0.1, 0.2\n"
        "mesh = interval 0 1 20\ntol = 1e-8\nmax_iter = 12\nmode = implicit\nlump_mass = true\n");
    CHECK(c.experiment == "ex5_1");
    CHECK(c.run.dt == 0.01);
    CHECK(c.run.final_time == 0.2);
    CHECK(c.run.sample_times == std::vector<double>{0.1, 0.2});
    CHECK(c.run.mesh.kind == MeshSource::Kind::Interval);
    CHECK(c.run.mesh.cells == 20);
    CHECK(c.run.solver.tol == 1e-8);
    CHECK(c.run.solver.max_iter == 12);
    CHECK(c.run.solver.mode == CouplingMode::FullyImplicit);
    CHECK(c.run.lump_mass);
  }

  TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config_text("dt = 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("experiment = ex5_1\ndtt = 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("experiment = ex5_1\ndt = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("experiment = nope\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("experiment = ex5_1\nmode = sideways\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("experiment = ex5_1\njust text\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);
  }

  TEST_CASE("mesh sources") {
    const MeshSource r = MeshSource::parse("rectangle -1 1 -1 1 20");
    CHECK(r.kind == MeshSource::Kind::Rectangle);
    CHECK(r.build().num_cells() == 800);
    CHECK(MeshSource::parse(r.describe()).describe() == r.describe());
    CHECK_THROWS_AS(MeshSource::parse("sphere 1"), ConfigError);
  }

  TEST_CASE("VTK output") {
    const auto mesh = generate_rectangle({0, 1}, {0, 1}, 1);
    Capture c{3, 0.5, Eigen::VectorXd::Constant(4, 0.1), Eigen::VectorXd::Zero(4),
              Eigen::VectorXd::Constant(4, 1.0)};
    const std::string vtk = format_vtk(mesh, c);
    CHECK(vtk.rfind("# vtk DataFile Version", 0) == 0);
    CHECK(vtk.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(vtk.find("POINTS 4 double") != std::string::npos);
    CHECK(vtk.find("CELLS 2 8") != std::string::npos);
    CHECK(vtk.find("CELL_TYPES 2\n5\n5\n") != std::string::npos);
    CHECK(vtk.find("POINT_DATA 4") != std::string::npos);
    for (const char* name : {"SCALARS B ", "SCALARS N ", "SCALARS Lambda "})
      CHECK(vtk.find(name) != std::string::npos);

    const auto line = generate_interval(0, 1, 2);
    Capture l{0, 0, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)};
    CHECK(format_vtk(line, l).find("CELL_TYPES 2\n3\n3\n") != std::string::npos);
  }

  TEST_CASE("series CSV and repeatable files") {
    Experiment e = builtin_experiment("ex5_1");
    e.run.final_time = 0.02;
    e.run.sample_times = {0.02};
    const auto mesh = e.run.mesh.build();
    const Trajectory t = run(e.model, mesh, e.run);
    const std::string csv = format_series_csv(t);
    CHECK(csv.rfind("step,t,total_B,total_N,active_nodes,newton_iters,residual,clamp_count,dn_sum\n",
                    0) == 0);
    // Header plus the initial state and four steps.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);

    const auto dir = std::filesystem::temp_directory_path() / "pvi_io_test";
    std::filesystem::remove_all(dir);
    write_series_csv(dir / "a" / "series.csv", t);
    write_vtk(dir / "a" / "state.vtk", mesh, t.captures.front());
    const Trajectory t2 = run(e.model, mesh, e.run);
    write_series_csv(dir / "b" / "series.csv", t2);
    write_vtk(dir / "b" / "state.vtk", mesh, t2.captures.front());
    CHECK(read_file(dir / "a" / "series.csv") == read_file(dir / "b" / "series.csv"));
    CHECK(read_file(dir / "a" / "state.vtk") == read_file(dir / "b" / "state.vtk"));
    std::filesystem::remove_all(dir);
  }
}
