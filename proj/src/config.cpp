#include "pvi/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pvi/model.hpp"

#ifndef PVI_DEFAULT_DATA_DIR
#define PVI_DEFAULT_DATA_DIR "data/meshes"
#endif

namespace pvi {

MeshSource MeshSource::interval(double a, double b, int n) {
  MeshSource s;
  s.kind = Kind::Interval;
  s.x_range = {a, b};
  s.cells = n;
  return s;
}

MeshSource MeshSource::rectangle(std::array<double, 2> xr,
                                 std::array<double, 2> yr, int m) {
  MeshSource s;
  s.kind = Kind::Rectangle;
  s.x_range = xr;
  s.y_range = yr;
  s.cells = m;
  return s;
}

MeshSource MeshSource::file(std::filesystem::path p) {
  MeshSource s;
  s.kind = Kind::File;
  s.path = std::move(p);
  return s;
}

MeshSource MeshSource::parse(const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  auto fail = [&]() -> MeshSource {
    throw ConfigError("cannot parse mesh source '" + text +
                      "' (expected 'interval a b n', 'rectangle x0 x1 y0 y1 m' "
                      "or 'file PATH')");
  };
  if (kind == "interval") {
    double a, b;
    int n;
    if (!(in >> a >> b >> n)) return fail();
    return interval(a, b, n);
  }
  if (kind == "rectangle") {
    double x0, x1, y0, y1;
    int m;
    if (!(in >> x0 >> x1 >> y0 >> y1 >> m)) return fail();
    return rectangle({x0, x1}, {y0, y1}, m);
  }
  if (kind == "file") {
    std::string rest;
    std::getline(in, rest);
    const auto first = rest.find_first_not_of(" \t");
    if (first == std::string::npos) return fail();
    return file(rest.substr(first));
  }
  return fail();
}

std::string MeshSource::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Interval:
      out << "interval " << x_range[0] << ' ' << x_range[1] << ' ' << cells;
      break;
    case Kind::Rectangle:
      out << "rectangle " << x_range[0] << ' ' << x_range[1] << ' ' << y_range[0]
          << ' ' << y_range[1] << ' ' << cells;
      break;
    case Kind::File:
      out << "file " << path.string();
      break;
  }
  return out.str();
}

SimplicialMesh MeshSource::build() const {
  switch (kind) {
    case Kind::Interval:
      return generate_interval(x_range[0], x_range[1], cells);
    case Kind::Rectangle:
      return generate_rectangle(x_range, y_range, cells);
    case Kind::File:
      return import_mesh(path);
  }
  throw ConfigError("unknown mesh source kind");
}

std::filesystem::path data_directory() {
  if (const char* env = std::getenv("PVI_DATA_DIR"); env && *env) return env;
  return PVI_DEFAULT_DATA_DIR;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int d = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace

ConfigFile parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(no) + ": expected 'key = value'");
    entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }

  ConfigFile cfg;
  for (const auto& [k, v] : entries)
    if (k == "experiment") cfg.experiment = v;
  if (cfg.experiment.empty())
    throw ConfigError("config must name an experiment (key 'experiment')");
  try {
    cfg.run = builtin_experiment(cfg.experiment).run;
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }

  for (const auto& [k, v] : entries) {
    if (k == "experiment") continue;
    if (k == "mesh") {
      cfg.run.mesh = MeshSource::parse(v);
    } else if (k == "dt") {
      cfg.run.dt = to_double(k, v);
    } else if (k == "T") {
      cfg.run.final_time = to_double(k, v);
    } else if (k == "samples") {
      cfg.run.sample_times.clear();
      std::string item;
      std::istringstream list(v);
      while (std::getline(list, item, ','))
        if (!trim(item).empty()) cfg.run.sample_times.push_back(to_double(k, trim(item)));
    } else if (k == "tol") {
      cfg.run.solver.tol = to_double(k, v);
    } else if (k == "max_iter") {
      cfg.run.solver.max_iter = to_int(k, v);
    } else if (k == "mode") {
      if (v == "lagged")
        cfg.run.solver.mode = CouplingMode::TimeLagged;
      else if (v == "implicit")
        cfg.run.solver.mode = CouplingMode::FullyImplicit;
      else
        throw ConfigError("key 'mode': expected 'lagged' or 'implicit', got '" + v + "'");
    } else if (k == "lump_mass") {
      cfg.run.lump_mass = to_bool(k, v);
    } else {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace pvi
