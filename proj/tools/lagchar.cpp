// lagchar: command-line front end. Exit codes: 0 all checks pass, 1 a
// numeric check failed, 2 the configuration (or command line) is invalid.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lagchar/report.hpp"

namespace {

using namespace lagchar;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "scenario file (TOML)")->required();
  cmd->add_option("-o,--out", c.out, "output directory (default: the scenario's 'out')");
  cmd->add_option("--seed", c.seed, "override the ensemble seed");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("-q,--quiet", c.quiet, "only print the verdict");
}

Scenario load(const Common& c) {
  Scenario sc = load_scenario_file(c.config);
  if (c.seed) sc.grid.seed = *c.seed;
  if (c.threads) sc.threads = *c.threads;
  if (!c.out.empty()) sc.out_dir = c.out;
  return sc;
}

int finish(const ReportBundle& b, const Scenario& sc, const Common& c) {
  b.write(sc.out_dir);
  if (!c.quiet) {
    for (const auto& m : b.metrics) {
      if (m.relation == "info") {
        std::printf("  info  %-22s %-44s %.6g\n", m.check.c_str(), m.name.c_str(), m.value);
      } else {
        std::printf("  %s  %-22s %-44s %.6g %s %.6g\n", m.pass ? "pass" : "FAIL",
                    m.check.c_str(), m.name.c_str(), m.value, m.relation.c_str(), m.tolerance);
      }
    }
  }
  const auto bad = b.failures();
  std::printf("%s: %s (%zu checks failed), report in %s\n", sc.name.c_str(),
              bad.empty() ? "PASS" : "FAIL", bad.size(), sc.out_dir.c_str());
  return bad.empty() ? 0 : 1;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t next = s.find(',', pos);
    const std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + tok + "' in list '" + s + "'");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian representation and generalized characteristics for scalar conservation laws"};
  app.require_subcommand(1);

  Common common;
  auto* simulate_cmd = app.add_subcommand("simulate", "front tracking, weak residual, entropy production");
  auto* lagrangian_cmd = app.add_subcommand("lagrangian", "curve ensembles: pushforward, dissipation, no-crossing");
  auto* flux_cmd = app.add_subcommand("fluxcheck", "entropy flux across the configured surfaces");
  auto* char_cmd = app.add_subcommand("characteristic", "barrier construction and verification");
  auto* conv_cmd = app.add_subcommand("converge", "grid and mesh refinement study");
  auto* run_cmd = app.add_subcommand("run", "every check the scenario asks for");
  for (auto* cmd : {simulate_cmd, lagrangian_cmd, flux_cmd, char_cmd, conv_cmd, run_cmd}) {
    add_common(cmd, common);
  }

  std::vector<double> x0s;
  std::optional<int> levels;
  std::optional<double> t0;
  char_cmd->add_option("--x0", x0s, "starting point(s); default from the config");
  char_cmd->add_option("--levels", levels, "dyadic refinement levels")->check(CLI::PositiveNumber);
  char_cmd->add_option("--t0", t0, "starting time");

  std::string grids;
  std::string meshes;
  std::string probe;
  conv_cmd->add_option("--grids", grids, "comma-separated nx = nv values, e.g. 64,128,256");
  conv_cmd->add_option("--meshes", meshes, "comma-separated rarefaction meshes");
  conv_cmd->add_option("--probe", probe, "t,x point for the mesh study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Scenario sc = load(common);
    ReportBundle b = make_bundle(sc);

    if (run_cmd->parsed()) return finish(run_scenario(sc), sc, common);

    if (conv_cmd->parsed()) {
      ConvergeRequest req = sc.converge;
      if (!grids.empty()) {
        req.grids.clear();
        for (double g : parse_list(grids)) req.grids.push_back(static_cast<int>(g));
      }
      if (!meshes.empty()) req.meshes = parse_list(meshes);
      if (!probe.empty()) {
        const auto p = parse_list(probe);
        if (p.size() != 2) throw ConfigError("--probe takes t,x");
        req.probe = std::pair{p[0], p[1]};
      }
      const auto table = convergence_study(sc, req);
      std::filesystem::create_directories(sc.out_dir);
      table.csv().write(sc.out_dir);
      std::ofstream(std::filesystem::path(sc.out_dir) / "convergence.json")
          << json{{"scenario", sc.name}, {"rates", table.rates()}}.dump(2) << "\n";
      for (const auto* rows : {&table.grid_rows, &table.mesh_rows}) {
        for (const auto& r : *rows) {
          std::printf("  n=%-5d mesh=%-10.4g flux_gap=%-12.4g speed_res=%-12.4g push=%-12.4g trace_err=%.4g\n",
                      r.nx, r.mesh, r.flux_gap, r.speed_residual, r.pushforward, r.trace_error);
        }
      }
      std::printf("%s: rates %s, table in %s\n", sc.name.c_str(), table.rates().dump().c_str(),
                  sc.out_dir.c_str());
      return 0;
    }

    const FrontSolution sol = simulate(sc);
    check_solution(sc, sol, b);
    if (simulate_cmd->parsed()) return finish(b, sc, common);

    const Ensembles ens = build_ensembles(sc, sol);
    if (lagrangian_cmd->parsed()) {
      check_lagrangian(sc, sol, ens, b);
    } else if (flux_cmd->parsed()) {
      if (sc.surfaces.empty()) throw ConfigError("fluxcheck needs at least one [[surface]]");
      check_fluxes(sc, sol, ens, b);
    } else if (char_cmd->parsed()) {
      CharacteristicRequest req = sc.characteristic.value_or(CharacteristicRequest{});
      if (!sc.characteristic) req.levels = sc.defaults.levels;
      if (!x0s.empty()) req.x0 = x0s;
      if (levels) req.levels = *levels;
      if (t0) req.t0 = *t0;
      if (req.x0.empty()) throw ConfigError("characteristic needs --x0 or [characteristic] x0");
      if (!(req.t0 >= 0.0 && req.t0 < sc.horizon())) throw ConfigError("--t0 must lie in [0, T)");
      check_characteristics(sc, sol, ens, req, b);
    }
    return finish(b, sc, common);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const WindowError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
