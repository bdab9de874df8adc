#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdlab/cli.hpp"

namespace {

using qdlab::ConfigError;
using qdlab::Cx;

// Entries are "re" or "re:im", separated by commas.
std::vector<Cx> parse_complex_list(const std::string& text, const std::string& flag) {
  std::vector<Cx> out;
  std::stringstream ss(text);
  std::string item;
  auto number = [&](const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("flag " + flag + ": invalid number '" + s + "'");
    }
    return v;
  };
  while (std::getline(ss, item, ',')) {
    item = qdlab::cli::detail::trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      out.emplace_back(number(item), 0.0);
    } else {
      out.emplace_back(number(item.substr(0, colon)), number(item.substr(colon + 1)));
    }
  }
  if (out.empty()) throw ConfigError("flag " + flag + ": empty list");
  return out;
}

void apply_tol_flags(qdlab::cli::RunConfig& cfg, const std::vector<std::string>& tols) {
  for (const auto& t : tols) {
    const auto eq = t.find('=');
    const std::string key = eq == std::string::npos ? "global" : t.substr(0, eq);
    const std::string value = eq == std::string::npos ? t : t.substr(eq + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw ConfigError("flag --tol: invalid value '" + value + "'");
    }
    qdlab::cli::apply_tolerance(cfg.tol, key, v);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdlab: isometric deformations of complex quadrics, constructed and checked numerically"};
  app.require_subcommand(1);

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    return sub->add_option("--config", config_path, "Configuration file (key = value with [sections])");
  };

  auto* check = app.add_subcommand("check", "Run verification suites and write a JSON report");
  add_config(check);
  std::optional<std::uint64_t> seed;
  std::optional<int> samples, draws, n_flag;
  std::vector<std::string> tols, suites;
  std::string report;
  bool no_rebase = false, no_timestamp = false;
  check->add_option("--seed", seed, "Random seed");
  check->add_option("--samples", samples, "u samples per z draw")->check(CLI::PositiveNumber);
  check->add_option("--draws", draws, "Number of random z draws")->check(CLI::PositiveNumber);
  check->add_option("--n", n_flag, "Quadric dimension (a defaults to 1..n+1)");
  check->add_option("--tol", tols, "Tolerance override: VALUE, SUITE=VALUE or SUITE.CHECK=VALUE");
  check->add_option("--suite", suites, "Suites to run (comma separated, 'all' or names)");
  check->add_option("--report", report, "Report path, '-' for stdout");
  check->add_flag("--no-rebase", no_rebase, "Keep the lower integration limit at 0");
  check->add_flag("--no-timestamp", no_timestamp, "Omit the generation time from the report");

  auto* eval = app.add_subcommand("eval", "Print a point and its fundamental forms at u");
  add_config(eval);
  std::string u_text, z_text;
  eval->add_option("--u", u_text, "Parameters u^1..u^n, e.g. 0.5,0.7,0.9 or 0.5:0.1,...")->required();
  eval->add_option("--z", z_text, "Deformation parameters z_1..z_{n-1}");
  eval->add_flag("--no-rebase", no_rebase, "Keep the lower integration limit at 0");

  auto* mesh = app.add_subcommand("mesh", "Write the real n = 2 surface as CSV");
  add_config(mesh)->required();
  std::string mesh_out;
  mesh->add_option("--output", mesh_out, "CSV path (default: mesh.output or stdout)");
  mesh->add_flag("--no-rebase", no_rebase, "Keep the lower integration limit at 0");

  app.add_subcommand("explain", "List suites, the claims they test and default tolerances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qdlab::cli::kExitConfig;
  }

  try {
    qdlab::cli::RunConfig cfg;
    if (!config_path.empty()) cfg = qdlab::cli::load_config(config_path);
    if (no_rebase) cfg.rebase = false;

    if (app.got_subcommand("explain")) {
      std::cout << qdlab::cli::explain_text();
      return qdlab::cli::kExitPass;
    }
    if (app.got_subcommand("check")) {
      if (n_flag) {
        cfg.n = *n_flag;
        cfg.a.clear();
        cfg.z_values.clear();
      }
      if (seed) cfg.seed = *seed;
      if (samples) cfg.samples = *samples;
      if (draws) {
        cfg.z_draws = *draws;
        cfg.z_values.clear();
      }
      apply_tol_flags(cfg, tols);
      if (!suites.empty()) cfg.suites = qdlab::cli::parse_suite_list(suites);
      if (!report.empty()) cfg.report_path = report;
      if (no_timestamp) cfg.timestamp = false;
      return qdlab::cli::run(cfg, std::cout, std::cerr);
    }
    if (app.got_subcommand("eval")) {
      const auto u = parse_complex_list(u_text, "--u");
      std::optional<qdlab::DeformParams> p;
      if (!z_text.empty()) {
        p = qdlab::DeformParams{parse_complex_list(z_text, "--z"), qdlab::ZConvention::theorem1, cfg.rebase};
      } else if (!cfg.z_values.empty()) {
        p = qdlab::DeformParams{cfg.z_values.front(), qdlab::ZConvention::theorem1, cfg.rebase};
      }
      std::cout << qdlab::cli::eval_json(cfg.quadric(), u, p).dump(2) << "\n";
      return qdlab::cli::kExitPass;
    }
    if (app.got_subcommand("mesh")) {
      const std::string csv = qdlab::cli::export_mesh(cfg);
      const std::string path = mesh_out.empty() ? cfg.mesh.output : mesh_out;
      if (path.empty() || path == "-") {
        std::cout << csv;
      } else {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot write mesh file '" + path + "'");
        f << csv;
        std::cerr << "wrote " << path << "\n";
      }
      return qdlab::cli::kExitPass;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qdlab::cli::kExitConfig;
  } catch (const qdlab::Error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return qdlab::cli::kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qdlab::cli::kExitConfig;
  }
  return qdlab::cli::kExitConfig;
}
