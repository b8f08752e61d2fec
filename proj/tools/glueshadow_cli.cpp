#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "glueshadow/experiment.hpp"

namespace ex = glueshadow::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Gluing and pseudo-orbit shadowing experiments"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool quiet = false;
  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--seed", seed, "overrides perturbation.seed");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_flag("--quiet", quiet, "print nothing on success");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : ex::kConfigError;
  }

  std::ostringstream log;
  int rc = ex::kConfigError;
  try {
    auto cfg = ex::Config::load(config_path);
    if (seed) cfg.set("perturbation.seed", std::to_string(*seed));
    rc = ex::run(cfg, out_dir, log);
  } catch (const glueshadow::usage_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ex::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ex::kNumericalFailure;
  }
  if (!log.str().empty()) std::cerr << log.str();
  if (!quiet || rc != 0) {
    std::cout << (rc == 0 ? "pass" : "fail") << " (exit " << rc << "), results in " << out_dir << "/summary.csv\n";
  }
  return rc;
}
