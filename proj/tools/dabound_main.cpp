#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dabound/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dabound: domain-adaptation bound validation on finite-support transfers"};
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::string subcommand;
  long long seed = -1;
  int jobs = 0;
  bool no_plots = false;

  app.add_option("subcommand", subcommand,
                 "gen | estimate | bound | sweep | align | probe | meta (overrides config)");
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--set", overrides, "dotted-path override, e.g. --set gen.kind=mixup_swap");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "seed override");
  app.add_option("--jobs", jobs, "parallel workers for independent trials");
  app.add_flag("--no-plots", no_plots, "skip SVG artifacts");
  CLI11_PARSE(app, argc, argv);

  nlohmann::json root = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "validation error: cannot open config '" << config_path << "'\n";
      return 2;
    }
    try {
      in >> root;
    } catch (const std::exception& e) {
      std::cerr << "validation error: config parse: " << e.what() << "\n";
      return 2;
    }
  }

  try {
    if (!subcommand.empty()) root["subcommand"] = subcommand;
    for (const auto& ov : overrides) dab::apply_override(root, ov);
    if (!out_dir.empty()) root["out"] = out_dir;
    if (seed >= 0) root["seed"] = static_cast<std::uint64_t>(seed);
    if (jobs > 0) root["jobs"] = jobs;
    if (no_plots) root["emit_plots"] = false;
    if (const char* env = std::getenv("DABOUND_SEED")) root["seed"] = std::stoull(env);

    dab::RunConfig cfg = dab::parse_run_config(root);
    return dab::run(cfg);
  } catch (const dab::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  }
}
