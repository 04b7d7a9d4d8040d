// Command line front end: designs and verifies reflection-invisible obstacle
// swarms in a closed rectangular waveguide. See README.md for the config schema.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "guidecloak/guidecloak.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Path to the JSON config")->required();
  cmd->add_option("--out", args.out_path, "Write the report here instead of stdout");
  cmd->add_option("--format", args.format, "Report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", args.seed, "Override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

// Flatten a report into key,value lines for commands without a natural table.
std::string flatten_csv(const guidecloak::ordered_json& j, const std::string& prefix = "") {
  std::string out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      out += flatten_csv(*it, key);
    else
      out += key + "," + it->dump() + "\n";
  }
  return out;
}

int run_command(const std::string& name, const CommonArgs& args) {
  guidecloak::ExperimentConfig cfg = guidecloak::load_config(args.config_path);
  if (args.seed_set) {
    cfg.seed = args.seed;
    cfg.resolved["seed"] = args.seed;
  }
  const guidecloak::RunReport rep = guidecloak::run(name, cfg);

  std::string text;
  if (args.format == "csv")
    text = name == "sweep" ? rep.csv : flatten_csv(rep.doc["outputs"]);
  else
    text = rep.doc.dump(2) + "\n";

  if (args.out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(args.out_path);
    if (!out) throw guidecloak::ConfigError("cannot open output file: " + args.out_path);
    out << text;
  }
  return guidecloak::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflection-invisible obstacle swarms in closed waveguides"};
  app.set_version_flag("--version", guidecloak::version_string);
  app.require_subcommand(1);

  const char* names[] = {"modes",       "scatter",     "design-position", "design-size",
                         "design-multi", "sweep",       "bound"};
  const char* descs[] = {
      "List the transverse eigenbasis and the propagating/evanescent split",
      "Solve the point-scatterer model and report the scattering matrix",
      "Design a two-fly swarm, tuning one position for zero reflection",
      "Design a monomodal swarm, tuning two capacities for zero reflection",
      "Design a multimodal swarm cancelling every reflection entry",
      "Sweep eps and tabulate the expansion remainders",
      "Report the slab transmission bound and the comparison spectrum"};

  CommonArgs args;
  for (int i = 0; i < 7; ++i) add_common(app.add_subcommand(names[i], descs[i]), args);

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run_command(name, args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return guidecloak::exit_code_for(e);
  }
}
