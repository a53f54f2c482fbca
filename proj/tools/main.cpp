#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "app.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace vproof::app;

namespace {

/// Config of an existing run, read back from its manifest.
RunConfig config_from_manifest(const fs::path& run_dir) {
  const fs::path m = Paths{run_dir}.manifest();
  if (!fs::exists(m)) throw io_error("no manifest in " + run_dir.string() + "; pass --config");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(m));
  } catch (const nlohmann::json::parse_error& e) {
    throw validation_error("malformed manifest " + m.string() + ": " + e.what());
  }
  if (!j.contains("config") || !j["config"].is_string()) throw validation_error(m.string() + " records no config");
  std::string text;
  std::string section;
  // canonical form is `section.key = value`; regroup into sections
  std::istringstream in(j["config"].get<std::string>());
  for (std::string line; std::getline(in, line);) {
    const auto dot = line.find('.');
    if (dot == std::string::npos) continue;
    const std::string s = line.substr(0, dot);
    if (s != section) text += "[" + (section = s) + "]\n";
    text += line.substr(dot + 1) + "\n";
  }
  return parse_config(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifier-in-the-loop proof generation and correction toolkit"};
  app.require_subcommand(1);
  std::string config, corpus, checkpoint, run_dir_arg;
  bool overwrite = false;

  auto add = [&](const char* name, const char* help, bool needs_config) {
    CLI::App* c = app.add_subcommand(name, help);
    auto* o = c->add_option("-c,--config", config, "run configuration file")->check(CLI::ExistingFile);
    if (needs_config) o->required();
    c->add_flag("--overwrite", overwrite, "recompute and replace existing outputs");
    return c;
  };
  add("gen", "generate and annotate the corpus", true);
  add("split", "assign stratified train/val/test splits", true);
  add("verify", "batch-verify a corpus", true)->add_option("--corpus", corpus, "corpus file (default: the run's)");
  add("train", "curriculum PPO training of the proposer", true);
  auto* corr = add("correct", "run the correction loop over flawed test proofs", true);
  corr->add_option("--corpus", corpus, "corpus file (default: the run's split corpus)");
  corr->add_option("--checkpoint", checkpoint, "policy checkpoint (default: the run's)");
  add("bench", "gen, split, train, correct and report in one go", true);
  add("report", "metrics table and statistics for a run", false)
      ->add_option("run_dir", run_dir_arg, "run directory (default: VPROOF_RUN_DIR or the config's output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    Options opt;
    opt.overwrite = overwrite;
    opt.log = &std::cout;
    RunConfig cfg;
    if (!config.empty()) {
      cfg = load_config(config);
      opt.run_dir = run_dir_arg.empty() ? resolve_run_dir(cfg) : fs::path(run_dir_arg);
    } else {
      RunConfig probe;
      opt.run_dir = run_dir_arg.empty() ? resolve_run_dir(probe) : fs::path(run_dir_arg);
      cfg = config_from_manifest(opt.run_dir);
    }
    if (cmd == "gen") cmd_gen(cfg, opt);
    else if (cmd == "split") cmd_split(cfg, opt);
    else if (cmd == "verify") cmd_verify(cfg, opt, corpus);
    else if (cmd == "train") cmd_train(cfg, opt);
    else if (cmd == "correct") cmd_correct(cfg, opt, corpus, checkpoint);
    else if (cmd == "bench") cmd_bench(cfg, opt);
    else if (cmd == "report") cmd_report(cfg, opt);
  } catch (const AppError& e) {
    std::cerr << "vproof " << cmd << ": error: " << e.what() << "\n";
    return e.code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "vproof " << cmd << ": I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "vproof " << cmd << ": error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
