#pragma once

// Config parsing, run-directory handling and the subcommands behind the
// `vproof` executable.

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vproof/corpus.hpp"
#include "vproof/corrector.hpp"
#include "vproof/policy.hpp"
#include "vproof/verifier.hpp"

namespace vproof::app {

/// Carries the process exit code: 1 for validation errors, 2 for I/O.
class AppError : public std::runtime_error {
 public:
  AppError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

inline AppError validation_error(const std::string& what) { return AppError(1, what); }
inline AppError io_error(const std::string& what) { return AppError(2, what); }

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t corpus_size = 6000;
  int workers = 1;
  std::string output_dir = "run";
  GenBounds bounds;
  InjectionConfig injection;
  SplitConfig split;
  VerifierConfig verifier;
  TrainConfig train;
  CorrectionConfig correct;
  /// held-out goals for the policy rows of the report
  std::size_t eval_goals = 600;

  /// Propagates seed and workers into the nested configs and validates them.
  void finalize();
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// `section.key = value` for every key, sorted; workers and output_dir are
/// left out so the text does not depend on where or how wide a run goes.
std::string canonical_config(const RunConfig& cfg);

/// VPROOF_RUN_DIR when set and non-empty, else the configured output dir.
std::filesystem::path resolve_run_dir(const RunConfig& cfg);

struct Options {
  std::filesystem::path run_dir;
  /// recompute even when outputs exist
  bool overwrite = false;
  std::ostream* log = nullptr;
};

struct Paths {
  std::filesystem::path root;
  std::filesystem::path corpus() const { return root / "corpus" / "corpus.jsonl"; }
  std::filesystem::path split_corpus() const { return root / "corpus" / "split.jsonl"; }
  std::filesystem::path checkpoint() const { return root / "checkpoints" / "policy.ckpt"; }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path traces() const { return root / "traces"; }
  std::filesystem::path manifest() const { return root / "manifest"; }
};

void cmd_gen(const RunConfig& cfg, const Options& opt);
void cmd_split(const RunConfig& cfg, const Options& opt);
/// Empty path means the run's split corpus, or the unsplit one if absent.
void cmd_verify(const RunConfig& cfg, const Options& opt, std::filesystem::path corpus = {});
void cmd_train(const RunConfig& cfg, const Options& opt);
void cmd_correct(const RunConfig& cfg, const Options& opt, std::filesystem::path corpus = {},
                 std::filesystem::path checkpoint = {});
void cmd_report(const RunConfig& cfg, const Options& opt);
void cmd_bench(const RunConfig& cfg, const Options& opt);

std::string read_file(const std::filesystem::path& p);
/// Writes through a temporary file and a rename.
void write_file(const std::filesystem::path& p, std::string_view text);

}  // namespace vproof::app
