#pragma once

// Corpus pipeline: valid proof generation, flaw injection, annotation,
// augmentation, stratified splitting and the line-delimited record format.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vproof/kernel.hpp"
#include "vproof/prooftree.hpp"

namespace vproof {

enum class ErrorMode : std::uint8_t { Hallucination, TopoOrder, IncompleteInduction, SemanticDrift };
inline constexpr std::array<ErrorMode, 4> kErrorModes = {ErrorMode::Hallucination, ErrorMode::TopoOrder,
                                                          ErrorMode::IncompleteInduction, ErrorMode::SemanticDrift};

std::string_view to_string(ErrorMode m);
std::optional<ErrorMode> parse_error_mode(std::string_view s);

enum class Split : std::uint8_t { Unassigned, Train, Val, Test };
std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct AnnotatedProof {
  std::uint64_t id = 0;
  ProofTree tree;
  bool valid = true;
  std::vector<ErrorMode> modes;
  std::optional<NodeId> injected_node;
  Split split = Split::Unassigned;
  std::uint64_t generator_seed = 0;
  std::uint64_t injection_seed = 0;

  /// "valid" or the mode names joined by '+'.
  std::string signature() const;
  friend bool operator==(const AnnotatedProof&, const AnnotatedProof&) = default;
};

/// sound lemmas: add_zero_l, add_succ_l, add_assoc, mul_zero_l, mul_one_l, mul_one_r
LemmaLibrary default_library();

struct GenBounds {
  int max_depth = 24;
  int max_nodes = 64;
  int max_goal_term_depth = 3;
  int max_rewrite_steps = 24;
  int max_numeral = 8;
  double induction_share = 0.30;
  int attempts = 400;
};

class GenerationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One valid proof from a seed. Throws GenerationFailure.
ProofTree generate_tree(std::uint64_t seed, const GenBounds& bounds, const LemmaLibrary& lib);

/// `count` valid proofs; proof i uses derive_seed(seed, i).
std::vector<AnnotatedProof> generate_valid(int count, std::uint64_t seed, const GenBounds& bounds,
                                           const LemmaLibrary& lib, int workers = 1);

class InjectionInapplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool injection_applicable(const ProofTree& t, ErrorMode mode);

/// Single-mode flaw injection. SemanticDrift draws its replacement statement
/// from `donors` (statements of other proofs). Throws InjectionInapplicable.
AnnotatedProof inject_error(const AnnotatedProof& p, ErrorMode mode, std::uint64_t seed, const LemmaLibrary& lib,
                            const std::vector<Statement>& donors);

/// Largest-remainder apportionment of `total` by `weights`; ties go to the
/// lower index. Weights are quantized to 1e-9 so the arithmetic is exact.
std::vector<long> apportion(long total, const std::vector<double>& weights);

struct InjectionConfig {
  double flawed_fraction = 0.23;
  std::array<double, 4> mode_weights = {0.29, 0.24, 0.32, 0.15};
  double augmentation_factor = 1.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Manifest {
  std::size_t size = 0;
  std::size_t base_flawed = 0;
  std::size_t augmented = 0;
  std::map<std::string, long> signature_counts;
  /// split name -> signature -> count
  std::map<std::string, std::map<std::string, long>> split_counts;
  std::vector<std::string> warnings;
};

struct CorpusBuild {
  std::vector<AnnotatedProof> items;
  Manifest manifest;
};

/// `size` base proofs of which round(flawed_fraction * size) are flawed, plus
/// augmentation_factor * flawed additional flawed proofs over fresh trees.
CorpusBuild build_corpus(const InjectionConfig& cfg, const GenBounds& bounds, std::size_t size,
                         const LemmaLibrary& lib, int workers = 1);

struct SplitConfig {
  std::array<double, 3> ratios = {0.70, 0.15, 0.15};
  std::uint64_t seed = 1;

  void validate() const;
};

struct SplitResult {
  std::map<std::string, std::map<std::string, long>> histogram;
  std::vector<std::string> warnings;
  /// max over signatures and splits of |fraction in split - fraction overall| * |split|
  double worst_scaled_deviation = 0.0;
};

/// Stratified by signature; within each stratum counts per split are the
/// floor or ceiling of the exact share.
SplitResult assign_splits(std::vector<AnnotatedProof>& corpus, const SplitConfig& cfg);

Manifest summarize(const std::vector<AnnotatedProof>& corpus);

class CorpusFormatError : public std::runtime_error {
 public:
  CorpusFormatError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr int kCorpusVersion = 1;

std::string to_record(const AnnotatedProof& p);
AnnotatedProof from_record(std::string_view line, std::size_t line_no = 1);
std::string save_corpus_text(const std::vector<AnnotatedProof>& corpus);
std::vector<AnnotatedProof> load_corpus_text(std::string_view text);
/// Throws std::runtime_error on I/O failure.
void save_corpus(const std::string& path, const std::vector<AnnotatedProof>& corpus);
std::vector<AnnotatedProof> load_corpus(const std::string& path);

std::string manifest_json(const Manifest& m, const InjectionConfig& cfg, const SplitConfig* split,
                          const GenBounds& bounds);

}  // namespace vproof
