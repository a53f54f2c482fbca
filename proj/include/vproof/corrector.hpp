#pragma once

// Self-correction: pick the first failing step, propose replacement subtrees
// for it, keep the first one the verifier accepts, repeat.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vproof/policy.hpp"
#include "vproof/prooftree.hpp"
#include "vproof/verifier.hpp"

namespace vproof {

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct FailureContext {
  std::string tree_id;
  NodeId node = -1;
  Reason reason = Reason::None;
  Statement obligation;
  Justification just;
  /// parent first, root last
  std::vector<NodeId> ancestors;
  /// failed node's subtree in post-order, back-edges excluded
  std::vector<NodeId> subtree;
  /// induction hypotheses in scope, innermost first
  std::vector<Statement> hyps;
  std::vector<std::string> visible_lemmas;
};

/// Post-order-first Invalid node of `report`. Throws ContractError when the
/// report has no Invalid node.
FailureContext extract_failure(const ProofTree& t, const VerifyReport& report, const LemmaLibrary& lib);

struct CorrectionConfig {
  int k = 8;
  int max_regen_depth = 12;
  int max_iterations = 6;
  std::uint64_t seed = 1;

  void validate() const;
};

struct RepairCandidate {
  Fragment fragment;
  /// "reuse" keeps the failed step and rebuilds its premises; "policy" comes
  /// from the ranked action list
  std::string origin;
  double score = 0.0;
};

/// At most cfg.k candidates; empty when nothing can be built.
std::vector<RepairCandidate> propose_repairs(const ProofTree& t, const FailureContext& ctx, const LemmaLibrary& lib,
                                             const PolicyParams& policy, const CorrectionConfig& cfg,
                                             int iteration = 0);

enum class CorrectionStatus { Repaired, Exhausted };
std::string_view to_string(CorrectionStatus s);

struct CorrectionOutcome {
  CorrectionStatus status = CorrectionStatus::Exhausted;
  ProofTree tree;
  int iterations = 0;
  std::vector<int> candidate_counts;
  /// edit distance from the input tree, set when Repaired
  std::optional<int> edpt;
  /// iter=<i> node=<id> reason=<code> candidates=<k> accepted=<idx|none>
  std::vector<std::string> trace;
};

CorrectionOutcome correct_loop(const ProofTree& t, const LemmaLibrary& lib, const PolicyParams& policy,
                               const CorrectionConfig& cfg, const VerifierConfig& vcfg = {});

}  // namespace vproof
