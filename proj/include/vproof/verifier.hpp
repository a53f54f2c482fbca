#pragma once

// Whole-tree verification on top of the step kernel: timeouts, latency,
// subtree-memoized batches and a logistic approximate verifier.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "vproof/kernel.hpp"
#include "vproof/prooftree.hpp"

namespace vproof {

struct VerifierConfig {
  std::chrono::nanoseconds timeout = std::chrono::milliseconds(500);
  bool memoize = true;
  double approx_skip_threshold = 0.0;
  int max_term_depth = kDefaultMaxTermDepth;
  int workers = 1;

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;
};

struct VerifyReport {
  std::string tree_id;
  /// Indexed by node id.
  std::vector<StepVerdict> verdicts;
  /// Order in which nodes were checked.
  std::vector<NodeId> order;
  std::optional<CycleError> topo_error;
  bool goal_matches = true;
  bool overall = false;
  NodeId failed_node = -1;
  double latency_ms = 0.0;
  long cache_hits = 0;
  long cache_misses = 0;

  int valid_count() const;
  bool topo_ok() const { return !topo_error; }
  /// Verdict content only (no latency or cache counters).
  bool same_verdicts(const VerifyReport& other) const;
};

/// Verdicts keyed by subtree identity. Timeout verdicts are never stored.
class VerifyCache {
 public:
  const StepVerdict* find(std::uint64_t key) const;
  void insert(std::uint64_t key, StepVerdict v);
  std::size_t size() const { return map_.size(); }
  void reserve(std::size_t n) { map_.reserve(n); }
  void clear() { map_.clear(); }

 private:
  std::unordered_map<std::uint64_t, StepVerdict> map_;
};

/// Key of every node of `t` (indexed by node id): statement, justification,
/// hypothesis context, the cited lemma's library entry and child keys.
std::vector<std::uint64_t> subtree_keys(const ProofTree& t, const LemmaLibrary& lib, int max_term_depth);

VerifyReport verify_tree(const ProofTree& t, const LemmaLibrary& lib, const VerifierConfig& cfg,
                         VerifyCache* cache = nullptr);

struct BatchStats {
  std::size_t trees = 0;
  std::size_t valid = 0;
  long cache_hits = 0;
  long cache_misses = 0;
  double mean_latency_ms = 0.0;

  double hit_rate() const;
  /// `trees=<n> valid=<n> cache_hit_rate=<f> mean_latency_ms=<f>`
  std::string summary_line() const;
};

struct BatchResult {
  std::vector<VerifyReport> reports;
  BatchStats stats;
};

/// Reports come back in input order and are verdict-identical to
/// element-wise verify_tree regardless of cfg.workers and cfg.memoize.
BatchResult verify_batch(const std::vector<ProofTree>& trees, const LemmaLibrary& lib, const VerifierConfig& cfg,
                         VerifyCache* cache = nullptr);

/// Expected premise count of a rule (-1 when the rule takes any number).
int rule_arity(Rule r);

inline constexpr int kApproxFeatureVersion = 1;
inline constexpr int kApproxFeatureDim = 16;

/// node count, depth, rule histogram (9), known-lemma fraction, max term
/// depth, arity consistency, dependency order ok, max embedding drop.
Eigen::VectorXd approx_features(const ProofTree& t, const LemmaLibrary& lib);

struct ApproxModel {
  int feature_version = kApproxFeatureVersion;
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(kApproxFeatureDim);
  double bias = 0.0;
  double threshold = 0.5;
  bool degenerate = false;
};

struct ApproxTrainConfig {
  int iterations = 2000;
  double learning_rate = 0.5;
  double l2 = 1e-4;
};

struct ApproxSample {
  Eigen::VectorXd features;
  bool verified = false;
};

ApproxModel train_approx(const std::vector<ApproxSample>& samples, const ApproxTrainConfig& cfg = {});
double approx_probability(const ApproxModel& m, const Eigen::VectorXd& features);
double approx_verify(const ApproxModel& m, const ProofTree& t, const LemmaLibrary& lib);

}  // namespace vproof
