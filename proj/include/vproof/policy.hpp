#pragma once

// Proposer and learner: bounded action enumeration at an open obligation, a
// bilinear softmax policy over (state x action) features, kernel-rewarded
// rollouts, n-step returns and clipped policy-gradient updates.

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vproof/corpus.hpp"
#include "vproof/kernel.hpp"
#include "vproof/prooftree.hpp"
#include "vproof/rewrite.hpp"
#include "vproof/rng.hpp"

namespace vproof {

inline constexpr int kFeatureVersion = 1;
inline constexpr int kStateDim = 8;
inline constexpr int kActionDim = 16;

struct ProposerState {
  Statement goal;
  Statement obligation;
  /// induction hypotheses in scope, innermost first
  std::vector<Statement> hyps;
  int depth = 1;
  int budget = 0;
  std::vector<std::string> visible_lemmas;
  /// the obligation was opened by a Sym step (no second Sym is offered)
  bool after_sym = false;
};

enum class ActionKind : std::uint8_t { Refl, Close, Rewrite, Induction, Sym, Cong };

/// Child obligation of an action; `proof` is set when the action proves it
/// outright (the rewrite half of a Trans step).
struct Premise {
  Statement statement;
  std::vector<Statement> hyps;
  std::optional<Fragment> proof;
};

struct ActionCandidate {
  ActionKind kind = ActionKind::Refl;
  Justification just;
  std::vector<Premise> premises;
  RewriteRule::Source source = RewriteRule::Source::Axiom;
  bool rhs_side = false;
  bool exact = false;
  int path_len = 0;
  int size_delta = 0;

  std::string describe() const;
};

struct EnumerationBounds {
  int max_term_depth = 24;
};

/// Only Refl when both sides agree. Otherwise every axiom instantiated over subterms of the
/// obligation plus 0 and S(0) as a closing leaf (the kernel decides); lemma
/// and hypothesis leaves whose lhs matches either side; single rewrites on
/// either side as Trans steps; Sym unless the obligation came from one; Cong
/// at every position under shared constructors; Induction on each binder.
/// Deterministic order; may be empty.
std::vector<ActionCandidate> enumerate_actions(const ProposerState& s, const LemmaLibrary& lib,
                                               const EnumerationBounds& bounds = {});

Eigen::VectorXd state_features(const ProposerState& s);
Eigen::VectorXd action_features(const ProposerState& s, const ActionCandidate& a);
/// One row per candidate.
Eigen::MatrixXd action_matrix(const ProposerState& s, const std::vector<ActionCandidate>& cands);

struct PolicyParams {
  /// kStateDim x kActionDim; score(a) = phi' W psi(a)
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(kStateDim, kActionDim);
  int feature_version = kFeatureVersion;

  Eigen::VectorXd scores(const Eigen::VectorXd& phi, const Eigen::MatrixXd& psi) const;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& scores);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& scores);

struct Sample {
  int index = 0;
  double log_prob = 0.0;
};
Sample sample_action(const PolicyParams& p, const Eigen::VectorXd& phi, const Eigen::MatrixXd& psi, Rng& rng);

/// Chooses the next step. `index` is the candidate position, or -1 when the
/// proposer emits an action of its own (stored in `action`).
struct Choice {
  int index = -1;
  double log_prob = 0.0;
  std::optional<ActionCandidate> action;
};

class Proposer {
 public:
  virtual ~Proposer() = default;
  virtual Choice choose(const ProposerState& s, const std::vector<ActionCandidate>& cands, const Eigen::VectorXd& phi,
                        const Eigen::MatrixXd& psi, Rng& rng) = 0;
};

class SoftmaxProposer : public Proposer {
 public:
  explicit SoftmaxProposer(const PolicyParams& p, bool greedy = false) : params_(p), greedy_(greedy) {}
  Choice choose(const ProposerState& s, const std::vector<ActionCandidate>& cands, const Eigen::VectorXd& phi,
                const Eigen::MatrixXd& psi, Rng& rng) override;

 private:
  const PolicyParams& params_;
  bool greedy_;
};

struct EpisodeStep {
  Eigen::VectorXd phi;
  Eigen::MatrixXd psi;
  /// -1 for the closing verdict on the whole attempt and for proposer-own actions
  int choice = -1;
  double log_prob = 0.0;
  int reward = 0;
  double ret = 0.0;
  bool accepted = false;
};

struct RolloutConfig {
  int max_steps = 20;
  EnumerationBounds bounds;
};

struct Episode {
  ProofTree attempt;
  std::vector<EpisodeStep> steps;
  /// no open obligation left
  bool complete = false;
  /// attempt verifies overall Valid
  bool valid = false;
  int proposals = 0;
  int rejected = 0;
};

/// Depth-first over open obligations, leftmost first. Every proposal is
/// checked by the kernel at once; rejected proposals leave the tree unchanged.
/// The episode closes with one more step whose reward is the verdict on the
/// whole attempt (open obligations stay as Refl leaves).
Episode rollout(Proposer& proposer, const Statement& goal, const LemmaLibrary& lib, const RolloutConfig& cfg, Rng& rng);

/// G_t = sum_{k<n} gamma^k r_{t+k} + gamma^n V(s_{t+n}); V is zero at and
/// after the end. `values` (same length as rewards) defaults to all zero.
std::vector<double> n_step_returns(const std::vector<double>& rewards, int n, double gamma,
                                   const std::vector<double>* values = nullptr);

struct PpoSample {
  Eigen::VectorXd phi;
  Eigen::MatrixXd psi;
  int choice = 0;
  double old_log_prob = 0.0;
  double advantage = 0.0;
};

/// mean_t min(rho A, clip(rho, 1-eps, 1+eps) A); writes the gradient wrt the
/// flattened (column-major) weights when `grad` is given.
double clipped_surrogate(const PolicyParams& p, const std::vector<PpoSample>& batch, double eps,
                         Eigen::VectorXd* grad = nullptr, double* clip_fraction = nullptr);

struct TrainConfig {
  int n_step = 2;
  double gamma = 0.95;
  double clip = 0.2;
  double learning_rate = 0.5;
  int epochs = 4;
  int episodes_per_update = 16;
  int max_steps = 20;
  int updates = 200;
  /// fraction of updates over which the curriculum window opens fully
  double curriculum_warmup = 0.5;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

struct UpdateDiagnostics {
  double surrogate = 0.0;
  double clip_fraction = 0.0;
  bool aborted = false;
  std::string message;
};

UpdateDiagnostics ppo_update(PolicyParams& p, const std::vector<PpoSample>& batch, const TrainConfig& cfg);

/// Indices sorted by (logical depth, syntactic complexity, id).
std::vector<std::size_t> curriculum_order(const std::vector<AnnotatedProof>& corpus);

struct TrainResult {
  PolicyParams params;
  std::vector<std::string> log;
  std::size_t rejected_updates = 0;
};

/// `goals` in curriculum order. One log line per update:
/// update=<i> mean_reward=<f> fpsr_train=<f> clip_frac=<f>
TrainResult train_policy(const std::vector<Statement>& goals, const LemmaLibrary& lib, const TrainConfig& cfg,
                         const PolicyParams& init = {});

struct EvalResult {
  double fpsr = 0.0;
  double mean_reward = 0.0;
  std::vector<Episode> episodes;
};

/// Sampled rollouts, goal i seeded by derive_seed(seed, i).
EvalResult evaluate_policy(const PolicyParams& p, const std::vector<Statement>& goals, const LemmaLibrary& lib,
                           int max_steps, std::uint64_t seed, int workers = 1);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string checkpoint_text(const PolicyParams& p);
PolicyParams parse_checkpoint(std::string_view text);

}  // namespace vproof
