#pragma once

// Small rewriting prover: orients axioms, lemmas and in-scope hypotheses left
// to right and emits kernel-checkable fragments (Trans chains of Cong-wrapped
// rewrite leaves).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vproof/kernel.hpp"
#include "vproof/prooftree.hpp"
#include "vproof/rng.hpp"

namespace vproof {

struct RewriteRule {
  enum class Source { Hyp, Axiom, Lemma };
  Source source = Source::Axiom;
  std::string name;
  Statement eq;
  int hyp = 0;
};

std::vector<RewriteRule> axiom_rules();
/// Lemmas usable left to right: the lhs is not a bare binder and binds every
/// binder of the rhs.
std::vector<RewriteRule> lemma_rules(const LemmaLibrary& lib);
/// Hypotheses usable under binders `ctx`: exact binders, lhs not a variable,
/// lhs not contained in rhs.
std::vector<RewriteRule> hypothesis_rules(std::span<const Statement> hyps, const std::vector<std::string>& ctx);

/// First-order matching of `pattern` against `t`; only `vars` are pattern
/// variables, every other variable matches itself.
bool match(const Term& pattern, const Term& t, const std::vector<std::string>& vars, Bindings& out);

/// Leaf justifying `ctx. sigma(lhs) = sigma(rhs)` by the rule: Hyp, Axiom,
/// CiteLemma when the instance is the lemma itself, else SubstLemma.
Fragment rewrite_leaf(const RewriteRule& rule, const Bindings& sigma, const std::vector<std::string>& ctx,
                      const LemmaLibrary& lib);

enum class ChainShape { Left, Right, Balanced };

struct ProveOptions {
  int max_steps = 32;
  int max_term_depth = 24;
  bool allow_induction = true;
  /// Induction is tried on binders from last to first.
  bool prefer_induction = false;
};

struct RewriteStep {
  Path path;
  Term before;
  Term after;
  Fragment leaf;
};

/// Innermost-leftmost normalization; hypotheses are applied first wherever
/// they match. Nullopt when the step budget or term depth is exceeded.
std::optional<std::vector<RewriteStep>> normalize(const Term& t, const std::vector<RewriteRule>& rules,
                                                  const std::vector<std::string>& ctx, const LemmaLibrary& lib,
                                                  const ProveOptions& opt);

/// `ctx. lhs = rhs` by joining both normal forms.
std::optional<Fragment> prove_by_rewriting(const Statement& goal, const std::vector<RewriteRule>& rules,
                                           const LemmaLibrary& lib, const ProveOptions& opt, Rng& rng);

/// Induction on `var` with both cases closed by rewriting; the step case
/// gets the hypothesis prepended to `hyps`.
std::optional<Fragment> prove_by_induction(const Statement& goal, const std::string& var,
                                           std::span<const Statement> hyps, const LemmaLibrary& lib,
                                           const ProveOptions& opt, Rng& rng);

/// Rewriting first, then induction on each binder.
std::optional<Fragment> prove(const Statement& goal, std::span<const Statement> hyps, const LemmaLibrary& lib,
                              const ProveOptions& opt, Rng& rng);

/// Joins consecutive equalities with Trans in the given shape.
Fragment chain(std::vector<Fragment> steps, const std::vector<std::string>& ctx, ChainShape shape);

/// Builds the Cong wrapper around a rewrite leaf at `path`.
Fragment step_fragment(const RewriteStep& s, const std::vector<std::string>& ctx);

}  // namespace vproof
