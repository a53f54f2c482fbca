#include "vproof/corrector.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "vproof/hashing.hpp"
#include "vproof/rewrite.hpp"

namespace vproof {

namespace {

/// Hypotheses in scope at each node reachable from the root.
std::vector<std::vector<Statement>> hyp_scopes(const ProofTree& t) {
  std::vector<std::vector<Statement>> out(t.size());
  std::vector<std::uint8_t> mark(t.size(), 0);
  std::function<void(NodeId, const std::vector<Statement>&)> visit = [&](NodeId id, const std::vector<Statement>& hs) {
    const auto u = static_cast<std::size_t>(id);
    mark[u] = 1;
    out[u] = hs;
    const ProofNode& n = t.node(id);
    std::optional<Statement> ih;
    if (n.just.rule == Rule::Induction)
      if (auto cases = induction_cases(n.statement, n.just.var)) ih = cases->hypothesis;
    const std::size_t k = n.children.size();
    for (std::size_t i = 0; i < k; ++i) {
      NodeId c = n.children[i];
      if (!t.contains(c) || mark[static_cast<std::size_t>(c)]) continue;
      if (ih && (k != 2 || i == 1)) {
        std::vector<Statement> inner{*ih};
        inner.insert(inner.end(), hs.begin(), hs.end());
        visit(c, inner);
      } else {
        visit(c, hs);
      }
    }
  };
  if (t.contains(t.root)) visit(t.root, {});
  return out;
}

int fragment_depth(const Fragment& f) {
  int d = 0;
  for (const auto& c : f.children) d = std::max(d, fragment_depth(c));
  return d + 1;
}

int fragment_size(const Fragment& f) {
  int n = 1;
  for (const auto& c : f.children) n += fragment_size(c);
  return n;
}

bool same_fragment(const Fragment& a, const Fragment& b) {
  if (!(a.statement == b.statement) || !(a.just == b.just) || a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!same_fragment(a.children[i], b.children[i])) return false;
  return true;
}

struct Needed {
  Statement statement;
  std::vector<Statement> hyps;
  /// existing child that already states it
  NodeId reuse = -1;
};

/// Premises the failed step needs under its own justification, when they
/// can be read off the conclusion and the surviving children.
std::optional<std::vector<Needed>> needed_premises(const ProofTree& t, const FailureContext& ctx) {
  const ProofNode& n = t.node(ctx.node);
  const Statement& s = n.statement;
  const auto& b = s.binders;
  std::vector<NodeId> kids;
  for (NodeId c : n.children) {
    bool back = c == ctx.node || std::find(ctx.ancestors.begin(), ctx.ancestors.end(), c) != ctx.ancestors.end();
    kids.push_back(t.contains(c) && !back ? c : -1);
  }
  auto stmt = [&](std::size_t i) -> const Statement* {
    return i < kids.size() && kids[i] >= 0 ? &t.node(kids[i]).statement : nullptr;
  };
  std::vector<Needed> out;
  switch (n.just.rule) {
    case Rule::Trans: {
      const Statement* a = stmt(0);
      const Statement* c = stmt(1);
      if (a && a->binders == b && a->lhs == s.lhs) {
        out.push_back({*a, ctx.hyps, kids[0]});
        out.push_back({Statement{b, a->rhs, s.rhs}, ctx.hyps, -1});
      } else if (c && c->binders == b && c->rhs == s.rhs) {
        out.push_back({Statement{b, s.lhs, c->lhs}, ctx.hyps, -1});
        out.push_back({*c, ctx.hyps, kids[1]});
      } else {
        return std::nullopt;
      }
      break;
    }
    case Rule::Sym: out.push_back({Statement{b, s.rhs, s.lhs}, ctx.hyps, -1}); break;
    case Rule::Cong: {
      auto l = subterm_at(s.lhs, n.just.path);
      auto r = subterm_at(s.rhs, n.just.path);
      if (!l || !r) return std::nullopt;
      auto back = replace_at(s.lhs, n.just.path, *r);
      if (!back || !(*back == s.rhs)) return std::nullopt;
      out.push_back({Statement{b, *l, *r}, ctx.hyps, -1});
      break;
    }
    case Rule::Induction: {
      auto cases = induction_cases(s, n.just.var);
      if (!cases) return std::nullopt;
      std::vector<Statement> inner{cases->hypothesis};
      inner.insert(inner.end(), ctx.hyps.begin(), ctx.hyps.end());
      out.push_back({cases->base, ctx.hyps, -1});
      out.push_back({cases->step, std::move(inner), -1});
      break;
    }
    default: return std::nullopt;
  }
  for (auto& need : out) {
    if (need.reuse >= 0) continue;
    for (NodeId c : kids)
      if (c >= 0 && t.node(c).statement == need.statement) need.reuse = c;
  }
  return out;
}

}  // namespace

FailureContext extract_failure(const ProofTree& t, const VerifyReport& report, const LemmaLibrary& lib) {
  FailureContext ctx;
  for (NodeId id : report.order) {
    const auto& v = report.verdicts.at(static_cast<std::size_t>(id));
    if (v.status == StepStatus::Invalid) {
      ctx.node = id;
      ctx.reason = v.reason;
      break;
    }
  }
  if (ctx.node < 0) throw ContractError("extract_failure needs a report with an Invalid node");
  ctx.tree_id = report.tree_id;
  const ProofNode& n = t.node(ctx.node);
  ctx.obligation = n.statement;
  ctx.just = n.just;
  auto par = parents(t);
  for (NodeId a = par[static_cast<std::size_t>(ctx.node)]; a >= 0; a = par[static_cast<std::size_t>(a)])
    ctx.ancestors.push_back(a);
  std::vector<std::uint8_t> seen(t.size(), 0);
  std::function<void(NodeId)> walk = [&](NodeId id) {
    seen[static_cast<std::size_t>(id)] = 1;
    for (NodeId c : t.node(id).children)
      if (t.contains(c) && !seen[static_cast<std::size_t>(c)]) walk(c);
    ctx.subtree.push_back(id);
  };
  for (NodeId a : ctx.ancestors) seen[static_cast<std::size_t>(a)] = 1;
  walk(ctx.node);
  ctx.hyps = hyp_scopes(t)[static_cast<std::size_t>(ctx.node)];
  ctx.visible_lemmas = lib.names();
  return ctx;
}

void CorrectionConfig::validate() const {
  if (k < 1) throw std::invalid_argument("K must be at least 1");
  if (max_regen_depth < 1) throw std::invalid_argument("max regeneration depth must be at least 1");
  if (max_iterations < 0) throw std::invalid_argument("max iterations must be non-negative");
}

std::vector<RepairCandidate> propose_repairs(const ProofTree& t, const FailureContext& ctx, const LemmaLibrary& lib,
                                             const PolicyParams& policy, const CorrectionConfig& cfg, int iteration) {
  cfg.validate();
  std::vector<RepairCandidate> out;
  const Fragment current = to_fragment(t, ctx.node);
  std::uint64_t stream = 0;
  auto regen = [&](const Statement& s, const std::vector<Statement>& hyps) -> std::optional<Fragment> {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(iteration), stream++));
    auto f = prove(s, hyps, lib, {}, rng);
    if (f && fragment_depth(*f) > cfg.max_regen_depth) return std::nullopt;
    return f;
  };
  auto push = [&](Fragment f, const char* origin, double score) {
    if (static_cast<int>(out.size()) >= cfg.k) return;
    if (fragment_depth(f) > cfg.max_regen_depth + 1 || same_fragment(f, current)) return;
    for (const auto& c : out)
      if (same_fragment(c.fragment, f)) return;
    out.push_back({std::move(f), origin, score});
  };

  if (auto need = needed_premises(t, ctx)) {
    for (int fresh = 0; fresh < 2; ++fresh) {
      Fragment f{ctx.obligation, ctx.just, {}};
      bool ok = true;
      for (const auto& nd : *need) {
        if (!fresh && nd.reuse >= 0) {
          f.children.push_back(to_fragment(t, nd.reuse));
        } else if (auto g = regen(nd.statement, nd.hyps)) {
          f.children.push_back(std::move(*g));
        } else {
          ok = false;
          break;
        }
      }
      if (ok) push(std::move(f), "reuse", 0.0);
    }
  }

  ProposerState st;
  st.goal = t.goal;
  st.obligation = ctx.obligation;
  st.hyps = ctx.hyps;
  st.depth = static_cast<int>(ctx.ancestors.size()) + 1;
  st.budget = cfg.max_regen_depth;
  st.visible_lemmas = ctx.visible_lemmas;
  auto cands = enumerate_actions(st, lib);
  if (!cands.empty()) {
    Eigen::VectorXd score = policy.scores(state_features(st), action_matrix(st, cands));
    std::vector<std::size_t> rank(cands.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      return score(static_cast<Eigen::Index>(a)) > score(static_cast<Eigen::Index>(b));
    });
    for (std::size_t i : rank) {
      if (static_cast<int>(out.size()) >= cfg.k) break;
      const ActionCandidate& a = cands[i];
      Fragment f{ctx.obligation, a.just, {}};
      bool ok = true;
      for (const auto& p : a.premises) {
        if (p.proof) {
          f.children.push_back(*p.proof);
        } else if (auto g = regen(p.statement, p.hyps)) {
          f.children.push_back(std::move(*g));
        } else {
          ok = false;
          break;
        }
      }
      if (ok) push(std::move(f), "policy", score(static_cast<Eigen::Index>(i)));
    }
  }
  return out;
}

std::string_view to_string(CorrectionStatus s) { return s == CorrectionStatus::Repaired ? "Repaired" : "Exhausted"; }

CorrectionOutcome correct_loop(const ProofTree& t, const LemmaLibrary& lib, const PolicyParams& policy,
                               const CorrectionConfig& cfg, const VerifierConfig& vcfg) {
  cfg.validate();
  CorrectionOutcome out;
  out.tree = t;
  for (;;) {
    VerifyReport rep = verify_tree(out.tree, lib, vcfg);
    if (rep.overall) {
      out.status = CorrectionStatus::Repaired;
      out.edpt = tree_edit_distance(t, out.tree);
      break;
    }
    if (out.iterations >= cfg.max_iterations) break;
    FailureContext ctx;
    try {
      ctx = extract_failure(out.tree, rep, lib);
    } catch (const ContractError&) {
      break;
    }
    auto cands = propose_repairs(out.tree, ctx, lib, policy, cfg, out.iterations);
    int accepted = -1;
    ProofTree next;
    for (std::size_t i = 0; i < cands.size() && accepted < 0; ++i) {
      NodeId at = -1;
      ProofTree trial = splice(out.tree, ctx.node, cands[i].fragment, &at);
      if (at < 0) continue;
      VerifyReport r = verify_tree(trial, lib, vcfg);
      const int lo = at - fragment_size(cands[i].fragment) + 1;
      bool ok = lo >= 0;
      for (NodeId id = std::max(lo, 0); ok && id <= at; ++id) ok = r.verdicts[static_cast<std::size_t>(id)].ok();
      if (ok) {
        accepted = static_cast<int>(i);
        next = std::move(trial);
      }
    }
    out.candidate_counts.push_back(static_cast<int>(cands.size()));
    out.trace.push_back("iter=" + std::to_string(out.iterations) + " node=" + std::to_string(ctx.node) +
                        " reason=" + std::string(to_string(ctx.reason)) + " candidates=" + std::to_string(cands.size()) +
                        " accepted=" + (accepted < 0 ? std::string("none") : std::to_string(accepted)));
    ++out.iterations;
    if (accepted < 0) break;
    out.tree = std::move(next);
  }
  return out;
}

}  // namespace vproof
