#include "vproof/rewrite.hpp"

#include <algorithm>
#include <functional>

namespace vproof {

std::vector<RewriteRule> axiom_rules() {
  std::vector<RewriteRule> out;
  for (const auto& ax : axiom_schemas()) out.push_back({RewriteRule::Source::Axiom, ax.name, ax.statement, 0});
  return out;
}

std::vector<RewriteRule> lemma_rules(const LemmaLibrary& lib) {
  std::vector<RewriteRule> out;
  for (const auto& name : lib.names()) {
    const Statement& s = *lib.find(name);
    if (s.lhs.kind() == TermKind::Var && s.has_binder(s.lhs.name())) continue;
    if (s.lhs == s.rhs) continue;
    auto fv = free_vars(s.lhs);
    bool binds_all = std::all_of(s.binders.begin(), s.binders.end(), [&](const std::string& b) {
      return std::find(fv.begin(), fv.end(), b) != fv.end();
    });
    if (!binds_all) continue;
    out.push_back({RewriteRule::Source::Lemma, name, s, 0});
  }
  return out;
}

namespace {

bool contains_subterm(const Term& t, const Term& needle) {
  if (t == needle) return true;
  for (int i = 0; i < t.arity(); ++i)
    if (contains_subterm(t.child(i), needle)) return true;
  return false;
}

}  // namespace

std::vector<RewriteRule> hypothesis_rules(std::span<const Statement> hyps, const std::vector<std::string>& ctx) {
  std::vector<RewriteRule> out;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const Statement& h = hyps[k];
    if (h.binders != ctx) continue;
    if (h.lhs.kind() == TermKind::Var || contains_subterm(h.rhs, h.lhs)) continue;
    out.push_back({RewriteRule::Source::Hyp, "", h, static_cast<int>(k)});
  }
  return out;
}

bool match(const Term& pattern, const Term& t, const std::vector<std::string>& vars, Bindings& out) {
  if (pattern.kind() == TermKind::Var &&
      std::find(vars.begin(), vars.end(), pattern.name()) != vars.end()) {
    auto [it, fresh] = out.emplace(pattern.name(), t);
    return fresh || it->second == t;
  }
  if (pattern.kind() != t.kind()) return false;
  switch (pattern.kind()) {
    case TermKind::Zero: return true;
    case TermKind::Var: return pattern.name() == t.name();
    case TermKind::Succ: return match(pattern.inner(), t.inner(), vars, out);
    default: return match(pattern.lhs(), t.lhs(), vars, out) && match(pattern.rhs(), t.rhs(), vars, out);
  }
}

namespace {

struct Redex {
  const RewriteRule* rule = nullptr;
  Path path;
  Bindings sigma;
};

bool find_hyp(const Term& t, const std::vector<RewriteRule>& rules, Path& path, Redex& out) {
  for (const auto& r : rules) {
    if (r.source != RewriteRule::Source::Hyp) continue;
    if (r.eq.lhs == t) {
      out = {&r, path, {}};
      return true;
    }
  }
  for (int i = 0; i < t.arity(); ++i) {
    path.push_back(static_cast<std::uint8_t>(i));
    if (find_hyp(t.child(i), rules, path, out)) return true;
    path.pop_back();
  }
  return false;
}

bool find_innermost(const Term& t, const std::vector<RewriteRule>& rules, Path& path, Redex& out) {
  for (int i = 0; i < t.arity(); ++i) {
    path.push_back(static_cast<std::uint8_t>(i));
    if (find_innermost(t.child(i), rules, path, out)) return true;
    path.pop_back();
  }
  for (auto src : {RewriteRule::Source::Axiom, RewriteRule::Source::Lemma}) {
    for (const auto& r : rules) {
      if (r.source != src) continue;
      Bindings sigma;
      if (match(r.eq.lhs, t, r.eq.binders, sigma)) {
        out = {&r, path, std::move(sigma)};
        return true;
      }
    }
  }
  return false;
}

}  // namespace

Fragment rewrite_leaf(const RewriteRule& rule, const Bindings& sigma, const std::vector<std::string>& ctx,
                      const LemmaLibrary& lib) {
  Statement s{ctx, substitute(rule.eq.lhs, sigma), substitute(rule.eq.rhs, sigma)};
  switch (rule.source) {
    case RewriteRule::Source::Hyp: return {s, Justification::hypothesis(rule.hyp), {}};
    case RewriteRule::Source::Axiom: return {s, Justification::axiom(rule.name, sigma), {}};
    case RewriteRule::Source::Lemma: {
      const Statement* lemma = lib.find(rule.name);
      if (lemma && *lemma == s) return {s, Justification::cite(rule.name), {}};
      return {s, Justification::subst_lemma(rule.name, sigma), {}};
    }
  }
  return {s, Justification::refl(), {}};
}

std::optional<std::vector<RewriteStep>> normalize(const Term& t, const std::vector<RewriteRule>& rules,
                                                  const std::vector<std::string>& ctx, const LemmaLibrary& lib,
                                                  const ProveOptions& opt) {
  std::vector<RewriteStep> steps;
  Term cur = t;
  for (;;) {
    Redex r;
    Path path;
    bool found = find_hyp(cur, rules, path, r);
    if (!found) {
      path.clear();
      found = find_innermost(cur, rules, path, r);
    }
    if (!found) return steps;
    if (static_cast<int>(steps.size()) >= opt.max_steps) return std::nullopt;
    Fragment leaf = rewrite_leaf(*r.rule, r.sigma, ctx, lib);
    auto next = replace_at(cur, r.path, leaf.statement.rhs);
    if (!next || next->depth() > opt.max_term_depth || leaf.statement.lhs.depth() > opt.max_term_depth)
      return std::nullopt;
    steps.push_back({r.path, cur, *next, std::move(leaf)});
    cur = *next;
  }
}

Fragment step_fragment(const RewriteStep& s, const std::vector<std::string>& ctx) {
  if (s.path.empty()) return s.leaf;
  return {Statement{ctx, s.before, s.after}, Justification::cong(s.path), {s.leaf}};
}

Fragment chain(std::vector<Fragment> steps, const std::vector<std::string>& ctx, ChainShape shape) {
  auto trans = [&](Fragment a, Fragment b) {
    Statement s{ctx, a.statement.lhs, b.statement.rhs};
    return Fragment{std::move(s), Justification::trans(), {std::move(a), std::move(b)}};
  };
  std::function<Fragment(std::size_t, std::size_t)> build = [&](std::size_t lo, std::size_t hi) -> Fragment {
    if (hi - lo == 1) return std::move(steps[lo]);
    switch (shape) {
      case ChainShape::Left: {
        Fragment acc = std::move(steps[lo]);
        for (std::size_t i = lo + 1; i < hi; ++i) acc = trans(std::move(acc), std::move(steps[i]));
        return acc;
      }
      case ChainShape::Right: {
        Fragment acc = std::move(steps[hi - 1]);
        for (std::size_t i = hi - 1; i-- > lo;) acc = trans(std::move(steps[i]), std::move(acc));
        return acc;
      }
      case ChainShape::Balanced: {
        std::size_t mid = lo + (hi - lo) / 2;
        Fragment a = build(lo, mid);
        Fragment b = build(mid, hi);
        return trans(std::move(a), std::move(b));
      }
    }
    return std::move(steps[lo]);
  };
  return build(0, steps.size());
}

std::optional<Fragment> prove_by_rewriting(const Statement& goal, const std::vector<RewriteRule>& rules,
                                           const LemmaLibrary& lib, const ProveOptions& opt, Rng& rng) {
  const auto& ctx = goal.binders;
  auto left = normalize(goal.lhs, rules, ctx, lib, opt);
  if (!left) return std::nullopt;
  auto right = normalize(goal.rhs, rules, ctx, lib, opt);
  if (!right) return std::nullopt;
  const Term& nl = left->empty() ? goal.lhs : left->back().after;
  const Term& nr = right->empty() ? goal.rhs : right->back().after;
  if (!(nl == nr)) return std::nullopt;
  if (left->empty() && right->empty()) return Fragment{goal, Justification::refl(), {}};

  auto pick_shape = [&] { return static_cast<ChainShape>(rng.below(3)); };
  auto frags = [&](const std::vector<RewriteStep>& steps) {
    std::vector<Fragment> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(step_fragment(s, ctx));
    return out;
  };
  std::optional<Fragment> l, r;
  if (!left->empty()) l = chain(frags(*left), ctx, pick_shape());
  if (!right->empty()) {
    Fragment down = chain(frags(*right), ctx, pick_shape());
    Statement up{ctx, down.statement.rhs, down.statement.lhs};
    r = Fragment{std::move(up), Justification::sym(), {std::move(down)}};
  }
  if (!r) return l;
  if (!l) return r;
  return Fragment{goal, Justification::trans(), {std::move(*l), std::move(*r)}};
}

std::optional<Fragment> prove_by_induction(const Statement& goal, const std::string& var,
                                           std::span<const Statement> hyps, const LemmaLibrary& lib,
                                           const ProveOptions& opt, Rng& rng) {
  auto cases = induction_cases(goal, var);
  if (!cases) return std::nullopt;
  for (const auto& h : hyps)
    if (!h.has_binder(var) && (occurs(h.lhs, var) || occurs(h.rhs, var))) return std::nullopt;

  auto base_rules = hypothesis_rules(hyps, cases->base.binders);
  auto ax = axiom_rules();
  auto lm = lemma_rules(lib);
  base_rules.insert(base_rules.end(), ax.begin(), ax.end());
  base_rules.insert(base_rules.end(), lm.begin(), lm.end());
  auto base = prove_by_rewriting(cases->base, base_rules, lib, opt, rng);
  if (!base) return std::nullopt;

  std::vector<Statement> inner;
  inner.reserve(hyps.size() + 1);
  inner.push_back(cases->hypothesis);
  inner.insert(inner.end(), hyps.begin(), hyps.end());
  auto step_rules = hypothesis_rules(inner, cases->step.binders);
  step_rules.insert(step_rules.end(), ax.begin(), ax.end());
  step_rules.insert(step_rules.end(), lm.begin(), lm.end());
  auto step = prove_by_rewriting(cases->step, step_rules, lib, opt, rng);
  if (!step) return std::nullopt;
  return Fragment{goal, Justification::induction(var), {std::move(*base), std::move(*step)}};
}

std::optional<Fragment> prove(const Statement& goal, std::span<const Statement> hyps, const LemmaLibrary& lib,
                              const ProveOptions& opt, Rng& rng) {
  auto direct = [&]() -> std::optional<Fragment> {
    auto rules = hypothesis_rules(hyps, goal.binders);
    auto ax = axiom_rules();
    auto lm = lemma_rules(lib);
    rules.insert(rules.end(), ax.begin(), ax.end());
    rules.insert(rules.end(), lm.begin(), lm.end());
    return prove_by_rewriting(goal, rules, lib, opt, rng);
  };
  auto inductive = [&]() -> std::optional<Fragment> {
    if (!opt.allow_induction) return std::nullopt;
    for (std::size_t i = goal.binders.size(); i-- > 0;)
      if (auto f = prove_by_induction(goal, goal.binders[i], hyps, lib, opt, rng)) return f;
    return std::nullopt;
  };
  if (opt.prefer_induction) {
    if (auto f = inductive()) return f;
    return direct();
  }
  if (auto f = direct()) return f;
  return inductive();
}

}  // namespace vproof
