#include "vproof/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "vproof/hashing.hpp"
#include "vproof/parallel.hpp"
#include "vproof/rewrite.hpp"
#include "vproof/rng.hpp"

namespace vproof {

using ojson = nlohmann::ordered_json;

std::string_view to_string(ErrorMode m) {
  switch (m) {
    case ErrorMode::Hallucination: return "Hallucination";
    case ErrorMode::TopoOrder: return "TopoOrder";
    case ErrorMode::IncompleteInduction: return "IncompleteInduction";
    case ErrorMode::SemanticDrift: return "SemanticDrift";
  }
  return "?";
}

std::optional<ErrorMode> parse_error_mode(std::string_view s) {
  for (ErrorMode m : kErrorModes)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Unassigned: return "unassigned";
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view s) {
  for (Split x : {Split::Unassigned, Split::Train, Split::Val, Split::Test})
    if (to_string(x) == s) return x;
  return std::nullopt;
}

std::string AnnotatedProof::signature() const {
  if (modes.empty()) return "valid";
  std::string s;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i) s += '+';
    s += to_string(modes[i]);
  }
  return s;
}

LemmaLibrary default_library() {
  LemmaLibrary lib;
  lib.add("add_zero_l", parse_statement("forall x. (0 + x) = x"));
  lib.add("add_succ_l", parse_statement("forall x y. (S(x) + y) = S((x + y))"));
  lib.add("add_assoc", parse_statement("forall x y z. ((x + y) + z) = (x + (y + z))"));
  lib.add("mul_zero_l", parse_statement("forall x. (0 * x) = 0"));
  lib.add("mul_one_l", parse_statement("forall x. (S(0) * x) = x"));
  lib.add("mul_one_r", parse_statement("forall x. (x * S(0)) = x"));
  return lib;
}

namespace {

enum class Family { AxiomInstance, Reflexivity, Citation, Ground, Open, Inductive };

const char* kVars[] = {"x", "y", "z"};

Term random_term(Rng& rng, int depth, const std::vector<std::string>& vars, bool allow_mul) {
  if (depth <= 1 || rng.chance(0.25)) {
    if (!vars.empty() && rng.chance(0.6)) return Term::var(vars[rng.below(vars.size())]);
    return Term::zero();
  }
  const double w_mul = allow_mul ? 0.2 : 0.0;
  switch (rng.weighted({0.3, 0.5, w_mul})) {
    case 0: return Term::succ(random_term(rng, depth - 1, vars, allow_mul));
    case 1: return Term::add(random_term(rng, depth - 1, vars, allow_mul), random_term(rng, depth - 1, vars, allow_mul));
    default: return Term::mul(random_term(rng, depth - 1, vars, allow_mul), random_term(rng, depth - 1, vars, allow_mul));
  }
}

std::optional<long> value_of(const Term& t, long cap) {
  long v = 0;
  switch (t.kind()) {
    case TermKind::Zero: return 0;
    case TermKind::Var: return std::nullopt;
    case TermKind::Succ: {
      auto a = value_of(t.inner(), cap);
      if (!a) return std::nullopt;
      v = *a + 1;
      break;
    }
    case TermKind::Add:
    case TermKind::Mul: {
      auto a = value_of(t.lhs(), cap), b = value_of(t.rhs(), cap);
      if (!a || !b) return std::nullopt;
      v = t.kind() == TermKind::Add ? *a + *b : *a * *b;
      break;
    }
  }
  if (v > cap) return std::nullopt;
  return v;
}

std::vector<std::string> sorted_free_vars(const Term& a, const Term& b) {
  std::vector<std::string> vs = free_vars(a);
  for (auto& v : free_vars(b))
    if (std::find(vs.begin(), vs.end(), v) == vs.end()) vs.push_back(v);
  std::sort(vs.begin(), vs.end());
  return vs;
}

std::vector<RewriteRule> direct_rules(const LemmaLibrary& lib, bool lemmas) {
  auto rules = axiom_rules();
  if (lemmas) {
    auto lm = lemma_rules(lib);
    rules.insert(rules.end(), lm.begin(), lm.end());
  }
  return rules;
}

const std::vector<Statement>& induction_templates() {
  static const std::vector<Statement> t = [] {
    std::vector<Statement> v;
    for (const char* s : {"forall x. (0 + x) = x", "forall x y. (S(y) + x) = S((y + x))",
                          "forall x y z. ((y + z) + x) = (y + (z + x))", "forall x. (0 * x) = 0",
                          "forall x. (S(0) * x) = x", "forall x y. (x + y) = (y + x)",
                          "forall x. (x + x) = (S(S(0)) * x)", "forall x. (x * S(0)) = x",
                          "forall x y. (S(x) + y) = (x + S(y))"})
      v.push_back(parse_statement(s));
    return v;
  }();
  return t;
}

std::optional<Fragment> attempt(Family f, Rng& rng, const GenBounds& b, const LemmaLibrary& lib) {
  ProveOptions opt;
  opt.max_steps = b.max_rewrite_steps;
  opt.allow_induction = false;
  const int td = std::max(1, b.max_goal_term_depth);
  switch (f) {
    case Family::AxiomInstance: {
      const auto& schemas = axiom_schemas();
      const AxiomSchema& ax = schemas[rng.below(schemas.size())];
      std::vector<std::string> pool(kVars, kVars + 1 + rng.below(2));
      Bindings sigma;
      for (const auto& v : ax.statement.binders) sigma[v] = random_term(rng, td - 1, pool, true);
      Statement inst = substitute(ax.statement, sigma);
      inst.binders = sorted_free_vars(inst.lhs, inst.rhs);
      return Fragment{inst, Justification::axiom(ax.name, sigma), {}};
    }
    case Family::Reflexivity: {
      std::vector<std::string> pool(kVars, kVars + rng.below(3));
      Term t = random_term(rng, td, pool, true);
      Statement s{sorted_free_vars(t, t), t, t};
      return Fragment{s, Justification::refl(), {}};
    }
    case Family::Citation: {
      if (lib.empty()) return std::nullopt;
      const std::string& name = lib.names()[rng.below(lib.size())];
      return Fragment{*lib.find(name), Justification::cite(name), {}};
    }
    case Family::Ground: {
      Term t = random_term(rng, td + 1, {}, true);
      auto v = value_of(t, b.max_numeral);
      if (!v || t.kind() == TermKind::Zero) return std::nullopt;
      Term n = Term::numeral(static_cast<int>(*v));
      Statement s{{}, t, n};
      double r = rng.uniform();
      if (r < 0.2) {
        s = {{}, n, t};
      } else if (r < 0.4) {
        Term u = random_term(rng, td + 1, {}, true);
        auto w = value_of(u, b.max_numeral);
        if (w && *w == *v) s.rhs = u;
      }
      if (s.lhs == s.rhs) return std::nullopt;
      return prove_by_rewriting(s, direct_rules(lib, rng.chance(0.5)), lib, opt, rng);
    }
    case Family::Open: {
      std::vector<std::string> pool(kVars, kVars + 1 + rng.below(3));
      Term t = random_term(rng, td + 1, pool, true);
      if (t.is_ground()) return std::nullopt;
      auto rules = direct_rules(lib, true);
      auto steps = normalize(t, rules, {}, lib, opt);
      if (!steps || steps->empty()) return std::nullopt;
      Term other = steps->back().after;
      double r = rng.uniform();
      if (r < 0.3 && steps->size() > 1) other = (*steps)[rng.below(steps->size() - 1)].after;
      Statement s{sorted_free_vars(t, other), t, other};
      if (rng.chance(0.25)) std::swap(s.lhs, s.rhs);
      if (s.lhs == s.rhs) return std::nullopt;
      return prove_by_rewriting(s, rules, lib, opt, rng);
    }
    case Family::Inductive: {
      const auto& ts = induction_templates();
      Statement g = ts[rng.below(ts.size())];
      Bindings sigma;
      for (const auto& v : g.binders) {
        if (v == "x" || rng.chance(0.6)) continue;
        sigma[v] = random_term(rng, 2, {}, false);
      }
      g = substitute(g, sigma);
      if (rng.chance(0.3)) std::swap(g.lhs, g.rhs);
      return prove_by_induction(g, "x", {}, lib, opt, rng);
    }
  }
  return std::nullopt;
}

bool fits(const ProofTree& t, const GenBounds& b) {
  if (static_cast<int>(t.size()) > b.max_nodes || tree_depth(t) > b.max_depth) return false;
  return std::all_of(t.nodes.begin(), t.nodes.end(), [](const ProofNode& n) { return is_well_formed(n.statement); });
}

}  // namespace

ProofTree generate_tree(std::uint64_t seed, const GenBounds& b, const LemmaLibrary& lib) {
  if (b.max_depth < 1 || b.max_nodes < 1) throw GenerationFailure("bounds admit no proof tree");
  Rng rng(seed);
  const double ind = std::clamp(b.induction_share, 0.0, 1.0);
  const double rest = 1.0 - ind;
  std::vector<double> w = {0.10 * rest, 0.05 * rest, 0.05 * rest, 0.30 * rest, 0.50 * rest, ind};
  if (b.max_depth == 1 || b.max_nodes == 1) w = {0.6, 0.2, 0.2, 0, 0, 0};
  for (int i = 0; i < b.attempts; ++i) {
    auto fam = static_cast<Family>(rng.weighted(w));
    auto frag = attempt(fam, rng, b, lib);
    if (!frag) continue;
    ProofTree t = from_fragment(*frag);
    if (fits(t, b)) return t;
  }
  throw GenerationFailure("no proof within bounds after " + std::to_string(b.attempts) + " attempts");
}

std::vector<AnnotatedProof> generate_valid(int count, std::uint64_t seed, const GenBounds& bounds,
                                           const LemmaLibrary& lib, int workers) {
  if (count < 1) throw std::invalid_argument("count must be at least 1");
  std::vector<AnnotatedProof> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    AnnotatedProof& p = out[i];
    p.id = i;
    p.generator_seed = derive_seed(seed, i, 1);
    p.tree = generate_tree(p.generator_seed, bounds, lib);
  });
  return out;
}

bool injection_applicable(const ProofTree& t, ErrorMode mode) {
  switch (mode) {
    case ErrorMode::Hallucination:
      return std::any_of(t.nodes.begin(), t.nodes.end(), [](const ProofNode& n) { return n.just.rule != Rule::Induction; });
    case ErrorMode::TopoOrder:
      return std::any_of(t.nodes.begin(), t.nodes.end(), [](const ProofNode& n) { return !n.children.empty(); });
    case ErrorMode::IncompleteInduction:
      return std::any_of(t.nodes.begin(), t.nodes.end(), [](const ProofNode& n) {
        return n.just.rule == Rule::Induction && n.children.size() == 2;
      });
    case ErrorMode::SemanticDrift: return t.size() >= 2;
  }
  return false;
}

AnnotatedProof inject_error(const AnnotatedProof& p, ErrorMode mode, std::uint64_t seed, const LemmaLibrary& lib,
                            const std::vector<Statement>& donors) {
  if (!p.valid) throw InjectionInapplicable("proof is already flawed");
  if (!injection_applicable(p.tree, mode))
    throw InjectionInapplicable(std::string("no target for ") + std::string(to_string(mode)));
  Rng rng(seed);
  AnnotatedProof out = p;
  out.valid = false;
  out.modes = {mode};
  out.injection_seed = seed;
  ProofTree& t = out.tree;
  auto pick = [&](auto pred) {
    std::vector<NodeId> c;
    for (const auto& n : t.nodes)
      if (pred(n)) c.push_back(n.id);
    return c[rng.below(c.size())];
  };

  switch (mode) {
    case ErrorMode::Hallucination: {
      NodeId x = pick([](const ProofNode& n) { return n.just.rule != Rule::Induction; });
      std::string name;
      do {
        char buf[32];
        std::snprintf(buf, sizeof buf, "lemma_%08llx", static_cast<unsigned long long>(rng.next() & 0xffffffffULL));
        name = buf;
      } while (lib.contains(name));
      t.node(x).just = Justification::cite(name);
      refresh_cites(t);
      out.injected_node = x;
      break;
    }
    case ErrorMode::TopoOrder: {
      NodeId x = pick([](const ProofNode& n) { return !n.children.empty(); });
      auto par = parents(t);
      std::vector<NodeId> ancestors{x};
      for (NodeId a = par[static_cast<std::size_t>(x)]; a >= 0; a = par[static_cast<std::size_t>(a)]) ancestors.push_back(a);
      auto& kids = t.node(x).children;
      kids[rng.below(kids.size())] = ancestors[rng.below(ancestors.size())];
      std::vector<NodeId> remap;
      t = canonicalize(t, &remap);
      out.injected_node = remap[static_cast<std::size_t>(x)];
      break;
    }
    case ErrorMode::IncompleteInduction: {
      NodeId x = pick([](const ProofNode& n) { return n.just.rule == Rule::Induction && n.children.size() == 2; });
      auto& kids = t.node(x).children;
      kids.erase(kids.begin() + rng.below(2));
      std::vector<NodeId> remap;
      t = canonicalize(t, &remap);
      out.injected_node = remap[static_cast<std::size_t>(x)];
      break;
    }
    case ErrorMode::SemanticDrift: {
      const NodeId root = t.root;
      NodeId x = pick([root](const ProofNode& n) { return n.id != root; });
      const Statement& old = t.node(x).statement;
      std::optional<Statement> repl;
      for (int i = 0; i < 64 && !donors.empty() && !repl; ++i) {
        const Statement& d = donors[rng.below(donors.size())];
        if (!(d == old) && is_well_formed(d)) repl = d;
      }
      if (!repl) {
        // no usable donor: perturb the statement instead
        repl = old;
        repl->rhs = Term::succ(old.rhs);
      }
      t.node(x).statement = *repl;
      out.injected_node = x;
      break;
    }
  }
  return out;
}

std::vector<long> apportion(long total, const std::vector<double>& weights) {
  std::vector<long> out(weights.size(), 0);
  if (weights.empty() || total <= 0) return out;
  using i128 = __int128;
  std::vector<i128> w(weights.size());
  i128 sum = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0) || !std::isfinite(weights[i])) throw std::invalid_argument("weights must be finite and >= 0");
    w[i] = static_cast<i128>(std::llround(weights[i] * 1e9));
    sum += w[i];
  }
  if (sum == 0) throw std::invalid_argument("weights sum to zero");
  std::vector<i128> rem(weights.size());
  long given = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    i128 q = static_cast<i128>(total) * w[i];
    out[i] = static_cast<long>(q / sum);
    rem[i] = q % sum;
    given += out[i];
  }
  std::vector<std::size_t> idx(w.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; given < total; ++k, ++given) ++out[idx[k % idx.size()]];
  return out;
}

void InjectionConfig::validate() const {
  if (!(flawed_fraction > 0.0 && flawed_fraction < 1.0)) throw std::invalid_argument("flawed_fraction must lie in (0, 1)");
  double s = 0;
  for (double w : mode_weights) {
    if (!(w >= 0)) throw std::invalid_argument("mode weights must be non-negative");
    s += w;
  }
  if (!(s > 0)) throw std::invalid_argument("mode weights sum to zero");
  if (!(augmentation_factor >= 0)) throw std::invalid_argument("augmentation_factor must be non-negative");
}

void SplitConfig::validate() const {
  double s = 0;
  for (double r : ratios) {
    if (!(r >= 0 && r <= 1)) throw std::invalid_argument("split ratios must lie in [0, 1]");
    s += r;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
}

namespace {

std::vector<Statement> donor_pool(const std::vector<AnnotatedProof>& base, std::size_t self, Rng& rng) {
  std::vector<Statement> out;
  if (base.size() < 2) return out;
  for (int k = 0; k < 3; ++k) {
    std::size_t j = rng.below(base.size() - 1);
    if (j >= self) ++j;
    for (const auto& n : base[j].tree.nodes) out.push_back(n.statement);
  }
  return out;
}

}  // namespace

CorpusBuild build_corpus(const InjectionConfig& cfg, const GenBounds& bounds, std::size_t size, const LemmaLibrary& lib,
                         int workers) {
  cfg.validate();
  if (size == 0) throw std::invalid_argument("corpus size must be positive");
  CorpusBuild out;
  std::vector<double> wts(cfg.mode_weights.begin(), cfg.mode_weights.end());
  const long flawed = apportion(static_cast<long>(size), {cfg.flawed_fraction, 1.0 - cfg.flawed_fraction})[0];
  const auto mode_counts = apportion(flawed, wts);

  std::vector<AnnotatedProof> base = generate_valid(static_cast<int>(size), cfg.seed, bounds, lib, workers);

  // Scarce targets first so every mode finds applicable trees.
  std::vector<std::optional<ErrorMode>> assigned(size);
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  Rng pick_rng(derive_seed(cfg.seed, 0, 2));
  pick_rng.shuffle(order);
  for (ErrorMode m : {ErrorMode::IncompleteInduction, ErrorMode::TopoOrder, ErrorMode::SemanticDrift,
                      ErrorMode::Hallucination}) {
    long need = mode_counts[static_cast<std::size_t>(m)];
    for (std::size_t i : order) {
      if (need == 0) break;
      if (assigned[i] || !injection_applicable(base[i].tree, m)) continue;
      assigned[i] = m;
      --need;
    }
    if (need > 0)
      throw GenerationFailure("not enough trees eligible for " + std::string(to_string(m)) + " injections");
  }

  out.items.resize(size);
  parallel_for(size, workers, [&](std::size_t i) {
    if (!assigned[i]) {
      out.items[i] = base[i];
      return;
    }
    Rng drng(derive_seed(cfg.seed, i, 4));
    auto donors = donor_pool(base, i, drng);
    out.items[i] = inject_error(base[i], *assigned[i], derive_seed(cfg.seed, i, 3), lib, donors);
  });

  const long extra = std::llround(cfg.augmentation_factor * static_cast<double>(flawed));
  const auto extra_counts = apportion(extra, wts);
  std::vector<ErrorMode> extra_modes;
  for (ErrorMode m : kErrorModes) extra_modes.insert(extra_modes.end(), static_cast<std::size_t>(extra_counts[static_cast<std::size_t>(m)]), m);
  Rng aug_rng(derive_seed(cfg.seed, 0, 5));
  aug_rng.shuffle(extra_modes);
  std::vector<AnnotatedProof> aug(extra_modes.size());
  parallel_for(aug.size(), workers, [&](std::size_t k) {
    const std::size_t idx = size + k;
    const ErrorMode m = extra_modes[k];
    GenBounds b = bounds;
    if (m == ErrorMode::IncompleteInduction) b.induction_share = 1.0;
    AnnotatedProof p;
    p.id = idx;
    for (std::uint64_t tries = 0;; ++tries) {
      p.generator_seed = derive_seed(cfg.seed, idx, 1 + 16 * tries);
      p.tree = generate_tree(p.generator_seed, b, lib);
      if (injection_applicable(p.tree, m)) break;
      if (tries > 64) throw GenerationFailure("augmentation could not find a target");
    }
    Rng drng(derive_seed(cfg.seed, idx, 4));
    auto donors = donor_pool(base, size, drng);
    aug[k] = inject_error(p, m, derive_seed(cfg.seed, idx, 3), lib, donors);
  });
  for (auto& a : aug) out.items.push_back(std::move(a));

  out.manifest = summarize(out.items);
  out.manifest.base_flawed = static_cast<std::size_t>(flawed);
  out.manifest.augmented = aug.size();
  return out;
}

Manifest summarize(const std::vector<AnnotatedProof>& corpus) {
  Manifest m;
  m.size = corpus.size();
  for (const auto& p : corpus) {
    ++m.signature_counts[p.signature()];
    ++m.split_counts[std::string(to_string(p.split))][p.signature()];
  }
  return m;
}

namespace {

using Counts = std::map<std::string, std::array<long, 3>>;

double worst_deviation(const Counts& c, const std::map<std::string, long>& sizes, long total) {
  std::array<long, 3> split_n{0, 0, 0};
  for (const auto& [sig, row] : c)
    for (int s = 0; s < 3; ++s) split_n[static_cast<std::size_t>(s)] += row[static_cast<std::size_t>(s)];
  double worst = 0;
  for (const auto& [sig, row] : c) {
    const double p = static_cast<double>(sizes.at(sig)) / static_cast<double>(total);
    for (int s = 0; s < 3; ++s) {
      const long n = split_n[static_cast<std::size_t>(s)];
      if (n == 0) continue;
      worst = std::max(worst, std::abs(static_cast<double>(row[static_cast<std::size_t>(s)]) - p * static_cast<double>(n)));
    }
  }
  return worst;
}

}  // namespace

SplitResult assign_splits(std::vector<AnnotatedProof>& corpus, const SplitConfig& cfg) {
  cfg.validate();
  SplitResult res;
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i) strata[corpus[i].signature()].push_back(i);
  std::map<std::string, long> sizes;
  for (const auto& [sig, idx] : strata) sizes[sig] = static_cast<long>(idx.size());
  std::vector<double> ratios(cfg.ratios.begin(), cfg.ratios.end());

  Counts counts;
  std::map<std::string, std::array<std::pair<long, long>, 3>> bounds;  // floor/ceil of exact share
  for (const auto& [sig, idx] : strata) {
    const long n = static_cast<long>(idx.size());
    if (n < 3) {
      counts[sig] = {n, 0, 0};
      res.warnings.push_back("stratum '" + sig + "' has " + std::to_string(n) + " items; all assigned to train");
      continue;
    }
    auto a = apportion(n, ratios);
    counts[sig] = {a[0], a[1], a[2]};
    std::array<std::pair<long, long>, 3> b;
    for (std::size_t s = 0; s < 3; ++s) {
      const double q = static_cast<double>(n) * ratios[s];
      const long lo = static_cast<long>(std::floor(q + 1e-9));
      b[s] = {std::min(lo, a[s]), std::max(static_cast<long>(std::ceil(q - 1e-9)), a[s])};
    }
    bounds[sig] = b;
  }

  const long total = static_cast<long>(corpus.size());
  double worst = total ? worst_deviation(counts, sizes, total) : 0.0;
  // Rounding can pile up in one split; trade single items between splits
  // (staying within floor/ceil per stratum) until the bound holds.
  for (int iter = 0; iter < 1000 && worst > 1.0 + 1e-12; ++iter) {
    double best = worst;
    std::optional<std::tuple<std::string, int, int>> move;
    for (auto& [sig, row] : counts) {
      if (!bounds.contains(sig)) continue;
      const auto& b = bounds[sig];
      for (int from = 0; from < 3; ++from)
        for (int to = 0; to < 3; ++to) {
          if (from == to) continue;
          auto f = static_cast<std::size_t>(from), t = static_cast<std::size_t>(to);
          if (row[f] - 1 < b[f].first || row[t] + 1 > b[t].second) continue;
          --row[f];
          ++row[t];
          double w = worst_deviation(counts, sizes, total);
          ++row[f];
          --row[t];
          if (w < best - 1e-12) {
            best = w;
            move = {sig, from, to};
          }
        }
    }
    if (!move) break;
    auto& row = counts[std::get<0>(*move)];
    --row[static_cast<std::size_t>(std::get<1>(*move))];
    ++row[static_cast<std::size_t>(std::get<2>(*move))];
    worst = best;
  }
  res.worst_scaled_deviation = worst;

  for (auto& [sig, idx] : strata) {
    Rng rng(derive_seed(cfg.seed, hash_bytes(sig), 6));
    std::vector<std::size_t> shuffled = idx;
    rng.shuffle(shuffled);
    const auto& row = counts[sig];
    std::size_t k = 0;
    for (std::size_t s = 0; s < 3; ++s)
      for (long c = 0; c < row[s]; ++c, ++k)
        corpus[shuffled[k]].split = static_cast<Split>(s + 1);
  }
  for (const auto& p : corpus) ++res.histogram[std::string(to_string(p.split))][p.signature()];
  return res;
}

CorpusFormatError::CorpusFormatError(std::size_t line, const std::string& what)
    : std::runtime_error("record " + std::to_string(line) + ": " + what), line_(line) {}

std::string to_record(const AnnotatedProof& p) {
  ojson j;
  j["version"] = kCorpusVersion;
  j["id"] = p.id;
  j["label"] = p.valid ? "valid" : "flawed";
  ojson modes = ojson::array();
  for (ErrorMode m : p.modes) modes.push_back(std::string(to_string(m)));
  j["modes"] = modes;
  j["injected_node"] = p.injected_node ? ojson(*p.injected_node) : ojson(nullptr);
  j["split"] = std::string(to_string(p.split));
  j["seeds"] = {{"generator", p.generator_seed}, {"injection", p.injection_seed}};
  j["tree"] = serialize(p.tree);
  return j.dump();
}

AnnotatedProof from_record(std::string_view line, std::size_t line_no) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::parse_error& e) {
    throw CorpusFormatError(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw CorpusFormatError(line_no, "record is not an object");
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw CorpusFormatError(line_no, "missing version");
  if (j["version"].get<long>() != kCorpusVersion)
    throw CorpusFormatError(line_no, "unsupported version " + j["version"].dump() + " (expected " +
                                         std::to_string(kCorpusVersion) + ")");
  static const std::vector<std::string> keys = {"version", "id", "label", "modes", "injected_node", "split", "seeds", "tree"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
      throw CorpusFormatError(line_no, "unknown field '" + it.key() + "'");
  AnnotatedProof p;
  try {
    p.id = j.at("id").get<std::uint64_t>();
    const auto label = j.at("label").get<std::string>();
    if (label != "valid" && label != "flawed") throw CorpusFormatError(line_no, "bad label '" + label + "'");
    p.valid = label == "valid";
    for (const auto& m : j.at("modes")) {
      auto mode = parse_error_mode(m.get<std::string>());
      if (!mode) throw CorpusFormatError(line_no, "unknown error mode " + m.dump());
      p.modes.push_back(*mode);
    }
    if (!j.at("injected_node").is_null()) p.injected_node = j.at("injected_node").get<NodeId>();
    auto split = parse_split(j.at("split").get<std::string>());
    if (!split) throw CorpusFormatError(line_no, "unknown split");
    p.split = *split;
    p.generator_seed = j.at("seeds").at("generator").get<std::uint64_t>();
    p.injection_seed = j.at("seeds").at("injection").get<std::uint64_t>();
    p.tree = parse_tree(j.at("tree").get<std::string>());
  } catch (const CorpusFormatError&) {
    throw;
  } catch (const TreeParseError& e) {
    throw CorpusFormatError(line_no, std::string("tree ") + e.what());
  } catch (const ojson::exception& e) {
    throw CorpusFormatError(line_no, e.what());
  }
  if (p.valid != p.modes.empty()) throw CorpusFormatError(line_no, "label disagrees with modes");
  return p;
}

std::string save_corpus_text(const std::vector<AnnotatedProof>& corpus) {
  std::string out;
  for (const auto& p : corpus) {
    out += to_record(p);
    out += '\n';
  }
  return out;
}

std::vector<AnnotatedProof> load_corpus_text(std::string_view text) {
  std::vector<AnnotatedProof> out;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(start, end - start);
    if (!line.empty()) out.push_back(from_record(line, line_no));
    start = end + 1;
  }
  return out;
}

void save_corpus(const std::string& path, const std::vector<AnnotatedProof>& corpus) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << save_corpus_text(corpus);
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<AnnotatedProof> load_corpus(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_corpus_text(ss.str());
}

std::string manifest_json(const Manifest& m, const InjectionConfig& cfg, const SplitConfig* split,
                          const GenBounds& bounds) {
  ojson j;
  j["version"] = kCorpusVersion;
  j["size"] = m.size;
  j["base_flawed"] = m.base_flawed;
  j["augmented"] = m.augmented;
  ojson inj;
  inj["seed"] = cfg.seed;
  inj["flawed_fraction"] = cfg.flawed_fraction;
  ojson w;
  for (ErrorMode mode : kErrorModes) w[std::string(to_string(mode))] = cfg.mode_weights[static_cast<std::size_t>(mode)];
  inj["mode_weights"] = w;
  inj["augmentation_factor"] = cfg.augmentation_factor;
  j["injection"] = inj;
  j["bounds"] = {{"max_depth", bounds.max_depth},
                 {"max_nodes", bounds.max_nodes},
                 {"max_goal_term_depth", bounds.max_goal_term_depth},
                 {"max_rewrite_steps", bounds.max_rewrite_steps},
                 {"max_numeral", bounds.max_numeral},
                 {"induction_share", bounds.induction_share}};
  if (split) j["split"] = {{"seed", split->seed}, {"ratios", split->ratios}};
  j["signatures"] = m.signature_counts;
  j["splits"] = m.split_counts;
  j["warnings"] = m.warnings;
  return j.dump(2) + "\n";
}

}  // namespace vproof
