#include "vproof/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>

#include "vproof/hashing.hpp"
#include "vproof/parallel.hpp"
#include "vproof/verifier.hpp"

namespace vproof {

std::string ActionCandidate::describe() const {
  static const char* kinds[] = {"refl", "close", "rewrite", "induction", "sym", "cong"};
  std::string s = kinds[static_cast<int>(kind)];
  s += ' ';
  s += to_string(just);
  for (const auto& p : premises) {
    s += " | ";
    s += to_string(p.statement);
    if (p.proof) s += " [proved]";
  }
  return s;
}

namespace {

void subterm_paths(const Term& t, Path& path, std::vector<Path>& out) {
  out.push_back(path);
  for (int i = 0; i < t.arity(); ++i) {
    path.push_back(static_cast<std::uint8_t>(i));
    subterm_paths(t.child(i), path, out);
    path.pop_back();
  }
}

bool recursion_position(const Term& t, std::string_view v) {
  if (t.kind() == TermKind::Add || t.kind() == TermKind::Mul) {
    if (t.rhs().kind() == TermKind::Var && t.rhs().name() == v) return true;
    return recursion_position(t.lhs(), v) || recursion_position(t.rhs(), v);
  }
  if (t.kind() == TermKind::Succ) return recursion_position(t.inner(), v);
  return false;
}

}  // namespace

std::vector<ActionCandidate> enumerate_actions(const ProposerState& s, const LemmaLibrary& lib,
                                               const EnumerationBounds& bounds) {
  std::vector<ActionCandidate> out;
  const Statement& ob = s.obligation;
  const auto& ctx = ob.binders;

  if (ob.lhs == ob.rhs) {
    ActionCandidate a;
    a.kind = ActionKind::Refl;
    a.exact = true;
    out.push_back(std::move(a));
    return out;
  }

  auto rules = hypothesis_rules(s.hyps, ctx);
  auto ax = axiom_rules();
  auto lm = lemma_rules(lib);
  rules.insert(rules.end(), ax.begin(), ax.end());
  rules.insert(rules.end(), lm.begin(), lm.end());

  auto matches = [](const RewriteRule& r, const Term& t, Bindings& sigma) {
    if (r.source == RewriteRule::Source::Hyp) return r.eq.lhs == t;
    return match(r.eq.lhs, t, r.eq.binders, sigma);
  };

  // axiom leaves instantiated over subterms of the obligation plus 0 and S(0)
  {
    std::vector<Term> pool{Term::zero(), Term::succ(Term::zero())};
    std::vector<Path> paths;
    Path scratch;
    subterm_paths(ob.lhs, scratch, paths);
    for (const auto& p : paths) pool.push_back(*subterm_at(ob.lhs, p));
    paths.clear();
    subterm_paths(ob.rhs, scratch, paths);
    for (const auto& p : paths) pool.push_back(*subterm_at(ob.rhs, p));
    std::vector<Term> terms;
    for (auto& t : pool)
      if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(std::move(t));
    for (const auto& axs : axiom_schemas()) {
      const auto& vars = axs.statement.binders;
      std::vector<std::size_t> pick(vars.size(), 0);
      for (;;) {
        Bindings sigma;
        for (std::size_t i = 0; i < vars.size(); ++i) sigma.emplace(vars[i], terms[pick[i]]);
        Term l = substitute(axs.statement.lhs, sigma);
        Term r = substitute(axs.statement.rhs, sigma);
        if (l.depth() <= bounds.max_term_depth && r.depth() <= bounds.max_term_depth) {
          ActionCandidate a;
          a.kind = ActionKind::Close;
          a.just = Justification::axiom(axs.name, sigma);
          a.source = RewriteRule::Source::Axiom;
          a.rhs_side = l == ob.rhs;
          a.exact = l == ob.lhs && r == ob.rhs;
          out.push_back(std::move(a));
        }
        std::size_t i = 0;
        while (i < pick.size() && ++pick[i] == terms.size()) pick[i++] = 0;
        if (i == pick.size()) break;
      }
    }
  }

  // hypothesis and lemma leaves, instantiated from either side
  for (int side = 0; side < 2; ++side) {
    for (const auto& r : rules) {
      if (r.source == RewriteRule::Source::Axiom) continue;
      Bindings sigma;
      if (!matches(r, side == 0 ? ob.lhs : ob.rhs, sigma)) continue;
      Fragment leaf = rewrite_leaf(r, sigma, ctx, lib);
      ActionCandidate a;
      a.kind = ActionKind::Close;
      a.just = leaf.just;
      a.source = r.source;
      a.rhs_side = side == 1;
      a.exact = leaf.statement.lhs == ob.lhs && leaf.statement.rhs == ob.rhs;
      out.push_back(std::move(a));
    }
  }

  // one rewrite on either side, the rest left open
  for (int side = 0; side < 2; ++side) {
    const Term& from = side == 0 ? ob.lhs : ob.rhs;
    const Term& other = side == 0 ? ob.rhs : ob.lhs;
    std::vector<Path> paths;
    Path scratch;
    subterm_paths(from, scratch, paths);
    for (const auto& path : paths) {
      const Term sub = *subterm_at(from, path);
      for (const auto& r : rules) {
        Bindings sigma;
        if (!matches(r, sub, sigma)) continue;
        Fragment leaf = rewrite_leaf(r, sigma, ctx, lib);
        auto next = replace_at(from, path, leaf.statement.rhs);
        if (!next || next->depth() > bounds.max_term_depth) continue;
        RewriteStep step{path, from, *next, leaf};
        Fragment done = step_fragment(step, ctx);
        ActionCandidate a;
        a.kind = ActionKind::Rewrite;
        a.just = Justification::trans();
        a.source = r.source;
        a.rhs_side = side == 1;
        a.path_len = static_cast<int>(path.size());
        a.size_delta = from.size() - next->size();
        a.exact = *next == other;
        if (side == 0) {
          a.premises.push_back({done.statement, s.hyps, std::move(done)});
          a.premises.push_back({Statement{ctx, *next, ob.rhs}, s.hyps, std::nullopt});
        } else {
          Statement up{ctx, *next, ob.rhs};
          Fragment sym{up, Justification::sym(), {std::move(done)}};
          a.premises.push_back({Statement{ctx, ob.lhs, *next}, s.hyps, std::nullopt});
          a.premises.push_back({up, s.hyps, std::move(sym)});
        }
        out.push_back(std::move(a));
      }
    }
  }

  if (!(ob.lhs == ob.rhs)) {
    if (!s.after_sym) {
      ActionCandidate a;
      a.kind = ActionKind::Sym;
      a.just = Justification::sym();
      a.premises.push_back({Statement{ctx, ob.rhs, ob.lhs}, s.hyps, std::nullopt});
      out.push_back(std::move(a));
    }

    // congruence at every position where both sides share the constructors
    // above; only positions whose siblings agree are sound
    std::function<void(const Term&, const Term&, Path&, bool)> cong = [&](const Term& l, const Term& r, Path& path,
                                                                          bool siblings_equal) {
      if (!path.empty() && !(l == r)) {
        ActionCandidate c;
        c.kind = ActionKind::Cong;
        c.just = Justification::cong(path);
        c.path_len = static_cast<int>(path.size());
        c.exact = siblings_equal;
        c.premises.push_back({Statement{ctx, l, r}, s.hyps, std::nullopt});
        out.push_back(std::move(c));
      }
      if (l.kind() != r.kind() || l.arity() == 0 || l == r) return;
      for (int i = 0; i < l.arity(); ++i) {
        path.push_back(static_cast<std::uint8_t>(i));
        bool eq = siblings_equal && (l.arity() == 1 || l.child(1 - i) == r.child(1 - i));
        cong(l.child(i), r.child(i), path, eq);
        path.pop_back();
      }
    };
    Path root;
    cong(ob.lhs, ob.rhs, root, true);
  }

  for (const auto& v : ctx) {
    auto cases = induction_cases(ob, v);
    if (!cases) continue;
    ActionCandidate a;
    a.kind = ActionKind::Induction;
    a.just = Justification::induction(v);
    a.exact = recursion_position(ob.lhs, v) || recursion_position(ob.rhs, v);
    std::vector<Statement> inner{cases->hypothesis};
    inner.insert(inner.end(), s.hyps.begin(), s.hyps.end());
    a.premises.push_back({cases->base, s.hyps, std::nullopt});
    a.premises.push_back({cases->step, std::move(inner), std::nullopt});
    out.push_back(std::move(a));
  }
  return out;
}

Eigen::VectorXd state_features(const ProposerState& s) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kStateDim);
  const Statement& ob = s.obligation;
  f(0) = 1.0;
  f(1) = ob.lhs == ob.rhs;
  f(2) = !ob.binders.empty();
  f(3) = !s.hyps.empty();
  f(4) = std::min(2.0, s.depth / 8.0);
  f(5) = std::min(1.0, s.budget / 40.0);
  f(6) = (ob.lhs.size() + ob.rhs.size()) / 16.0;
  f(7) = ob.lhs.is_ground() && ob.rhs.is_ground();
  return f;
}

Eigen::VectorXd action_features(const ProposerState&, const ActionCandidate& a) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kActionDim);
  const int src = static_cast<int>(a.source);  // Hyp, Axiom, Lemma
  static const int close_slot[] = {3, 1, 2};
  static const int rewrite_slot[] = {6, 4, 5};
  switch (a.kind) {
    case ActionKind::Refl: f(0) = 1; break;
    case ActionKind::Close: f(close_slot[src]) = 1; break;
    case ActionKind::Rewrite: f(rewrite_slot[src]) = 1; break;
    case ActionKind::Induction: f(7) = 1; break;
    case ActionKind::Sym: f(8) = 1; break;
    case ActionKind::Cong: f(9) = 1; break;
  }
  f(10) = a.exact && (a.kind == ActionKind::Close || a.kind == ActionKind::Rewrite || a.kind == ActionKind::Refl);
  f(11) = a.rhs_side;
  f(12) = std::clamp(a.size_delta / 4.0, -2.0, 2.0);
  f(13) = a.path_len / 4.0;
  f(14) = a.kind == ActionKind::Induction && a.exact;
  f(15) = a.kind == ActionKind::Cong && a.exact;
  return f;
}

Eigen::MatrixXd action_matrix(const ProposerState& s, const std::vector<ActionCandidate>& cands) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(cands.size()), kActionDim);
  for (std::size_t i = 0; i < cands.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = action_features(s, cands[i]).transpose();
  return m;
}

Eigen::VectorXd PolicyParams::scores(const Eigen::VectorXd& phi, const Eigen::MatrixXd& psi) const {
  return psi * (weights.transpose() * phi);
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return z.array() - lse;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) { return log_softmax(z).array().exp(); }

Sample sample_action(const PolicyParams& p, const Eigen::VectorXd& phi, const Eigen::MatrixXd& psi, Rng& rng) {
  Eigen::VectorXd lp = log_softmax(p.scores(phi, psi));
  double u = rng.uniform();
  Eigen::Index last = lp.size() - 1;
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    const double pi = std::exp(lp(i));
    if (u < pi || i == last) return {static_cast<int>(i), lp(i)};
    u -= pi;
  }
  return {static_cast<int>(last), lp(last)};
}

Choice SoftmaxProposer::choose(const ProposerState&, const std::vector<ActionCandidate>&, const Eigen::VectorXd& phi,
                               const Eigen::MatrixXd& psi, Rng& rng) {
  if (greedy_) {
    Eigen::VectorXd lp = log_softmax(params_.scores(phi, psi));
    Eigen::Index best = 0;
    lp.maxCoeff(&best);
    return {static_cast<int>(best), lp(best), std::nullopt};
  }
  Sample s = sample_action(params_, phi, psi, rng);
  return {s.index, s.log_prob, std::nullopt};
}

namespace {

bool fragment_ok(const Fragment& f, const std::vector<Statement>& hyps, const LemmaLibrary& lib, int max_depth) {
  std::vector<Statement> prem;
  prem.reserve(f.children.size());
  for (const auto& c : f.children) prem.push_back(c.statement);
  if (!check_step(f.statement, f.just, prem, lib, hyps, max_depth).ok()) return false;
  for (std::size_t i = 0; i < f.children.size(); ++i) {
    if (f.just.rule == Rule::Induction && i == 1) {
      auto cases = induction_cases(f.statement, f.just.var);
      std::vector<Statement> inner{cases->hypothesis};
      inner.insert(inner.end(), hyps.begin(), hyps.end());
      if (!fragment_ok(f.children[i], inner, lib, max_depth)) return false;
    } else if (!fragment_ok(f.children[i], hyps, lib, max_depth)) {
      return false;
    }
  }
  return true;
}

struct PartialNode {
  Statement statement;
  std::vector<Statement> hyps;
  int depth = 1;
  std::optional<Justification> just;
  std::vector<int> kids;
  bool after_sym = false;
};

struct Partial {
  std::vector<PartialNode> nodes;

  int add(const Statement& s, const std::vector<Statement>& hyps, int depth) {
    nodes.push_back({s, hyps, depth, std::nullopt, {}});
    return static_cast<int>(nodes.size()) - 1;
  }
  int add_proved(const Fragment& f, int depth) {
    int id = add(f.statement, {}, depth);
    nodes[static_cast<std::size_t>(id)].just = f.just;
    for (const auto& c : f.children) {
      int k = add_proved(c, depth + 1);
      nodes[static_cast<std::size_t>(id)].kids.push_back(k);
    }
    return id;
  }
  Fragment to_fragment(int id) const {
    const PartialNode& n = nodes[static_cast<std::size_t>(id)];
    Fragment f{n.statement, n.just.value_or(Justification::refl()), {}};
    for (int k : n.kids) f.children.push_back(to_fragment(k));
    return f;
  }
};

}  // namespace

Episode rollout(Proposer& proposer, const Statement& goal, const LemmaLibrary& lib, const RolloutConfig& cfg, Rng& rng) {
  Episode ep;
  Partial tree;
  std::vector<int> open{tree.add(goal, {}, 1)};
  const std::vector<std::string> visible = lib.names();
  int used = 0;
  while (!open.empty() && used < cfg.max_steps) {
    const int id = open.back();
    const PartialNode node = tree.nodes[static_cast<std::size_t>(id)];
    ProposerState st{goal, node.statement, node.hyps, node.depth, cfg.max_steps - used, visible, node.after_sym};
    auto cands = enumerate_actions(st, lib, cfg.bounds);
    if (cands.empty()) break;
    EpisodeStep step;
    step.phi = state_features(st);
    step.psi = action_matrix(st, cands);
    Choice c = proposer.choose(st, cands, step.phi, step.psi, rng);
    const ActionCandidate& a = c.action ? *c.action : cands.at(static_cast<std::size_t>(c.index));
    step.choice = c.action ? -1 : c.index;
    step.log_prob = c.log_prob;
    ++used;
    ++ep.proposals;

    std::vector<Statement> prem;
    for (const auto& p : a.premises) prem.push_back(p.statement);
    bool ok = check_step(node.statement, a.just, prem, lib, node.hyps, cfg.bounds.max_term_depth).ok();
    for (const auto& p : a.premises)
      if (ok && p.proof) ok = p.proof->statement == p.statement && fragment_ok(*p.proof, p.hyps, lib, cfg.bounds.max_term_depth);
    step.reward = ok ? 1 : -1;
    step.accepted = ok;
    if (!ok) {
      ++ep.rejected;
    } else {
      open.pop_back();
      tree.nodes[static_cast<std::size_t>(id)].just = a.just;
      std::vector<int> fresh;
      for (const auto& p : a.premises) {
        int k = p.proof ? tree.add_proved(*p.proof, node.depth + 1) : tree.add(p.statement, p.hyps, node.depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].kids.push_back(k);
        tree.nodes[static_cast<std::size_t>(k)].after_sym = a.just.rule == Rule::Sym;
        if (!p.proof) fresh.push_back(k);
      }
      for (auto it = fresh.rbegin(); it != fresh.rend(); ++it) open.push_back(*it);
    }
    ep.steps.push_back(std::move(step));
  }
  ep.complete = open.empty();
  ep.attempt = from_fragment(tree.to_fragment(0));
  VerifierConfig vc;
  vc.timeout = std::chrono::milliseconds(0x7fffffff);
  ep.valid = verify_tree(ep.attempt, lib, vc).overall;
  EpisodeStep last;
  last.reward = ep.valid ? 1 : -1;
  last.accepted = ep.valid;
  ep.steps.push_back(std::move(last));
  return ep;
}

std::vector<double> n_step_returns(const std::vector<double>& rewards, int n, double gamma,
                                   const std::vector<double>* values) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  const std::size_t T = rewards.size();
  std::vector<double> g(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double acc = 0, disc = 1;
    for (int k = 0; k < n && t + static_cast<std::size_t>(k) < T; ++k) {
      acc += disc * rewards[t + static_cast<std::size_t>(k)];
      disc *= gamma;
    }
    const std::size_t boot = t + static_cast<std::size_t>(n);
    if (values && boot < T) acc += disc * (*values)[boot];
    g[t] = acc;
  }
  return g;
}

double clipped_surrogate(const PolicyParams& p, const std::vector<PpoSample>& batch, double eps, Eigen::VectorXd* grad,
                         double* clip_fraction) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p.weights.rows(), p.weights.cols());
  double total = 0;
  std::size_t clipped = 0;
  for (const auto& s : batch) {
    Eigen::VectorXd lp = log_softmax(p.scores(s.phi, s.psi));
    const double rho = std::exp(lp(s.choice) - s.old_log_prob);
    const double A = s.advantage;
    const double rc = std::clamp(rho, 1.0 - eps, 1.0 + eps);
    total += std::min(rho * A, rc * A);
    if (std::abs(rho - 1.0) > eps) ++clipped;
    const bool active = A >= 0 ? rho < 1.0 + eps : rho > 1.0 - eps;
    if (grad && active) {
      Eigen::VectorXd pi = lp.array().exp();
      Eigen::VectorXd dpsi = s.psi.row(s.choice).transpose() - s.psi.transpose() * pi;
      g += (A * rho) * s.phi * dpsi.transpose();
    }
  }
  const double n = static_cast<double>(batch.size());
  if (grad) *grad = Eigen::Map<Eigen::VectorXd>(g.data(), g.size()) / n;
  if (clip_fraction) *clip_fraction = static_cast<double>(clipped) / n;
  return total / n;
}

void TrainConfig::validate() const {
  if (n_step < 1) throw std::invalid_argument("n_step must be at least 1");
  if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(clip > 0)) throw std::invalid_argument("clip must be positive");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (epochs < 1 || episodes_per_update < 1 || max_steps < 1 || updates < 0)
    throw std::invalid_argument("epochs, episodes_per_update and max_steps must be positive");
  if (!(curriculum_warmup > 0 && curriculum_warmup <= 1)) throw std::invalid_argument("curriculum_warmup must lie in (0, 1]");
}

UpdateDiagnostics ppo_update(PolicyParams& p, const std::vector<PpoSample>& batch, const TrainConfig& cfg) {
  UpdateDiagnostics d;
  if (batch.empty()) throw std::invalid_argument("empty batch");
  PolicyParams next = p;
  for (int e = 0; e < cfg.epochs; ++e) {
    Eigen::VectorXd g;
    d.surrogate = clipped_surrogate(next, batch, cfg.clip, &g, &d.clip_fraction);
    if (!g.allFinite() || !std::isfinite(d.surrogate)) {
      d.aborted = true;
      d.message = "non-finite gradient; update skipped";
      return d;
    }
    next.weights += cfg.learning_rate * Eigen::Map<const Eigen::MatrixXd>(g.data(), next.weights.rows(), next.weights.cols());
  }
  if (!next.weights.allFinite()) {
    d.aborted = true;
    d.message = "non-finite weights; update skipped";
    return d;
  }
  p = std::move(next);
  return d;
}

std::vector<std::size_t> curriculum_order(const std::vector<AnnotatedProof>& corpus) {
  std::vector<Complexity> c;
  c.reserve(corpus.size());
  for (const auto& p : corpus) c.push_back(complexity(p.tree));
  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (c[a].depth != c[b].depth) return c[a].depth < c[b].depth;
    if (c[a].syntactic != c[b].syntactic) return c[a].syntactic < c[b].syntactic;
    return corpus[a].id < corpus[b].id;
  });
  return idx;
}

namespace {

std::string fmt(const char* f, double a, double b, double c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

TrainResult train_policy(const std::vector<Statement>& goals, const LemmaLibrary& lib, const TrainConfig& cfg,
                         const PolicyParams& init) {
  cfg.validate();
  if (goals.empty()) throw std::invalid_argument("no training goals");
  TrainResult res;
  res.params = init;
  RolloutConfig rc;
  rc.max_steps = cfg.max_steps;
  const std::size_t N = goals.size();
  const double open_at = std::max(1.0, cfg.curriculum_warmup * cfg.updates);
  for (int u = 0; u < cfg.updates; ++u) {
    const double frac = std::min(1.0, (u + 1) / open_at);
    std::size_t pool = std::max<std::size_t>(static_cast<std::size_t>(std::ceil(frac * static_cast<double>(N))),
                                             std::min<std::size_t>(N, static_cast<std::size_t>(cfg.episodes_per_update)));
    Rng pick(derive_seed(cfg.seed, static_cast<std::uint64_t>(u), 1));
    std::vector<std::size_t> chosen(static_cast<std::size_t>(cfg.episodes_per_update));
    for (auto& c : chosen) c = pick.below(pool);

    std::vector<Episode> eps(chosen.size());
    const PolicyParams snapshot = res.params;
    parallel_for(eps.size(), cfg.workers, [&](std::size_t j) {
      SoftmaxProposer prop(snapshot);
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(u), 2 + j));
      eps[j] = rollout(prop, goals[chosen[j]], lib, rc, rng);
    });

    std::vector<PpoSample> batch;
    double reward_sum = 0;
    std::size_t reward_n = 0, solved = 0;
    for (const auto& ep : eps) {
      std::vector<double> r;
      for (const auto& s : ep.steps) r.push_back(s.reward);
      reward_sum += std::accumulate(r.begin(), r.end(), 0.0);
      reward_n += r.size();
      solved += ep.valid;
      auto g = n_step_returns(r, cfg.n_step, cfg.gamma);
      for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        const auto& s = ep.steps[t];
        if (s.choice < 0) continue;
        batch.push_back({s.phi, s.psi, s.choice, s.log_prob, g[t]});
      }
    }
    double clip_frac = 0;
    if (!batch.empty()) {
      double mean = 0;
      for (const auto& b : batch) mean += b.advantage;
      mean /= static_cast<double>(batch.size());
      for (auto& b : batch) b.advantage -= mean;
      UpdateDiagnostics d = ppo_update(res.params, batch, cfg);
      clip_frac = d.clip_fraction;
      if (d.aborted) ++res.rejected_updates;
    }
    res.log.push_back("update=" + std::to_string(u) +
                      fmt(" mean_reward=%.4f fpsr_train=%.4f clip_frac=%.4f", reward_sum / std::max<std::size_t>(1, reward_n),
                          static_cast<double>(solved) / static_cast<double>(eps.size()), clip_frac));
  }
  return res;
}

EvalResult evaluate_policy(const PolicyParams& p, const std::vector<Statement>& goals, const LemmaLibrary& lib,
                           int max_steps, std::uint64_t seed, int workers) {
  EvalResult out;
  out.episodes.resize(goals.size());
  RolloutConfig rc;
  rc.max_steps = max_steps;
  parallel_for(goals.size(), workers, [&](std::size_t i) {
    SoftmaxProposer prop(p);
    Rng rng(derive_seed(seed, i));
    out.episodes[i] = rollout(prop, goals[i], lib, rc, rng);
  });
  if (goals.empty()) return out;
  double rewards = 0;
  std::size_t n = 0, valid = 0;
  for (const auto& e : out.episodes) {
    valid += e.valid;
    for (const auto& s : e.steps) rewards += s.reward, ++n;
  }
  out.fpsr = static_cast<double>(valid) / static_cast<double>(goals.size());
  out.mean_reward = rewards / static_cast<double>(std::max<std::size_t>(1, n));
  return out;
}

std::string checkpoint_text(const PolicyParams& p) {
  std::string s = "vproof-policy 1\nfeature_version " + std::to_string(p.feature_version) + "\nshape " +
                  std::to_string(p.weights.rows()) + " " + std::to_string(p.weights.cols()) + "\n";
  char buf[40];
  for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", p.weights(r, c));
      if (c) s += ' ';
      s += buf;
    }
    s += '\n';
  }
  return s;
}

PolicyParams parse_checkpoint(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic, key;
  int version = 0, fv = 0;
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> magic >> version) || magic != "vproof-policy") throw CheckpointError("not a policy checkpoint");
  if (version != 1) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  if (!(in >> key >> fv) || key != "feature_version") throw CheckpointError("missing feature_version");
  if (fv != kFeatureVersion) throw CheckpointError("feature version " + std::to_string(fv) + " does not match " +
                                                   std::to_string(kFeatureVersion));
  if (!(in >> key >> rows >> cols) || key != "shape" || rows != kStateDim || cols != kActionDim)
    throw CheckpointError("bad weight shape");
  PolicyParams p;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (!(in >> p.weights(r, c)) || !std::isfinite(p.weights(r, c))) throw CheckpointError("bad weight entry");
  if (in >> key) throw CheckpointError("trailing data in checkpoint");
  return p;
}

}  // namespace vproof
