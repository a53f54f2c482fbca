#include "vproof/verifier.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "vproof/features.hpp"
#include "vproof/hashing.hpp"
#include "vproof/parallel.hpp"

namespace vproof {

void VerifierConfig::validate() const {
  if (timeout.count() < 0) throw std::invalid_argument("verifier timeout must be non-negative");
  if (!(approx_skip_threshold >= 0.0 && approx_skip_threshold <= 1.0))
    throw std::invalid_argument("approx_skip_threshold must lie in [0, 1]");
  if (max_term_depth < 1) throw std::invalid_argument("max_term_depth must be positive");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

int VerifyReport::valid_count() const {
  int n = 0;
  for (const auto& v : verdicts) n += v.ok() ? 1 : 0;
  return n;
}

bool VerifyReport::same_verdicts(const VerifyReport& o) const {
  return verdicts == o.verdicts && order == o.order && topo_error == o.topo_error &&
         goal_matches == o.goal_matches && overall == o.overall && failed_node == o.failed_node;
}

const StepVerdict* VerifyCache::find(std::uint64_t key) const {
  auto it = map_.find(key);
  return it == map_.end() ? nullptr : &it->second;
}

void VerifyCache::insert(std::uint64_t key, StepVerdict v) {
  if (v.status == StepStatus::Timeout) return;
  map_.emplace(key, v);
}

namespace {

using Clock = std::chrono::steady_clock;

/// Check order, hypothesis scopes and malformed edges of one tree.
struct Plan {
  std::vector<NodeId> order;
  std::vector<int> ctx;
  std::vector<std::vector<Statement>> contexts{{}};
  std::vector<std::uint8_t> bad_edge;
  std::optional<CycleError> topo_error;
  std::vector<std::uint64_t> keys;
};

/// One DFS from the root (then from unvisited ids in order) yields the
/// check order, hypothesis scopes, malformed edges and the same first order
/// error topo_order reports, since both walk identically.
Plan make_plan(const ProofTree& t) {
  Plan p;
  const std::size_t n = t.size();
  p.ctx.assign(n, 0);
  p.bad_edge.assign(n, 0);
  p.order.reserve(n);
  std::vector<std::uint8_t> mark(n, 0);  // 0 white, 1 on stack, 2 done
  struct Frame {
    NodeId id;
    int ctx;
    std::size_t next = 0;
    int with_ih = -1;
    std::optional<Statement> ih;
  };
  std::vector<Frame> stack;
  auto enter = [&](NodeId id, int ctx) {
    const auto u = static_cast<std::size_t>(id);
    mark[u] = 1;
    p.ctx[u] = ctx;
    Frame f{id, ctx, 0, -1, std::nullopt};
    const ProofNode& node = t.nodes[u];
    if (node.just.rule == Rule::Induction)
      if (auto cases = induction_cases(node.statement, node.just.var)) f.ih = std::move(cases->hypothesis);
    stack.push_back(std::move(f));
  };
  auto note = [&](CycleError::Kind k, NodeId from, NodeId to) {
    if (!p.topo_error) p.topo_error = CycleError{k, from, to};
  };
  auto run = [&](NodeId start) {
    enter(start, 0);
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto u = static_cast<std::size_t>(f.id);
      const ProofNode& node = t.nodes[u];
      const std::size_t k = node.children.size();
      if (f.next == k) {
        mark[u] = 2;
        p.order.push_back(f.id);
        stack.pop_back();
        continue;
      }
      const std::size_t i = f.next++;
      const NodeId c = node.children[i];
      if (!t.contains(c)) {
        p.bad_edge[u] = 1;
        note(CycleError::Kind::Dangling, f.id, c);
        continue;
      }
      const auto cu = static_cast<std::size_t>(c);
      if (mark[cu] == 1) {
        p.bad_edge[u] = 1;
        note(CycleError::Kind::Cycle, f.id, c);
        continue;
      }
      if (mark[cu] == 2) {
        note(CycleError::Kind::Shared, f.id, c);
        continue;
      }
      int child_ctx = f.ctx;
      // The step case (second premise) sees the hypothesis. An induction
      // with the wrong premise count is rejected anyway, so its remaining
      // premises are checked under the hypothesis too.
      if (f.ih && (k != 2 || i == 1)) {
        if (f.with_ih < 0) {
          std::vector<Statement> hs;
          hs.reserve(p.contexts[static_cast<std::size_t>(f.ctx)].size() + 1);
          hs.push_back(*f.ih);
          for (const auto& h : p.contexts[static_cast<std::size_t>(f.ctx)]) hs.push_back(h);
          p.contexts.push_back(std::move(hs));
          f.with_ih = static_cast<int>(p.contexts.size()) - 1;
        }
        child_ctx = f.with_ih;
      }
      enter(c, child_ctx);
    }
  };
  if (t.contains(t.root)) run(t.root);
  for (NodeId id = 0; id < static_cast<NodeId>(n); ++id)
    if (mark[static_cast<std::size_t>(id)] == 0) run(id);
  return p;
}

std::uint64_t library_slice(const Justification& j, const LemmaLibrary& lib) {
  if (j.rule != Rule::CiteLemma && j.rule != Rule::SubstLemma) return 0;
  const Statement* s = lib.find(j.name);
  return hash_combine(hash_bytes(j.name), s ? s->hash() : 0x9b05688c2b3e6c1fULL);
}

void compute_keys(const ProofTree& t, const LemmaLibrary& lib, int max_term_depth, Plan& p) {
  std::vector<std::uint64_t> ctx_hash(p.contexts.size());
  for (std::size_t i = 0; i < p.contexts.size(); ++i) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (const auto& s : p.contexts[i]) h = hash_combine(h, s.hash());
    ctx_hash[i] = hash_combine(h, p.contexts[i].size());
  }
  p.keys.assign(t.size(), 0);
  std::vector<std::uint8_t> done(t.size(), 0);
  for (NodeId id : p.order) {
    const auto u = static_cast<std::size_t>(id);
    const ProofNode& node = t.node(id);
    std::uint64_t h = hash_combine(node.statement.hash(), node.just.hash());
    h = hash_combine(h, ctx_hash[static_cast<std::size_t>(p.ctx[u])]);
    h = hash_combine(h, library_slice(node.just, lib));
    h = hash_combine(h, static_cast<std::uint64_t>(max_term_depth));
    h = hash_combine(h, node.children.size());
    for (NodeId c : node.children) {
      if (!t.contains(c)) {
        h = hash_combine(h, 0xdeadULL);
      } else if (!done[static_cast<std::size_t>(c)]) {
        h = hash_combine(h, hash_combine(0xbac4ULL, t.node(c).statement.hash()));
      } else {
        h = hash_combine(h, p.keys[static_cast<std::size_t>(c)]);
      }
    }
    p.keys[u] = h;
    done[u] = 1;
  }
}

StepVerdict check_node(const ProofTree& t, const Plan& p, NodeId id, const LemmaLibrary& lib, int max_term_depth) {
  const auto u = static_cast<std::size_t>(id);
  if (p.bad_edge[u]) return StepVerdict::invalid(Reason::PremiseMismatch);
  const ProofNode& node = t.node(id);
  std::vector<Statement> premises;
  premises.reserve(node.children.size());
  for (NodeId c : node.children) premises.push_back(t.node(c).statement);
  return check_step(node.statement, node.just, premises, lib, p.contexts[static_cast<std::size_t>(p.ctx[u])],
                    max_term_depth);
}

void finish(const ProofTree& t, const Plan& p, VerifyReport& r) {
  r.order = p.order;
  r.topo_error = p.topo_error;
  r.goal_matches = t.contains(t.root) && t.node(t.root).statement == t.goal;
  bool all = !t.nodes.empty();
  r.failed_node = -1;
  for (NodeId id : p.order) {
    const StepVerdict& v = r.verdicts[static_cast<std::size_t>(id)];
    if (!v.ok()) all = false;
    if (v.status == StepStatus::Invalid && r.failed_node < 0) r.failed_node = id;
  }
  r.overall = all && r.topo_ok() && r.goal_matches;
}

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

std::vector<std::uint64_t> subtree_keys(const ProofTree& t, const LemmaLibrary& lib, int max_term_depth) {
  Plan p = make_plan(t);
  compute_keys(t, lib, max_term_depth, p);
  return p.keys;
}

VerifyReport verify_tree(const ProofTree& t, const LemmaLibrary& lib, const VerifierConfig& cfg, VerifyCache* cache) {
  VerifierConfig c = cfg;
  c.workers = 1;
  if (!cache) c.memoize = false;
  std::vector<ProofTree> one;
  one.push_back(t);
  return std::move(verify_batch(one, lib, c, cache).reports.front());
}

BatchResult verify_batch(const std::vector<ProofTree>& trees, const LemmaLibrary& lib, const VerifierConfig& cfg,
                         VerifyCache* cache) {
  const std::size_t n = trees.size();
  BatchResult out;
  out.reports.resize(n);
  std::vector<Plan> plans(n);
  std::vector<double> plan_ms(n, 0.0);

  if (!cfg.memoize) {
    parallel_for(n, cfg.workers, [&](std::size_t i) {
      const auto start = Clock::now();
      const ProofTree& t = trees[i];
      VerifyReport& r = out.reports[i];
      Plan p = make_plan(t);
      r.verdicts.assign(t.size(), StepVerdict::timeout());
      for (NodeId id : p.order) {
        if (Clock::now() - start >= cfg.timeout) break;
        r.verdicts[static_cast<std::size_t>(id)] = check_node(t, p, id, lib, cfg.max_term_depth);
      }
      finish(t, p, r);
      r.latency_ms = ms_since(start);
    });
  } else {
    parallel_for(n, cfg.workers, [&](std::size_t i) {
      const auto start = Clock::now();
      plans[i] = make_plan(trees[i]);
      compute_keys(trees[i], lib, cfg.max_term_depth, plans[i]);
      plan_ms[i] = ms_since(start);
    });

    // Sequential pass in input order fixes which occurrence is checked.
    // Node slots are flattened: slot = offset[i] + id.
    std::vector<std::size_t> offset(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + trees[i].size();
    constexpr std::size_t kOwn = static_cast<std::size_t>(-1), kCached = static_cast<std::size_t>(-2);
    std::vector<std::size_t> from(offset[n], kOwn);
    std::unordered_map<std::uint64_t, std::size_t> first;
    first.reserve(offset[n]);
    std::vector<std::vector<NodeId>> owned(n);
    const bool consult = cache && cache->size() > 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Plan& p = plans[i];
      VerifyReport& r = out.reports[i];
      r.verdicts.assign(trees[i].size(), StepVerdict::timeout());
      for (NodeId id : p.order) {
        const auto u = static_cast<std::size_t>(id);
        const std::uint64_t k = p.keys[u];
        if (consult) {
          if (const StepVerdict* v = cache->find(k)) {
            r.verdicts[u] = *v;
            from[offset[i] + u] = kCached;
            continue;
          }
        }
        auto [it, fresh] = first.try_emplace(k, offset[i] + u);
        if (fresh)
          owned[i].push_back(id);
        else
          from[offset[i] + u] = it->second;
      }
    }

    std::vector<std::uint8_t> timed_out(n, 0);
    parallel_for(n, cfg.workers, [&](std::size_t i) {
      const auto start = Clock::now();
      const auto budget = cfg.timeout - std::chrono::duration_cast<std::chrono::nanoseconds>(
                                            std::chrono::duration<double, std::milli>(plan_ms[i]));
      if (budget <= std::chrono::nanoseconds::zero()) {
        timed_out[i] = 1;
      } else {
        for (NodeId id : owned[i]) {
          if (Clock::now() - start >= budget) break;
          out.reports[i].verdicts[static_cast<std::size_t>(id)] =
              check_node(trees[i], plans[i], id, lib, cfg.max_term_depth);
        }
      }
      out.reports[i].latency_ms = plan_ms[i] + ms_since(start);
    });

    // slot -> owning tree, for copying verdicts
    auto tree_of = [&](std::size_t slot) {
      return static_cast<std::size_t>(std::upper_bound(offset.begin(), offset.end(), slot) - offset.begin()) - 1;
    };
    for (std::size_t i = 0; i < n; ++i) {
      VerifyReport& r = out.reports[i];
      const Plan& p = plans[i];
      for (NodeId id : p.order) {
        const auto u = static_cast<std::size_t>(id);
        const std::size_t src = from[offset[i] + u];
        if (src == kOwn) {
          ++r.cache_misses;
          if (cache) cache->insert(p.keys[u], r.verdicts[u]);
          continue;
        }
        ++r.cache_hits;
        if (timed_out[i] || src == kCached) continue;
        const std::size_t j = tree_of(src);
        r.verdicts[u] = out.reports[j].verdicts[src - offset[j]];
      }
      finish(trees[i], p, r);
    }
  }

  BatchStats& s = out.stats;
  s.trees = n;
  double total_ms = 0.0;
  for (const auto& r : out.reports) {
    s.valid += r.overall ? 1 : 0;
    s.cache_hits += r.cache_hits;
    s.cache_misses += r.cache_misses;
    total_ms += r.latency_ms;
  }
  s.mean_latency_ms = n ? total_ms / static_cast<double>(n) : 0.0;
  return out;
}

double BatchStats::hit_rate() const {
  const long total = cache_hits + cache_misses;
  return total ? static_cast<double>(cache_hits) / static_cast<double>(total) : 0.0;
}

std::string BatchStats::summary_line() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "trees=%zu valid=%zu cache_hit_rate=%.4f mean_latency_ms=%.4f", trees, valid,
                hit_rate(), mean_latency_ms);
  return buf;
}

int rule_arity(Rule r) {
  switch (r) {
    case Rule::Sym:
    case Rule::Cong: return 1;
    case Rule::Trans:
    case Rule::Induction: return 2;
    default: return 0;
  }
}

Eigen::VectorXd approx_features(const ProofTree& t, const LemmaLibrary& lib) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kApproxFeatureDim);
  const double n = static_cast<double>(t.size());
  f(0) = n / 16.0;
  f(1) = tree_depth(t) / 8.0;
  int cites = 0, known = 0, consistent = 0, max_term = 0;
  for (const auto& node : t.nodes) {
    f(2 + static_cast<int>(node.just.rule)) += 1.0;
    if (node.just.rule == Rule::CiteLemma || node.just.rule == Rule::SubstLemma) {
      ++cites;
      known += lib.contains(node.just.name) ? 1 : 0;
    }
    if (static_cast<int>(node.children.size()) == rule_arity(node.just.rule)) ++consistent;
    max_term = std::max({max_term, node.statement.lhs.depth(), node.statement.rhs.depth()});
  }
  if (n > 0) {
    f.segment(2, 9) /= n;
    f(13) = consistent / n;
  }
  f(11) = cites ? static_cast<double>(known) / cites : 1.0;
  f(12) = max_term / 16.0;
  f(14) = topo_order(t).ok() ? 1.0 : 0.0;
  f(15) = max_edge_drop(t);
  return f;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

ApproxModel train_approx(const std::vector<ApproxSample>& samples, const ApproxTrainConfig& cfg) {
  ApproxModel m;
  std::size_t positives = 0;
  for (const auto& s : samples) positives += s.verified ? 1 : 0;
  if (samples.empty() || positives == 0 || positives == samples.size()) {
    m.degenerate = true;
    m.bias = positives == 0 ? -10.0 : 10.0;
    return m;
  }
  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd X(rows, kApproxFeatureDim);
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    X.row(i) = samples[static_cast<std::size_t>(i)].features.transpose();
    y(i) = samples[static_cast<std::size_t>(i)].verified ? 1.0 : 0.0;
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(kApproxFeatureDim);
  double b = 0.0;
  const double inv = 1.0 / static_cast<double>(rows);
  for (int it = 0; it < cfg.iterations; ++it) {
    Eigen::VectorXd z = (X * w).array() + b;
    Eigen::VectorXd p = z.unaryExpr([](double v) { return sigmoid(v); });
    Eigen::VectorXd err = p - y;
    w -= cfg.learning_rate * (inv * (X.transpose() * err) + cfg.l2 * w);
    b -= cfg.learning_rate * inv * err.sum();
  }
  m.weights = w;
  m.bias = b;
  return m;
}

double approx_probability(const ApproxModel& m, const Eigen::VectorXd& features) {
  return sigmoid(m.weights.dot(features) + m.bias);
}

double approx_verify(const ApproxModel& m, const ProofTree& t, const LemmaLibrary& lib) {
  return approx_probability(m, approx_features(t, lib));
}

}  // namespace vproof
