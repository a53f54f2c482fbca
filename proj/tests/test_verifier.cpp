#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "vproof/features.hpp"
#include "vproof/verifier.hpp"

using namespace vproof;
using vproof::testing::st;
using vproof::testing::tm;
using vproof::testing::zero_add_tree;

TEST_CASE("a valid induction tree verifies node by node") {
  LemmaLibrary lib;
  ProofTree t = zero_add_tree();
  VerifyReport r = verify_tree(t, lib, {});
  CHECK(r.overall);
  CHECK(r.valid_count() == 6);
  CHECK(r.failed_node == -1);
  CHECK(r.order.size() == 6);
  CHECK(r.latency_ms >= 0.0);
}

TEST_CASE("single-point mutation to an unknown lemma") {
  LemmaLibrary lib;
  ProofTree t = zero_add_tree();
  NodeId target = t.node(t.root).children[0];
  t.node(target).just = Justification::cite("ghost");
  VerifyReport r = verify_tree(t, lib, {});
  CHECK_FALSE(r.overall);
  CHECK(r.failed_node == target);
  CHECK(r.verdicts[static_cast<std::size_t>(target)] == StepVerdict::invalid(Reason::UnknownLemma));
  CHECK(r.valid_count() == 5);
}

TEST_CASE("hypothesis is only in scope under the step case") {
  LemmaLibrary lib;
  ProofTree t = zero_add_tree();
  // swap base and step: the Hyp leaf now sits under premise 0
  auto& kids = t.node(t.root).children;
  std::swap(kids[0], kids[1]);
  VerifyReport r = verify_tree(t, lib, {});
  CHECK_FALSE(r.overall);
  NodeId hyp_leaf = -1;
  for (const auto& n : t.nodes)
    if (n.just.rule == Rule::Hyp) hyp_leaf = n.id;
  CHECK(r.verdicts[static_cast<std::size_t>(hyp_leaf)] == StepVerdict::invalid(Reason::UnboundHypothesis));
  CHECK(r.failed_node == hyp_leaf);
}

TEST_CASE("an induction missing its base fails at the induction node") {
  LemmaLibrary lib;
  ProofTree t = zero_add_tree();
  auto& kids = t.node(t.root).children;
  kids.erase(kids.begin());
  t = canonicalize(t);
  VerifyReport r = verify_tree(t, lib, {});
  CHECK(r.failed_node == t.root);
  CHECK(r.verdicts[static_cast<std::size_t>(t.root)] == StepVerdict::invalid(Reason::MissingInductionCase));
}

TEST_CASE("a cycle makes the rewired node fail") {
  LemmaLibrary lib;
  ProofTree t = zero_add_tree();
  NodeId s2 = -1;
  for (const auto& n : t.nodes)
    if (n.just.rule == Rule::Cong) s2 = n.id;
  t.node(s2).children[0] = t.root;
  VerifyReport r = verify_tree(t, lib, {});
  CHECK_FALSE(r.overall);
  CHECK_FALSE(r.topo_ok());
  CHECK(r.failed_node == s2);
}

TEST_CASE("zero timeout times out every node") {
  LemmaLibrary lib;
  VerifierConfig cfg;
  cfg.timeout = std::chrono::nanoseconds(0);
  for (bool memo : {false, true}) {
    cfg.memoize = memo;
    VerifyCache cache;
    VerifyReport r = verify_tree(zero_add_tree(), lib, cfg, &cache);
    CHECK_FALSE(r.overall);
    for (const auto& v : r.verdicts) CHECK(v == StepVerdict::timeout());
    CHECK(r.failed_node == -1);
  }
}

TEST_CASE("batch of the same tree twice hits the cache on every node of the second") {
  LemmaLibrary lib;
  std::vector<ProofTree> batch{zero_add_tree(), parse_tree(serialize(zero_add_tree()))};
  auto res = verify_batch(batch, lib, {});
  CHECK(res.reports[0].cache_hits == 0);
  CHECK(res.reports[1].cache_hits == 6);
  CHECK(res.reports[1].cache_misses == 0);
  CHECK(res.reports[1].overall);
  CHECK(res.stats.valid == 2);
  CHECK(res.stats.summary_line().rfind("trees=2 valid=2 cache_hit_rate=0.5000 mean_latency_ms=", 0) == 0);
}

TEST_CASE("batch without shared subtrees has no hits") {
  LemmaLibrary lib;
  std::vector<ProofTree> batch;
  for (int k = 0; k < 4; ++k) {
    Term n = Term::numeral(k);
    Statement s{{}, Term::add(n, Term::zero()), n};
    batch.push_back(from_fragment(Fragment{s, Justification::axiom("A1", {{"x", n}}), {}}));
  }
  auto res = verify_batch(batch, lib, {});
  CHECK(res.stats.cache_hits == 0);
  CHECK(res.stats.valid == 4);
}

TEST_CASE("memoization and worker count do not change verdicts") {
  LemmaLibrary lib;
  lib.add("add_zero_l", st("forall x. (0 + x) = x"));
  std::mt19937_64 rng(77);
  std::vector<ProofTree> batch;
  for (int i = 0; i < 60; ++i) {
    ProofTree t = zero_add_tree();
    NodeId victim = static_cast<NodeId>(rng() % t.size());
    switch (rng() % 4) {
      case 0: t.node(victim).just = Justification::cite("add_zero_l"); break;
      case 1: t.node(victim).statement = st("0 = 0"); break;
      case 2: break;
      default: t.node(victim).just = Justification::refl(); break;
    }
    batch.push_back(t);
  }
  VerifierConfig off;
  off.memoize = false;
  auto base = verify_batch(batch, lib, off);
  for (int workers : {1, 3}) {
    for (bool memo : {false, true}) {
      VerifierConfig cfg;
      cfg.memoize = memo;
      cfg.workers = workers;
      auto other = verify_batch(batch, lib, cfg);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(other.reports[i].same_verdicts(base.reports[i]));
        CHECK(other.reports[i].same_verdicts(verify_tree(batch[i], lib, off)));
      }
    }
  }
}

TEST_CASE("library slice separates cache entries") {
  LemmaLibrary with;
  with.add("l", st("0 = 0"));
  LemmaLibrary without;
  ProofTree t = from_fragment(Fragment{st("0 = 0"), Justification::cite("l"), {}});
  VerifyCache cache;
  CHECK(verify_tree(t, with, {}, &cache).overall);
  VerifyReport r = verify_tree(t, without, {}, &cache);
  CHECK_FALSE(r.overall);
  CHECK(r.cache_hits == 0);
}

TEST_CASE("approximate verifier") {
  ApproxModel zero;
  LemmaLibrary lib;
  CHECK(approx_verify(zero, zero_add_tree(), lib) == doctest::Approx(0.5));
  ApproxModel neg;
  neg.bias = -20.0;
  CHECK(approx_verify(neg, zero_add_tree(), lib) < 0.01);

  std::vector<ApproxSample> same(5, ApproxSample{Eigen::VectorXd::Ones(kApproxFeatureDim), true});
  ApproxModel c = train_approx(same);
  CHECK(c.degenerate);
  CHECK(approx_probability(c, Eigen::VectorXd::Zero(kApproxFeatureDim)) > 0.99);

  // valid iff depth <= 2, invalid iff depth >= 5
  std::vector<ApproxSample> toy;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 80; ++i) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(kApproxFeatureDim);
    bool ok = i % 2 == 0;
    int depth = ok ? 1 + static_cast<int>(rng() % 2) : 5 + static_cast<int>(rng() % 4);
    f(1) = depth / 8.0;
    f(0) = static_cast<double>(rng() % 10) / 16.0;
    toy.push_back({f, ok});
  }
  ApproxModel m = train_approx(toy, {5000, 1.0, 0.0});
  CHECK_FALSE(m.degenerate);
  int correct = 0;
  for (const auto& s : toy) correct += (approx_probability(m, s.features) >= 0.5) == s.verified ? 1 : 0;
  CHECK(correct == 80);
  CHECK(train_approx(toy, {5000, 1.0, 0.0}).weights == m.weights);
}

TEST_CASE("embedding and cosine") {
  Embedding a = embed(st("(x + 0) = x"));
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK(cosine(a, 2.5 * a) == doctest::Approx(1.0));
  Embedding e1 = Embedding::Zero(), e2 = Embedding::Zero();
  e1(0) = 1;
  e2(3) = 1;
  CHECK(cosine(e1, e2) == doctest::Approx(0.0));
  ProofTree same = from_fragment(Fragment{st("0 = 0"), Justification::sym(), {{st("0 = 0"), Justification::refl(), {}}}});
  CHECK(max_edge_drop(same) == doctest::Approx(0.0));
}

TEST_CASE("order errors in reports agree with topo_order on rewired trees") {
  LemmaLibrary lib;
  std::mt19937_64 rng(31);
  int with_error = 0;
  for (int i = 0; i < 400; ++i) {
    ProofTree t = zero_add_tree();
    for (int e = 0, edits = 1 + static_cast<int>(rng() % 3); e < edits; ++e) {
      auto& kids = t.node(static_cast<NodeId>(rng() % t.size())).children;
      const NodeId target = static_cast<NodeId>(rng() % (t.size() + 1)) - (rng() % 4 == 0 ? 3 : 0);
      if (!kids.empty() && rng() % 2)
        kids[rng() % kids.size()] = target;
      else
        kids.push_back(target);
    }
    VerifyReport r = verify_tree(t, lib, {});
    CHECK(r.topo_error == topo_order(t).error);
    with_error += r.topo_error.has_value();
  }
  CHECK(with_error > 100);
}
