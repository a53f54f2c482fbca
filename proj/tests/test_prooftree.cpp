#include <deque>
#include <map>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "ted_oracle.hpp"
#include "vproof/prooftree.hpp"

using namespace vproof;
using vproof::testing::st;
using vproof::testing::tm;
using namespace vproof::testing::ted;

namespace {

ProofTree trans_tree() {
  Fragment a{st("(S(0) + 0) = S(0)"), Justification::axiom("A1", {{"x", tm("S(0)")}}), {}};
  Fragment b{st("S(0) = S(0)"), Justification::refl(), {}};
  Fragment root{st("(S(0) + 0) = S(0)"), Justification::trans(), {a, b}};
  return from_fragment(root);
}

Fragment random_fragment(std::mt19937_64& rng, int depth) {
  static const std::vector<Justification> js = {
      Justification::refl(), Justification::sym(), Justification::trans(), Justification::cong({0, 1}),
      Justification::axiom("A2", {{"x", tm("S(0)")}}), Justification::cite("lemma_7"),
      Justification::hypothesis(1), Justification::induction("x"),
      Justification::subst_lemma("add_zero_l", {{"x", tm("(y * 0)")}})};
  Statement s{{}, vproof::testing::random_term(rng, 4, {"x", "y"}), vproof::testing::random_term(rng, 4, {"x"})};
  if (rng() % 3 == 0) s.binders = {"x"};
  Fragment f{s, js[rng() % js.size()], {}};
  if (depth > 1) {
    int k = static_cast<int>(rng() % 3);
    for (int i = 0; i < k; ++i) f.children.push_back(random_fragment(rng, depth - 1));
  }
  return f;
}

}  // namespace

TEST_CASE("topo_order on small trees") {
  ProofTree single = from_fragment(Fragment{st("0 = 0"), Justification::refl(), {}});
  auto r = topo_order(single);
  CHECK(r.ok());
  CHECK(r.order == std::vector<NodeId>{single.root});

  ProofTree t = trans_tree();
  auto r2 = topo_order(t);
  REQUIRE(r2.ok());
  CHECK(r2.order == std::vector<NodeId>{0, 1, 2});
  CHECK(t.root == 2);
}

TEST_CASE("topo_order names the edge that closes a cycle") {
  ProofTree t = trans_tree();
  t.node(1).children.push_back(2);  // leaf depends on its own ancestor
  auto r = topo_order(t);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error->kind == CycleError::Kind::Cycle);
  CHECK(r.error->from == 1);
  CHECK(r.error->to == 2);
  CHECK_THROWS_AS(linearize(t), CycleException);

  ProofTree d = trans_tree();
  d.node(0).children.push_back(9);
  CHECK(topo_order(d).error->kind == CycleError::Kind::Dangling);
}

TEST_CASE("linearize and delinearize") {
  ProofTree single = from_fragment(Fragment{st("0 = 0"), Justification::refl(), {}});
  auto l = linearize(single);
  REQUIRE(l.size() == 1);
  CHECK(l[0].action == Justification::refl());
  CHECK(delinearize(l) == single);

  ProofTree t = trans_tree();
  auto lt = linearize(t);
  CHECK(lt.size() == 3);
  CHECK(lt.back().action.rule == Rule::Trans);
  CHECK(lt.back().depth == 1);
  CHECK(lt.front().depth == 2);
  CHECK(lt.front().budget == 2);
  CHECK(delinearize(lt) == t);

  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    ProofTree r = from_fragment(random_fragment(rng, 5));
    CHECK(delinearize(linearize(r)) == r);
  }
}

TEST_CASE("complexity") {
  ProofTree single = from_fragment(Fragment{st("0 = 0"), Justification::refl(), {}});
  CHECK(complexity(single) == Complexity{3, 1});
  Fragment leaf{st("0 = 0"), Justification::refl(), {}};
  ProofTree two = from_fragment(Fragment{st("0 = 0"), Justification::sym(), {leaf}});
  CHECK(complexity(two) == Complexity{6, 2});
}

TEST_CASE("serialize round trip and canonical bytes") {
  ProofTree t = trans_tree();
  std::string text = serialize(t);
  CHECK(text ==
        "goal\t(S(0) + 0) = S(0)\n"
        "root\t2\n"
        "0\t(S(0) + 0) = S(0)\taxiom A1 {x := S(0)}\t-\n"
        "1\tS(0) = S(0)\trefl\t-\n"
        "2\t(S(0) + 0) = S(0)\ttrans\t0,1\n");
  CHECK(parse_tree(text) == t);

  ProofTree single = from_fragment(Fragment{st("0 = 0"), Justification::refl(), {}});
  CHECK(parse_tree(serialize(single)) == single);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    ProofTree r = from_fragment(random_fragment(rng, 5));
    std::string bytes = serialize(r);
    ProofTree back = parse_tree(bytes);
    REQUIRE(back == r);
    CHECK(serialize(back) == bytes);
  }
}

TEST_CASE("malformed tree text is a parse error") {
  std::string text = serialize(trans_tree());
  for (std::size_t cut = 0; cut < text.size(); ++cut) {
    CHECK_THROWS_AS(parse_tree(text.substr(0, cut)), TreeParseError);
  }
  try {
    parse_tree("goal\t0 = 0\nroot\t0\n0\t0 = 0\tbogus\t-\n");
    FAIL("expected error");
  } catch (const TreeParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_tree("goal\t0 = 0\nroot\t0\n0\t0 = 0\trefl\t4\n"), TreeParseError);
  CHECK_THROWS_AS(parse_tree("goal\t0 = 0\nroot\t0\n1\t0 = 0\trefl\t-\n"), TreeParseError);
}

TEST_CASE("splice and canonicalize") {
  ProofTree t = trans_tree();
  Fragment fix{st("(S(0) + 0) = S(0)"), Justification::axiom("A1", {{"x", tm("S(0)")}}), {}};
  ProofTree s = splice(t, t.root, fix);
  CHECK(s.size() == 1);
  CHECK(s.root == 0);
  CHECK(s.node(0).just.rule == Rule::Axiom);

  ProofTree c = t;
  c.nodes.push_back({3, st("0 = 0"), Justification::refl(), {}});
  CHECK(canonicalize(c) == t);
}

TEST_CASE("tree edit distance on proof trees") {
  ProofTree t = trans_tree();
  CHECK(tree_edit_distance(t, t) == 0);
  ProofTree u = t;
  u.node(u.root).just = Justification::cite("other");
  CHECK(tree_edit_distance(t, u) == 1);
  CHECK(tree_edit_distance(u, t) == 1);
  ProofTree leaf = from_fragment(Fragment{st("(S(0) + 0) = S(0)"), Justification::trans(), {}});
  CHECK(tree_edit_distance(t, leaf) == 2);

  ProofTree cyc = t;
  cyc.node(1).children.push_back(2);
  CHECK(tree_edit_distance(t, cyc) == 1);
}

TEST_CASE("Zhang-Shasha matches exhaustive edit-script search on all trees up to 4 nodes") {
  const int labels = 3, max_nodes = 4;
  std::vector<Forest> trees;
  for (int n = 1; n <= max_nodes; ++n)
    for (auto& t : trees_of_size(n, labels)) trees.push_back(t);
  REQUIRE(trees.size() == 3 + 9 + 54 + 405);

  std::vector<OrderedTree> ordered;
  for (const auto& t : trees) ordered.push_back(to_ordered(t));
  long mismatches = 0, pairs = 0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    auto dist = bfs(trees[i], labels, max_nodes);
    for (std::size_t j = 0; j < trees.size(); ++j) {
      ++pairs;
      if (tree_edit_distance(ordered[i], ordered[j]) != dist.at(key(trees[j]))) ++mismatches;
    }
  }
  CHECK(pairs == 471L * 471L);
  CHECK(mismatches == 0);
}

TEST_CASE("edit distance metric axioms on trees up to 3 nodes") {
  std::vector<OrderedTree> ts;
  for (int n = 1; n <= 3; ++n)
    for (auto& f : trees_of_size(n, 3)) ts.push_back(to_ordered(f));
  for (const auto& a : ts)
    for (const auto& b : ts) {
      int ab = tree_edit_distance(a, b);
      CHECK(ab == tree_edit_distance(b, a));
      CHECK((ab == 0) == (a.labels == b.labels && a.children == b.children));
      for (const auto& c : ts) CHECK(tree_edit_distance(a, c) <= ab + tree_edit_distance(b, c));
    }
}
