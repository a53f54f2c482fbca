#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>

#include "doctest.h"
#include "test_support.hpp"
#include "vproof/corpus.hpp"
#include "vproof/verifier.hpp"

using namespace vproof;

namespace {

bool has_rule(const ProofTree& t, Rule r) {
  return std::any_of(t.nodes.begin(), t.nodes.end(), [r](const ProofNode& n) { return n.just.rule == r; });
}

// first back edge met by a plain recursive DFS from the root
std::optional<std::pair<NodeId, NodeId>> back_edge(const ProofTree& t) {
  std::vector<int> state(t.size(), 0);
  std::optional<std::pair<NodeId, NodeId>> found;
  std::function<void(NodeId)> dfs = [&](NodeId n) {
    state[static_cast<std::size_t>(n)] = 1;
    for (NodeId c : t.node(n).children) {
      if (found) return;
      if (state[static_cast<std::size_t>(c)] == 1) {
        found = {n, c};
        return;
      }
      if (state[static_cast<std::size_t>(c)] == 0) dfs(c);
    }
    state[static_cast<std::size_t>(n)] = 2;
  };
  dfs(t.root);
  return found;
}

AnnotatedProof fake(std::uint64_t id, std::vector<ErrorMode> modes) {
  AnnotatedProof p;
  p.id = id;
  p.tree = vproof::testing::zero_add_tree();
  p.valid = modes.empty();
  p.modes = std::move(modes);
  return p;
}

long count_in(const std::vector<AnnotatedProof>& c, Split s, bool flawed) {
  return std::count_if(c.begin(), c.end(), [&](const AnnotatedProof& p) { return p.split == s && p.valid != flawed; });
}

}  // namespace

TEST_CASE("generation is deterministic") {
  LemmaLibrary lib = default_library();
  auto a = generate_valid(1, 7, {}, lib);
  auto b = generate_valid(1, 7, {}, lib);
  CHECK(save_corpus_text(a) == save_corpus_text(b));
  auto c = generate_valid(40, 7, {}, lib, 1);
  auto d = generate_valid(40, 7, {}, lib, 3);
  CHECK(save_corpus_text(c) == save_corpus_text(d));
  CHECK(c[0] == a[0]);
}

TEST_CASE("generated proofs verify and cover the rule set") {
  LemmaLibrary lib = default_library();
  auto batch = generate_valid(100, 21, {}, lib);
  int valid = 0, induction = 0;
  std::set<Rule> rules;
  for (const auto& p : batch) {
    valid += verify_tree(p.tree, lib, {}).overall;
    induction += has_rule(p.tree, Rule::Induction);
    for (const auto& n : p.tree.nodes) rules.insert(n.just.rule);
  }
  CHECK(valid == 100);
  CHECK(induction >= 20);
  for (Rule r : {Rule::Axiom, Rule::Trans, Rule::Cong, Rule::Induction, Rule::Hyp, Rule::Sym})
    CHECK(rules.count(r) == 1);
  CHECK((rules.count(Rule::CiteLemma) + rules.count(Rule::SubstLemma)) >= 1);
}

TEST_CASE("soundness harness over a larger batch") {
  LemmaLibrary lib = default_library();
  auto batch = generate_valid(1500, 99, {}, lib);
  int bad = 0, induction = 0;
  for (const auto& p : batch) {
    bad += !verify_tree(p.tree, lib, {}).overall;
    induction += has_rule(p.tree, Rule::Induction);
  }
  CHECK(bad == 0);
  CHECK(induction >= 300);
}

TEST_CASE("depth bound of one yields single-node leaves") {
  LemmaLibrary lib = default_library();
  GenBounds b;
  b.max_depth = 1;
  for (const auto& p : generate_valid(50, 3, b, lib)) {
    REQUIRE(p.tree.size() == 1);
    Rule r = p.tree.nodes[0].just.rule;
    CHECK((r == Rule::Refl || r == Rule::Axiom || r == Rule::CiteLemma));
    CHECK(verify_tree(p.tree, lib, {}).overall);
  }
}

TEST_CASE("impossible bounds raise a generation failure") {
  GenBounds b;
  b.max_depth = 0;
  CHECK_THROWS_AS(generate_tree(1, b, default_library()), GenerationFailure);
  GenBounds tiny;
  tiny.max_depth = 2;
  tiny.max_nodes = 2;
  tiny.induction_share = 1.0;
  tiny.attempts = 5;
  CHECK_THROWS_AS(generate_tree(1, tiny, default_library()), GenerationFailure);
}

TEST_CASE("each injection fails at the recorded locus") {
  LemmaLibrary lib = default_library();
  auto base = generate_valid(200, 5, {}, lib);
  std::vector<Statement> donors;
  for (const auto& n : base[0].tree.nodes) donors.push_back(n.statement);
  for (const auto& n : base[1].tree.nodes) donors.push_back(n.statement);
  int checked[4] = {0, 0, 0, 0};
  for (std::size_t i = 2; i < base.size(); ++i) {
    for (ErrorMode m : kErrorModes) {
      if (!injection_applicable(base[i].tree, m)) {
        CHECK_THROWS_AS(inject_error(base[i], m, i, lib, donors), InjectionInapplicable);
        continue;
      }
      AnnotatedProof q = inject_error(base[i], m, i, lib, donors);
      REQUIRE(q.injected_node);
      CHECK_FALSE(q.valid);
      CHECK(q.modes == std::vector<ErrorMode>{m});
      NodeId x = *q.injected_node;
      VerifyReport r = verify_tree(q.tree, lib, {});
      CHECK_FALSE(r.overall);
      const auto& vx = r.verdicts[static_cast<std::size_t>(x)];
      switch (m) {
        case ErrorMode::Hallucination:
          CHECK(r.failed_node == x);
          CHECK(vx == StepVerdict::invalid(Reason::UnknownLemma));
          break;
        case ErrorMode::TopoOrder: {
          CHECK(r.failed_node == x);
          REQUIRE(r.topo_error);
          auto edge = back_edge(q.tree);
          REQUIRE(edge);
          CHECK(r.topo_error->from == edge->first);
          CHECK(r.topo_error->to == edge->second);
          CHECK(edge->first == x);
          break;
        }
        case ErrorMode::IncompleteInduction:
          CHECK(r.failed_node == x);
          CHECK(vx == StepVerdict::invalid(Reason::MissingInductionCase));
          break;
        case ErrorMode::SemanticDrift: {
          NodeId parent = parents(q.tree)[static_cast<std::size_t>(x)];
          REQUIRE(parent >= 0);
          CHECK(r.verdicts[static_cast<std::size_t>(parent)] == StepVerdict::invalid(Reason::PremiseMismatch));
          CHECK(is_well_formed(q.tree.node(x).statement));
          break;
        }
      }
      ++checked[static_cast<int>(m)];
    }
  }
  for (int c : checked) CHECK(c > 20);
}

TEST_CASE("injection requires a valid proof") {
  LemmaLibrary lib = default_library();
  auto p = generate_valid(1, 1, {}, lib)[0];
  p.valid = false;
  p.modes = {ErrorMode::Hallucination};
  CHECK_THROWS_AS(inject_error(p, ErrorMode::Hallucination, 1, lib, {}), InjectionInapplicable);
}

TEST_CASE("apportion examples") {
  CHECK(apportion(1000, {0.23, 0.77}) == std::vector<long>{230, 770});
  CHECK(apportion(1000, {0.29, 0.24, 0.32, 0.15}) == std::vector<long>{290, 240, 320, 150});
  CHECK(apportion(23, {0.70, 0.15, 0.15}) == std::vector<long>{16, 4, 3});
  CHECK(apportion(7, {0.70, 0.15, 0.15}) == std::vector<long>{5, 1, 1});
  CHECK(apportion(3, {0.70, 0.15, 0.15}) == std::vector<long>{2, 1, 0});
  CHECK(apportion(10, {1, 0, 0}) == std::vector<long>{10, 0, 0});
  CHECK(apportion(0, {0.5, 0.5}) == std::vector<long>{0, 0});
  CHECK_THROWS(apportion(3, {0, 0}));
}

TEST_CASE("apportion is floor-or-ceil and favours larger remainders") {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 500; ++iter) {
    std::size_t k = 1 + rng() % 6;
    std::vector<long> iw(k);
    long wsum = 0;
    for (auto& w : iw) wsum += (w = static_cast<long>(rng() % 100));
    if (wsum == 0) continue;
    std::vector<double> w(iw.begin(), iw.end());
    long total = static_cast<long>(rng() % 500);
    auto got = apportion(total, w);
    long sum = 0;
    for (std::size_t i = 0; i < k; ++i) {
      sum += got[i];
      long fl = total * iw[i] / wsum;
      CHECK((got[i] == fl || got[i] == fl + 1));
      for (std::size_t j = 0; j < k; ++j) {
        long rem_i = total * iw[i] % wsum, rem_j = total * iw[j] % wsum;
        bool up_i = got[i] > fl, up_j = got[j] > total * iw[j] / wsum;
        if (up_j && !up_i) CHECK((rem_j > rem_i || (rem_j == rem_i && j < i)));
      }
    }
    CHECK(sum == total);
  }
}

TEST_CASE("corpus counts follow the configuration") {
  LemmaLibrary lib = default_library();
  InjectionConfig cfg;
  cfg.seed = 4;
  CorpusBuild b = build_corpus(cfg, {}, 1000, lib);
  CHECK(b.manifest.base_flawed == 230);
  CHECK(b.manifest.augmented == 345);
  CHECK(b.items.size() == 1345);
  long base_flawed = std::count_if(b.items.begin(), b.items.begin() + 1000, [](const auto& p) { return !p.valid; });
  CHECK(base_flawed == 230);
  std::map<ErrorMode, long> base_modes, aug_modes;
  for (std::size_t i = 0; i < b.items.size(); ++i) {
    const auto& p = b.items[i];
    CHECK(p.id == i);
    CHECK(p.valid == p.modes.empty());
    CHECK(p.modes.size() <= 1);
    if (p.valid) continue;
    (i < 1000 ? base_modes : aug_modes)[p.modes[0]]++;
  }
  // 230 * (.29, .24, .32, .15) = 66.7, 55.2, 73.6, 34.5
  CHECK(base_modes[ErrorMode::Hallucination] == 67);
  CHECK(base_modes[ErrorMode::TopoOrder] == 55);
  CHECK(base_modes[ErrorMode::IncompleteInduction] == 74);
  CHECK(base_modes[ErrorMode::SemanticDrift] == 34);
  // 345 * weights = 100.05, 82.8, 110.4, 51.75
  CHECK(aug_modes[ErrorMode::Hallucination] == 100);
  CHECK(aug_modes[ErrorMode::TopoOrder] == 83);
  CHECK(aug_modes[ErrorMode::IncompleteInduction] == 110);
  CHECK(aug_modes[ErrorMode::SemanticDrift] == 52);
  CHECK(b.manifest.signature_counts.at("valid") == 770);
}

TEST_CASE("corpus build is independent of worker count") {
  LemmaLibrary lib = default_library();
  InjectionConfig cfg;
  cfg.seed = 9;
  auto a = build_corpus(cfg, {}, 120, lib, 1);
  auto b = build_corpus(cfg, {}, 120, lib, 4);
  CHECK(save_corpus_text(a.items) == save_corpus_text(b.items));
}

TEST_CASE("invalid injection configs are rejected") {
  InjectionConfig c;
  c.flawed_fraction = 1.0;
  CHECK_THROWS(c.validate());
  InjectionConfig d;
  d.mode_weights = {0, 0, 0, 0};
  CHECK_THROWS(d.validate());
  SplitConfig s;
  s.ratios = {0.5, 0.2, 0.2};
  CHECK_THROWS(s.validate());
}

TEST_CASE("split worked example: 23 flawed of 100") {
  std::vector<AnnotatedProof> c;
  for (int i = 0; i < 77; ++i) c.push_back(fake(c.size(), {}));
  for (int i = 0; i < 23; ++i) c.push_back(fake(c.size(), {ErrorMode::Hallucination}));
  SplitResult r = assign_splits(c, {});
  CHECK(count_in(c, Split::Train, true) == 16);
  CHECK(count_in(c, Split::Val, true) + count_in(c, Split::Test, true) == 7);
  CHECK(r.worst_scaled_deviation <= 1.0);
  for (const auto& p : c) CHECK(p.split != Split::Unassigned);
}

TEST_CASE("split with four flawed strata keeps train at 16") {
  std::vector<AnnotatedProof> c;
  for (int i = 0; i < 77; ++i) c.push_back(fake(c.size(), {}));
  const std::pair<ErrorMode, int> strata[] = {{ErrorMode::Hallucination, 7},
                                              {ErrorMode::TopoOrder, 6},
                                              {ErrorMode::IncompleteInduction, 7},
                                              {ErrorMode::SemanticDrift, 3}};
  for (auto [m, n] : strata)
    for (int i = 0; i < n; ++i) c.push_back(fake(c.size(), {m}));
  SplitResult r = assign_splits(c, {});
  CHECK(count_in(c, Split::Train, true) == 16);
  CHECK(r.histogram["train"]["Hallucination"] == 5);
  CHECK(r.histogram["train"]["TopoOrder"] == 4);
  CHECK(r.histogram["train"]["IncompleteInduction"] == 5);
  CHECK(r.histogram["train"]["SemanticDrift"] == 2);
  CHECK(r.worst_scaled_deviation <= 1.0);
}

TEST_CASE("split distribution bound on a generated corpus") {
  LemmaLibrary lib = default_library();
  InjectionConfig cfg;
  cfg.seed = 2;
  auto items = build_corpus(cfg, {}, 700, lib).items;
  SplitConfig sc;
  sc.seed = 5;
  SplitResult r = assign_splits(items, sc);
  std::map<std::string, long> overall;
  for (const auto& p : items) ++overall[p.signature()];
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    std::map<std::string, long> in;
    long n = 0;
    for (const auto& p : items)
      if (p.split == s) ++in[p.signature()], ++n;
    REQUIRE(n > 0);
    for (const auto& [sig, total] : overall) {
      double dev = std::abs(static_cast<double>(in[sig]) / n - static_cast<double>(total) / items.size());
      CHECK(dev <= 1.0 / n + 1e-12);
    }
  }
  CHECK(r.worst_scaled_deviation <= 1.0 + 1e-12);
}

TEST_CASE("split edge cases") {
  std::vector<AnnotatedProof> c;
  for (int i = 0; i < 20; ++i) c.push_back(fake(c.size(), {}));
  c.push_back(fake(c.size(), {ErrorMode::TopoOrder}));
  SplitConfig all_train;
  all_train.ratios = {1, 0, 0};
  auto copy = c;
  assign_splits(copy, all_train);
  for (const auto& p : copy) CHECK(p.split == Split::Train);

  SplitResult r = assign_splits(c, {});
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("TopoOrder") != std::string::npos);
  CHECK(c.back().split == Split::Train);

  auto again = c;
  for (auto& p : again) p.split = Split::Unassigned;
  assign_splits(again, {});
  CHECK(again == c);
  auto other = c;
  SplitConfig s2;
  s2.seed = 77;
  assign_splits(other, s2);
  CHECK_FALSE(other == c);
}

TEST_CASE("record round trips") {
  LemmaLibrary lib = default_library();
  CHECK(save_corpus_text({}).empty());
  CHECK(load_corpus_text("").empty());

  InjectionConfig cfg;
  cfg.seed = 12;
  auto items = build_corpus(cfg, {}, 7500, lib).items;
  assign_splits(items, {});
  REQUIRE(items.size() >= 10000);
  std::string text = save_corpus_text(items);
  auto back = load_corpus_text(text);
  CHECK(back == items);
  CHECK(save_corpus_text(back) == text);

  auto path = (std::filesystem::temp_directory_path() / "vproof_corpus_test.jsonl").string();
  std::vector<AnnotatedProof> head(items.begin(), items.begin() + 50);
  save_corpus(path, head);
  CHECK(load_corpus(path) == head);
  save_corpus(path, {});
  CHECK(load_corpus(path).empty());
  std::remove(path.c_str());
  CHECK_THROWS(load_corpus(path));
}

TEST_CASE("record format errors") {
  LemmaLibrary lib = default_library();
  auto p = generate_valid(1, 3, {}, lib)[0];
  std::string rec = to_record(p);
  CHECK(rec.rfind("{\"version\":1,\"id\":0,\"label\":\"valid\",\"modes\":[],\"injected_node\":null,", 0) == 0);

  std::string v2 = rec;
  v2.replace(v2.find("\"version\":1"), 11, "\"version\":2");
  try {
    from_record(v2, 4);
    FAIL("accepted version 2");
  } catch (const CorpusFormatError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  CHECK_THROWS_AS(from_record("{\"id\":0}"), CorpusFormatError);
  CHECK_THROWS_AS(from_record("not json"), CorpusFormatError);
  std::string extra = rec;
  extra.insert(extra.size() - 1, ",\"note\":1");
  CHECK_THROWS_AS(from_record(extra), CorpusFormatError);
  std::string lying = rec;
  lying.replace(lying.find("\"valid\""), 7, "\"flawed\"");
  CHECK_THROWS_AS(from_record(lying), CorpusFormatError);
  try {
    load_corpus_text(rec + "\n" + rec.substr(0, 20) + "\n");
    FAIL("accepted a truncated record");
  } catch (const CorpusFormatError& e) {
    CHECK(e.line() == 2);
  }
}
