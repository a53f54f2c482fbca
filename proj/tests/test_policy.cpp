#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "test_support.hpp"
#include "vproof/policy.hpp"
#include "vproof/verifier.hpp"

using namespace vproof;
using vproof::testing::st;
using vproof::testing::tm;

namespace {

ProposerState state_for(const char* s) {
  ProposerState p;
  p.goal = st(s);
  p.obligation = p.goal;
  p.budget = 20;
  return p;
}

bool contains(const std::vector<ActionCandidate>& cs, const Justification& j) {
  return std::any_of(cs.begin(), cs.end(), [&](const ActionCandidate& a) { return a.just == j; });
}

class ForcedProposer : public Proposer {
 public:
  explicit ForcedProposer(ActionCandidate a) : a_(std::move(a)) {}
  Choice choose(const ProposerState&, const std::vector<ActionCandidate>&, const Eigen::VectorXd&,
                const Eigen::MatrixXd&, Rng&) override {
    return {-1, 0.0, a_};
  }

 private:
  ActionCandidate a_;
};

PpoSample toy_sample(double old_lp, double adv, int choice) {
  PpoSample s;
  s.phi = Eigen::VectorXd::Zero(kStateDim);
  s.phi << 1, 0.5, -0.3, 0, 0.2, 0.7, 1.1, 0;
  s.psi = Eigen::MatrixXd::Zero(3, kActionDim);
  s.psi(0, 0) = 1;
  s.psi(0, 12) = 0.5;
  s.psi(1, 4) = 1;
  s.psi(1, 10) = 1;
  s.psi(2, 9) = 1;
  s.psi(2, 13) = -0.25;
  s.choice = choice;
  s.old_log_prob = old_lp;
  s.advantage = adv;
  return s;
}

}  // namespace

TEST_CASE("enumeration contains the expected moves") {
  LemmaLibrary lib;
  auto refl = enumerate_actions(state_for("0 = 0"), lib);
  CHECK(std::any_of(refl.begin(), refl.end(), [](const ActionCandidate& a) { return a.kind == ActionKind::Refl; }));

  auto ax = enumerate_actions(state_for("(S(0) + 0) = S(0)"), lib);
  CHECK(contains(ax, Justification::axiom("A1", {{"x", tm("S(0)")}})));

  auto ind = enumerate_actions(state_for("forall x. (0 + x) = x"), lib);
  CHECK(contains(ind, Justification::induction("x")));
}

TEST_CASE("enumeration is deterministic") {
  LemmaLibrary lib = default_library();
  auto s = state_for("forall x y. (x + S(y)) = (S(0) * (y + x))");
  auto a = enumerate_actions(s, lib);
  auto b = enumerate_actions(s, lib);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].describe() == b[i].describe());
}

TEST_CASE("zero weights sample uniformly") {
  PolicyParams p;
  auto s = state_for("(S(0) + 0) = S(0)");
  auto cands = enumerate_actions(s, LemmaLibrary{});
  REQUIRE(cands.size() > 1);
  Eigen::VectorXd pi = softmax(p.scores(state_features(s), action_matrix(s, cands)));
  for (Eigen::Index i = 0; i < pi.size(); ++i) CHECK(pi(i) == doctest::Approx(1.0 / static_cast<double>(cands.size())));
  CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a single candidate has log-probability zero") {
  PolicyParams p;
  p.weights.setConstant(0.3);
  Rng rng(1);
  Eigen::MatrixXd psi = Eigen::MatrixXd::Ones(1, kActionDim);
  Sample s = sample_action(p, Eigen::VectorXd::Ones(kStateDim), psi, rng);
  CHECK(s.index == 0);
  CHECK(s.log_prob == doctest::Approx(0.0));
}

TEST_CASE("sampling frequencies match the softmax") {
  PolicyParams p;
  p.weights(0, 0) = 0.7;
  p.weights(0, 1) = -0.4;
  p.weights(1, 2) = 1.3;
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(kStateDim);
  phi(0) = 1;
  phi(1) = 0.5;
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(4, kActionDim);
  psi(0, 0) = 1;
  psi(1, 1) = 1;
  psi(2, 2) = 1;
  psi(3, 3) = 1;
  // independent oracle: explicit exponentials
  double z[4] = {0.7, -0.4, 0.65, 0.0};
  double den = 0;
  for (double v : z) den += std::exp(v);
  const int n = 100000;
  std::vector<int> hits(4, 0);
  Rng rng(2024);
  for (int i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(sample_action(p, phi, psi, rng).index)];
  for (int k = 0; k < 4; ++k) {
    const double pk = std::exp(z[k]) / den;
    const double sigma = std::sqrt(pk * (1 - pk) / n);
    CHECK(std::abs(hits[static_cast<std::size_t>(k)] / static_cast<double>(n) - pk) <= 3 * sigma);
  }
}

TEST_CASE("trivial goal completes in one step") {
  PolicyParams p;
  SoftmaxProposer prop(p);
  Rng rng(3);
  Episode e = rollout(prop, st("0 = 0"), LemmaLibrary{}, {}, rng);
  CHECK(e.complete);
  CHECK(e.valid);
  CHECK(e.proposals == 1);
  REQUIRE(e.steps.size() == 2);
  CHECK(e.steps[0].reward == 1);
  CHECK(e.steps[1].reward == 1);
}

TEST_CASE("citing an unknown lemma is rejected without touching the tree") {
  ActionCandidate a;
  a.kind = ActionKind::Close;
  a.just = Justification::cite("no_such_lemma");
  ForcedProposer prop(a);
  Rng rng(4);
  RolloutConfig cfg;
  cfg.max_steps = 3;
  Statement goal = st("(0 + 0) = 0");
  Episode e = rollout(prop, goal, default_library(), cfg, rng);
  CHECK(e.rejected == 3);
  CHECK_FALSE(e.complete);
  CHECK_FALSE(e.valid);
  for (std::size_t i = 0; i < 3; ++i) CHECK(e.steps[i].reward == -1);
  CHECK(e.steps.back().reward == -1);
  REQUIRE(e.attempt.size() == 1);
  CHECK(e.attempt.node(e.attempt.root).statement == goal);
}

TEST_CASE("rewards are all plus or minus one") {
  LemmaLibrary lib = default_library();
  PolicyParams p;
  SoftmaxProposer prop(p);
  for (const char* g : {"forall x. (0 + x) = x", "(S(0) * S(S(0))) = S(S(0))", "forall x y. (x + y) = (y + x)"}) {
    Rng rng(9);
    Episode e = rollout(prop, st(g), lib, {}, rng);
    for (const auto& s : e.steps) CHECK((s.reward == 1 || s.reward == -1));
    if (e.valid) CHECK(verify_tree(e.attempt, lib, {}).overall);
  }
}

TEST_CASE("n-step returns") {
  CHECK(n_step_returns({1.0}, 1, 0.9)[0] == doctest::Approx(1.0));
  CHECK(n_step_returns({1.0, 1.0, -1.0}, 2, 0.9)[0] == doctest::Approx(1.9));
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> r(1 + rng.below(12));
    for (auto& x : r) x = rng.chance(0.5) ? 1.0 : -1.0;
    const double gamma = 0.5 + 0.5 * rng.uniform();
    auto g = n_step_returns(r, static_cast<int>(r.size()), gamma);
    for (std::size_t t = 0; t < r.size(); ++t) {
      double mc = 0, d = 1;
      for (std::size_t k = t; k < r.size(); ++k, d *= gamma) mc += d * r[k];
      CHECK(g[t] == doctest::Approx(mc));
    }
  }
  CHECK_THROWS_AS(n_step_returns({1.0}, 0, 0.9), std::invalid_argument);
}

TEST_CASE("surrogate at ratio one is the mean advantage") {
  PolicyParams p;
  p.weights(0, 4) = 0.4;
  std::vector<PpoSample> batch;
  for (int c = 0; c < 3; ++c) {
    PpoSample s = toy_sample(0, 0.5 * c - 0.3, c);
    s.old_log_prob = log_softmax(p.scores(s.phi, s.psi))(c);
    batch.push_back(s);
  }
  const double mean = (-0.3 + 0.2 + 0.7) / 3;
  CHECK(clipped_surrogate(p, batch, 0.2) == doctest::Approx(mean));
}

TEST_CASE("clipped contribution") {
  PolicyParams p;  // uniform over 3: logp = -log 3
  PpoSample s = toy_sample(-std::log(3.0) - std::log(1.5), 1.0, 0);
  double frac = 0;
  CHECK(clipped_surrogate(p, {s}, 0.2, nullptr, &frac) == doctest::Approx(1.2));
  CHECK(frac == 1.0);
}

TEST_CASE("surrogate gradient matches central differences") {
  PolicyParams p;
  Rng rng(77);
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = 0.2 * (rng.uniform() - 0.5);
  std::vector<PpoSample> batch{toy_sample(-1.0, 0.8, 0), toy_sample(-1.3, -0.6, 1), toy_sample(-0.9, 1.4, 2),
                               toy_sample(-2.5, 0.5, 1)};
  Eigen::VectorXd g;
  clipped_surrogate(p, batch, 0.2, &g);
  Eigen::VectorXd fd(g.size());
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    PolicyParams a = p, b = p;
    a.weights.data()[i] += h;
    b.weights.data()[i] -= h;
    fd(i) = (clipped_surrogate(a, batch, 0.2) - clipped_surrogate(b, batch, 0.2)) / (2 * h);
  }
  REQUIRE(fd.norm() > 1e-3);
  CHECK((g - fd).norm() / fd.norm() < 1e-4);
}

TEST_CASE("non-finite batches abort the update") {
  PolicyParams p;
  PpoSample s = toy_sample(-1.0, std::nan(""), 0);
  TrainConfig cfg;
  UpdateDiagnostics d = ppo_update(p, {s}, cfg);
  CHECK(d.aborted);
  CHECK(p.weights.isZero());
  CHECK_THROWS_AS(ppo_update(p, {}, cfg), std::invalid_argument);
}

TEST_CASE("curriculum order") {
  InjectionConfig ic;
  ic.seed = 5;
  auto cb = build_corpus(ic, GenBounds{}, 60, default_library());
  auto order = curriculum_order(cb.items);
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(cb.items.size());
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(sorted == iota);
  for (std::size_t k = 1; k < order.size(); ++k) {
    Complexity a = complexity(cb.items[order[k - 1]].tree), b = complexity(cb.items[order[k]].tree);
    CHECK(a.depth <= b.depth);
    if (a.depth == b.depth) CHECK(a.syntactic <= b.syntactic);
  }
}

TEST_CASE("checkpoint round trip") {
  PolicyParams p;
  Rng rng(8);
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = rng.uniform() * 1e3 - 500;
  PolicyParams q = parse_checkpoint(checkpoint_text(p));
  CHECK(q.weights == p.weights);
  std::string bad = checkpoint_text(p);
  bad.replace(bad.find("feature_version 1"), 17, "feature_version 9");
  CHECK_THROWS_AS(parse_checkpoint(bad), CheckpointError);
  CHECK_THROWS_AS(parse_checkpoint("vproof-policy 2\n"), CheckpointError);
  CHECK_THROWS_AS(parse_checkpoint(checkpoint_text(p) + "1\n"), CheckpointError);
}

TEST_CASE("training raises mean reward on a small goal set") {
  LemmaLibrary lib = default_library();
  std::vector<Statement> goals;
  for (const char* g : {"(0 + 0) = 0", "(S(0) + 0) = S(0)", "(S(0) * 0) = 0", "(S(0) + S(0)) = S(S(0))",
                        "(0 * S(0)) = 0", "forall x. (x + 0) = x"})
    goals.push_back(st(g));
  TrainConfig cfg;
  cfg.updates = 30;
  cfg.episodes_per_update = 8;
  cfg.max_steps = 8;
  auto before = evaluate_policy({}, goals, lib, cfg.max_steps, 3);
  auto res = train_policy(goals, lib, cfg);
  CHECK(res.log.size() == 30);
  CHECK(res.log[0].rfind("update=0 mean_reward=", 0) == 0);
  auto after = evaluate_policy(res.params, goals, lib, cfg.max_steps, 3);
  CHECK(after.mean_reward > before.mean_reward);
  auto again = train_policy(goals, lib, cfg);
  CHECK(again.params.weights == res.params.weights);
  cfg.workers = 3;
  CHECK(train_policy(goals, lib, cfg).params.weights == res.params.weights);
}
