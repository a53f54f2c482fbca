// One PASS/FAIL line per acceptance criterion.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "app.hpp"
#include "ted_oracle.hpp"
#include "vproof/analysis.hpp"
#include "vproof/hashing.hpp"

namespace fs = std::filesystem;
using namespace vproof;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Result {
  bool pass = false;
  std::string detail;
};

struct Desk {
  app::RunConfig cfg;
  LemmaLibrary lib = default_library();
  std::vector<AnnotatedProof> items;
  std::vector<VerifyReport> reports;
  PolicyParams trained;
  bool have_policy = false;

  std::vector<const AnnotatedProof*> in(Split s, bool flawed_only = false) const {
    std::vector<const AnnotatedProof*> out;
    for (const auto& p : items)
      if (p.split == s && (!flawed_only || !p.valid)) out.push_back(&p);
    return out;
  }
};

Desk make_desk(const app::RunConfig& cfg) {
  Desk d;
  d.cfg = cfg;
  d.items = build_corpus(cfg.injection, cfg.bounds, cfg.corpus_size, d.lib, cfg.workers).items;
  assign_splits(d.items, cfg.split);
  std::vector<ProofTree> trees;
  for (const auto& p : d.items) trees.push_back(p.tree);
  d.reports = verify_batch(trees, d.lib, cfg.verifier).reports;
  return d;
}

const PolicyParams& desk_policy(Desk& d) {
  if (!d.have_policy) {
    std::vector<AnnotatedProof> train;
    for (auto* p : d.in(Split::Train)) train.push_back(*p);
    std::vector<Statement> goals;
    for (std::size_t i : curriculum_order(train)) goals.push_back(train[i].tree.goal);
    d.trained = train_policy(goals, d.lib, d.cfg.train).params;
    d.have_policy = true;
  }
  return d.trained;
}

// 1 --------------------------------------------------------------------------

Result kernel_fidelity(const app::RunConfig& cfg) {
  const auto t0 = Clock::now();
  LemmaLibrary lib = default_library();
  InjectionConfig ic = cfg.injection;
  auto items = build_corpus(ic, cfg.bounds, 5000, lib, 1).items;
  long valid = 0, valid_ok = 0, rule = 0, rule_ok = 0, drift = 0, drift_ok = 0;
  for (const auto& p : items) {
    VerifyReport r = verify_tree(p.tree, lib, cfg.verifier);
    if (p.valid) {
      ++valid;
      valid_ok += r.overall;
      continue;
    }
    const NodeId x = p.injected_node.value_or(-1);
    if (x < 0 || r.overall) {
      (p.modes.at(0) == ErrorMode::SemanticDrift ? drift : rule) += 1;
      continue;
    }
    const auto& vx = r.verdicts[static_cast<std::size_t>(x)];
    switch (p.modes.at(0)) {
      case ErrorMode::Hallucination:
        ++rule;
        rule_ok += r.failed_node == x && vx.reason == Reason::UnknownLemma;
        break;
      case ErrorMode::TopoOrder:
        ++rule;
        rule_ok += r.failed_node == x && r.topo_error && r.topo_error->from == x;
        break;
      case ErrorMode::IncompleteInduction:
        ++rule;
        rule_ok += r.failed_node == x && vx.reason == Reason::MissingInductionCase;
        break;
      case ErrorMode::SemanticDrift: {
        ++drift;
        const NodeId parent = parents(p.tree)[static_cast<std::size_t>(x)];
        drift_ok += parent >= 0 && r.verdicts[static_cast<std::size_t>(parent)].status == StepStatus::Invalid;
        break;
      }
    }
  }
  const double secs = seconds_since(t0);
  const double drift_rate = drift ? static_cast<double>(drift_ok) / static_cast<double>(drift) : 0.0;
  const bool pass = valid > 0 && valid_ok == valid && rule_ok == rule && drift_rate >= 0.99 && secs < 60;
  return {pass, fmt("valid %ld/%ld, rule-mode loci %ld/%ld, drift parents %ld/%ld (%.4f), %zu proofs in %.1f s", valid_ok,
                    valid, rule_ok, rule, drift_ok, drift, drift_rate, items.size(), secs)};
}

// 2 --------------------------------------------------------------------------

Result ted_oracle() {
  using namespace vproof::testing::ted;
  const auto t0 = Clock::now();
  const int labels = 3, max_nodes = 4;
  std::vector<Forest> trees;
  for (int n = 1; n <= max_nodes; ++n)
    for (auto& t : trees_of_size(n, labels)) trees.push_back(t);
  std::vector<OrderedTree> ordered;
  for (const auto& t : trees) ordered.push_back(to_ordered(t));
  long pairs = 0, mismatches = 0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    auto dist = bfs(trees[i], labels, max_nodes);
    for (std::size_t j = 0; j < trees.size(); ++j) {
      ++pairs;
      mismatches += tree_edit_distance(ordered[i], ordered[j]) != dist.at(key(trees[j]));
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 300,
          fmt("%zu trees, %ld pairs, %ld mismatches, %.1f s", trees.size(), pairs, mismatches, secs)};
}

// 3 --------------------------------------------------------------------------

Result memo_speedup(const app::RunConfig& cfg) {
  LemmaLibrary lib = default_library();
  auto base = generate_valid(500, derive_seed(cfg.seed, 3), cfg.bounds, lib, 1);
  std::vector<ProofTree> batch;
  for (const auto& p : base) batch.push_back(p.tree);
  // the second half re-derives each goal through a double symmetry over a
  // full copy of an earlier proof
  for (const auto& p : base) {
    Fragment inner = to_fragment(p.tree, p.tree.root);
    const Statement& g = p.tree.goal;
    Fragment flip{Statement{g.binders, g.rhs, g.lhs}, Justification::sym(), {inner}};
    batch.push_back(from_fragment(Fragment{g, Justification::sym(), {flip}}));
  }
  std::size_t nodes = 0, dup_nodes = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    nodes += batch[i].size();
    if (i >= base.size()) dup_nodes += batch[i].size() - 2;
  }
  double hit_rate = 0;
  auto timed = [&](bool memo, std::vector<VerifyReport>* out) {
    VerifierConfig v = cfg.verifier;
    v.memoize = memo;
    v.workers = 1;
    std::vector<double> t;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = Clock::now();
      auto r = verify_batch(batch, lib, v);
      t.push_back(seconds_since(t0));
      if (rep == 0 && memo) hit_rate = r.stats.hit_rate();
      if (rep == 0 && out) *out = std::move(r.reports);
    }
    std::sort(t.begin(), t.end());
    return t[1];
  };
  std::vector<VerifyReport> off, on;
  const double t_off = timed(false, &off), t_on = timed(true, &on);
  bool same = off.size() == on.size();
  for (std::size_t i = 0; same && i < off.size(); ++i) same = off[i].same_verdicts(on[i]);
  const double speedup = t_off / t_on;
  return {same && speedup >= 1.5,
          fmt("%zu trees, %.0f%% of nodes in duplicated subtrees, hit rate %.2f, median off %.2f ms, on %.2f ms, "
              "speedup %.2fx, verdicts %s",
              batch.size(), 100.0 * static_cast<double>(dup_nodes) / static_cast<double>(nodes), hit_rate, 1e3 * t_off,
              1e3 * t_on, speedup, same ? "identical" : "DIFFER")};
}

// 4 --------------------------------------------------------------------------

Result split_preservation(const Desk& d) {
  std::map<std::string, long> overall;
  for (const auto& p : d.items) ++overall[p.signature()];
  double worst = 0;
  bool ok = true;
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    std::map<std::string, long> in;
    long n = 0;
    for (const auto& p : d.items)
      if (p.split == s) ++in[p.signature()], ++n;
    if (n == 0) return {false, "empty split"};
    for (const auto& [sig, total] : overall) {
      const double dev = std::abs(static_cast<double>(in[sig]) / static_cast<double>(n) -
                                  static_cast<double>(total) / static_cast<double>(d.items.size()));
      worst = std::max(worst, dev * static_cast<double>(n));
      ok = ok && dev <= 1.0 / static_cast<double>(n) + 1e-12;
    }
  }
  // 100-item example: 77 valid, 23 flawed of one mode
  std::vector<AnnotatedProof> c(100);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i].id = i;
    c[i].tree = from_fragment(Fragment{parse_statement("0 = 0"), Justification::refl(), {}});
    if (i >= 77) {
      c[i].valid = false;
      c[i].modes = {ErrorMode::Hallucination};
    }
  }
  assign_splits(c, {});
  const long train_flawed = std::count_if(c.begin(), c.end(), [](const auto& p) { return p.split == Split::Train && !p.valid; });
  return {ok && train_flawed == 16,
          fmt("%zu proofs, %zu signatures, worst deviation x |split| = %.3f (bound 1), worked example train flawed = %ld",
              d.items.size(), overall.size(), worst, train_flawed)};
}

// 5 --------------------------------------------------------------------------

std::vector<Statement> held_out_goals(const Desk& d) {
  std::vector<Statement> goals;
  std::set<std::string> seen;
  for (auto* p : d.in(Split::Test))
    if (goals.size() < d.cfg.eval_goals && seen.insert(to_string(p->tree.goal)).second) goals.push_back(p->tree.goal);
  return goals;
}

Result rl_signal(Desk& d) {
  // gradient check on a fixed 3-action case
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
  std::vector<PpoSample> batch;
  const double olds[] = {-1.0, -1.3, -0.9, -2.5}, advs[] = {0.8, -0.6, 1.4, 0.5};
  const int choice[] = {0, 1, 2, 1};
  for (int i = 0; i < 4; ++i) {
    s.old_log_prob = olds[i];
    s.advantage = advs[i];
    s.choice = choice[i];
    batch.push_back(s);
  }
  PolicyParams p;
  std::mt19937_64 g(77);
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = 0.2 * (std::uniform_real_distribution<>(0, 1)(g) - 0.5);
  Eigen::VectorXd grad;
  clipped_surrogate(p, batch, 0.2, &grad);
  Eigen::VectorXd fd(grad.size());
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    PolicyParams a = p, b = p;
    a.weights.data()[i] += h;
    b.weights.data()[i] -= h;
    fd(i) = (clipped_surrogate(a, batch, 0.2) - clipped_surrogate(b, batch, 0.2)) / (2 * h);
  }
  const double grad_err = (grad - fd).norm() / fd.norm();

  const auto t0 = Clock::now();
  const PolicyParams& trained = desk_policy(d);
  const double train_secs = seconds_since(t0);
  const auto goals = held_out_goals(d);
  const std::uint64_t seed = derive_seed(d.cfg.seed, 0, 17);
  const double before = evaluate_policy(PolicyParams{}, goals, d.lib, d.cfg.train.max_steps, seed).fpsr;
  const double after = evaluate_policy(trained, goals, d.lib, d.cfg.train.max_steps, seed).fpsr;
  const bool pass = after >= 2 * before && after > before && train_secs < 600 && grad_err < 1e-4;
  return {pass, fmt("held-out FPSR %.3f -> %.3f (%.2fx) over %zu goals, %d updates in %.1f s, gradient rel. error %.2e",
                    before, after, before > 0 ? after / before : INFINITY, goals.size(), d.cfg.train.updates, train_secs,
                    grad_err)};
}

// 6 --------------------------------------------------------------------------

Result correction(Desk& d) {
  const PolicyParams& policy = desk_policy(d);
  auto flawed = d.in(Split::Test, true);
  if (flawed.size() > 500) flawed.resize(500);
  std::vector<RunRecord> before, after;
  long reverify_fail = 0;
  for (auto* p : flawed) {
    VerifyReport r0 = verify_tree(p->tree, d.lib, d.cfg.verifier);
    before.push_back({p->id, p->tree, r0, std::nullopt, p->split});
    CorrectionOutcome o = correct_loop(p->tree, d.lib, policy, d.cfg.correct, d.cfg.verifier);
    VerifyCache fresh;
    VerifyReport r1 = verify_tree(o.tree, d.lib, d.cfg.verifier, &fresh);
    if (o.status == CorrectionStatus::Repaired && !r1.overall) ++reverify_fail;
    after.push_back({p->id, o.tree, r1, o, p->split});
  }
  if (before.empty()) return {false, "no flawed test proofs"};
  const double f0 = fpsr(before), f1 = fpsr(after);
  const EdptSummary e = edpt(after);
  const bool pass = flawed.size() == 500 && f1 - f0 >= 0.10 && reverify_fail == 0 && e.counted > 0 && e.mean > 0;
  return {pass, fmt("%zu flawed test proofs, FPSR %.1f%% -> %.1f%% (+%.1f points), %ld re-verification failures, "
                    "mean EDPT %.2f over %zu repaired",
                    flawed.size(), 100 * f0, 100 * f1, 100 * (f1 - f0), reverify_fail, e.mean, e.counted)};
}

// 7 --------------------------------------------------------------------------

Result detector(const Desk& d) {
  std::vector<AnnotatedProof> calib, test;
  for (const auto& p : d.items) (p.split == Split::Test ? test : calib).push_back(p);
  const double tau = calibrate_tau(calib, d.lib);
  DetectorScores s = detector_scores(test, d.lib, tau);
  bool rules = true;
  for (ErrorMode m : {ErrorMode::Hallucination, ErrorMode::TopoOrder, ErrorMode::IncompleteInduction})
    rules = rules && s.per_mode[m].recall() == 1.0;
  const bool pass = s.accuracy >= 0.90 && s.macro_recall >= 0.85 && rules;
  return {pass, fmt("tau %.2f, accuracy %.4f (>= 0.90), macro recall %.4f (>= 0.85), rule modes at 100%%: %s, "
                    "drift recall %.4f",
                    tau, s.accuracy, s.macro_recall, rules ? "yes" : "NO",
                    s.per_mode[ErrorMode::SemanticDrift].recall())};
}

// 8 --------------------------------------------------------------------------

Result statistics(const Desk& d) {
  std::mt19937_64 g(8);
  std::normal_distribution<double> nd;
  const Eigen::Index n = 200, k = 3;
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(g);
  Eigen::Vector3d beta(1.5, -2.0, 0.25);
  Eigen::VectorXd y = (x * beta).array() + 0.75;
  RegressionResult r = ols_regression(x, y);
  const double coef_err = std::max((r.coefficients - beta).cwiseAbs().cwiseQuotient(beta.cwiseAbs()).maxCoeff(),
                                   std::abs(r.intercept - 0.75) / 0.75);
  std::vector<double> a, b, c;
  for (int i = 0; i < 20; ++i) {
    a.push_back(i);
    b.push_back(3.0 * i - 2);
    c.push_back(-0.5 * i + 7);
  }
  const double rp = pearson(a, b), rn = pearson(a, c);
  std::vector<double> hall, succ;
  std::vector<AnnotatedProof> calib;
  for (const auto& p : d.items)
    if (p.split != Split::Test) calib.push_back(p);
  const double tau = calibrate_tau(calib, d.lib);
  for (std::size_t i = 0; i < d.items.size(); ++i) {
    hall.push_back(mode_frequencies(d.items[i].tree, d.lib, tau)[0]);
    succ.push_back(d.reports[i].overall ? 1.0 : 0.0);
  }
  const double rc = pearson(hall, succ);
  const bool pass = coef_err <= 1e-6 && std::abs(r.r2 - 1) <= 1e-9 && rp == 1.0 && rn == -1.0 && rc < 0;
  return {pass, fmt("OLS max rel. coefficient error %.2e, R2 - 1 = %.1e, pearson %+.1f / %+.1f, "
                    "corpus r(hallucination, success) = %+.4f",
                    coef_err, r.r2 - 1, rp, rn, rc)};
}

// 9 --------------------------------------------------------------------------

Result drift_direction(const Desk& d) {
  double sv = 0, sd = 0;
  long nv = 0, ndr = 0;
  for (const auto& p : d.items) {
    const double drop = drift_profile(p.tree).max_drop;
    if (p.valid) {
      sv += drop;
      ++nv;
    } else if (p.modes == std::vector<ErrorMode>{ErrorMode::SemanticDrift}) {
      sd += drop;
      ++ndr;
    }
  }
  if (!nv || !ndr) return {false, "no valid or drift proofs"};
  const double mv = sv / static_cast<double>(nv), md = sd / static_cast<double>(ndr);
  return {md > mv && md - mv >= 0.05,
          fmt("mean max drop: drift %.4f (%ld), valid %.4f (%ld), gap %.4f", md, ndr, mv, nv, md - mv)};
}

// 10 -------------------------------------------------------------------------

Result determinism(const app::RunConfig& cfg) {
  const fs::path root = fs::temp_directory_path() / ("vproof_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  app::RunConfig one = cfg, three = cfg;
  one.workers = 1;
  three.workers = 3;
  one.finalize();
  three.finalize();
  const auto t0 = Clock::now();
  app::cmd_bench(one, {root / "a", false, nullptr});
  app::cmd_bench(one, {root / "b", false, nullptr});
  app::cmd_bench(three, {root / "c", false, nullptr});
  const double secs = seconds_since(t0);
  std::vector<fs::path> files;
  for (const char* sub : {"corpus", "reports"})
    for (const auto& e : fs::directory_iterator(root / "a" / sub)) files.push_back(fs::relative(e.path(), root / "a"));
  std::sort(files.begin(), files.end());
  long differing = 0;
  for (const auto& f : files)
    for (const char* other : {"b", "c"}) {
      std::error_code ec;
      if (!fs::exists(root / other / f, ec) || app::read_file(root / "a" / f) != app::read_file(root / other / f)) ++differing;
    }
  fs::remove_all(root);
  return {differing == 0 && !files.empty(),
          fmt("%zu corpus/report files compared across 3 runs (workers 1, 1, 3), %ld differ, %.1f s", files.size(),
              differing, secs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Acceptance checks"};
  std::string config = VPROOF_DESK_CONFIG;
  std::vector<int> only;
  cli.add_option("-c,--config", config, "desk configuration")->check(CLI::ExistingFile);
  cli.add_option("--only", only, "criteria to run (default: all)")->check(CLI::Range(1, 10));
  CLI11_PARSE(cli, argc, argv);

  app::RunConfig cfg;
  try {
    cfg = app::load_config(config);
  } catch (const app::AppError& e) {
    std::cerr << "acceptance: " << e.what() << "\n";
    return e.code();
  }
  auto want = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };

  std::optional<Desk> desk;
  auto get_desk = [&]() -> Desk& {
    if (!desk) desk = make_desk(cfg);
    return *desk;
  };
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
      {"kernel soundness and fault fidelity", [&] { return kernel_fidelity(cfg); }},
      {"tree edit distance oracle", [] { return ted_oracle(); }},
      {"memoized verification speedup", [&] { return memo_speedup(cfg); }},
      {"split distribution preservation", [&] { return split_preservation(get_desk()); }},
      {"RL learning signal", [&] { return rl_signal(get_desk()); }},
      {"correction effectiveness", [&] { return correction(get_desk()); }},
      {"error-mode detector", [&] { return detector(get_desk()); }},
      {"statistics engine", [&] { return statistics(get_desk()); }},
      {"drift direction", [&] { return drift_direction(get_desk()); }},
      {"end-to-end determinism", [&] { return determinism(cfg); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!want(n)) continue;
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("criterion %2d %s  %s: %s\n", n, r.pass ? "PASS" : "FAIL", criteria[i].first, r.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
