#include <cmath>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "vproof/analysis.hpp"
#include "vproof/features.hpp"

using namespace vproof;
using vproof::testing::st;
using vproof::testing::zero_add_tree;

namespace {

RunRecord record_with(int valid_nodes, int total_nodes, bool overall) {
  RunRecord r;
  r.report.verdicts.assign(static_cast<std::size_t>(total_nodes), StepVerdict::invalid(Reason::PremiseMismatch));
  for (int i = 0; i < valid_nodes; ++i) r.report.verdicts[static_cast<std::size_t>(i)] = StepVerdict::valid();
  r.report.overall = overall;
  r.attempt.nodes.resize(static_cast<std::size_t>(total_nodes));
  return r;
}

AnnotatedProof labeled(ProofTree t, std::vector<ErrorMode> modes) {
  AnnotatedProof p;
  p.tree = std::move(t);
  p.valid = modes.empty();
  p.modes = std::move(modes);
  return p;
}

}  // namespace

TEST_CASE("fpsr counts fully verified records") {
  std::vector<RunRecord> rs;
  for (int i = 0; i < 1000; ++i) rs.push_back(record_with(1, 1, i < 684));
  CHECK(fpsr(rs) == doctest::Approx(0.684));
  std::vector<RunRecord> all(5, record_with(2, 2, true)), none(5, record_with(0, 2, false));
  CHECK(fpsr(all) == 1.0);
  CHECK(fpsr(none) == 0.0);
  CHECK_THROWS_AS(fpsr({}), std::invalid_argument);
}

TEST_CASE("ppc pools nodes across records") {
  CHECK(ppc({record_with(3, 3, true)}) == 1.0);
  CHECK(ppc({record_with(4, 5, false)}) == doctest::Approx(0.8));
  // per-record mean would be (1 + 1/3) / 2; pooled is 2 / 4
  std::vector<RunRecord> rs{record_with(1, 1, true), record_with(1, 3, false)};
  CHECK(ppc(rs) == doctest::Approx(0.5));
  CHECK(ppc(rs) != doctest::Approx((1.0 + 1.0 / 3.0) / 2.0));
}

TEST_CASE("edpt over repaired records") {
  LemmaLibrary lib;
  RunRecord ok;
  ok.attempt = zero_add_tree();
  ok.report = verify_tree(ok.attempt, lib, {});
  ok.correction = correct_loop(ok.attempt, lib, PolicyParams{}, {});
  CHECK(edpt({ok}).mean == 0.0);

  // a single relabel: unknown citation replaced by the axiom it should name
  ProofTree bad = from_fragment(Fragment{st("(S(0) + 0) = S(0)"), Justification::cite("nope"), {}});
  RunRecord fixed;
  fixed.correction = correct_loop(bad, lib, PolicyParams{}, {});
  REQUIRE(fixed.correction->status == CorrectionStatus::Repaired);
  fixed.attempt = fixed.correction->tree;
  fixed.report = verify_tree(fixed.attempt, lib, {});
  CHECK(edpt({fixed}).mean == 1.0);

  RunRecord none = record_with(0, 1, false);
  EdptSummary s = edpt({ok, fixed, none});
  CHECK(s.counted == 2);
  CHECK(s.excluded == 1);
  CHECK(s.mean == doctest::Approx(0.5));
}

TEST_CASE("cosine properties and drift profile") {
  Embedding v;
  v << 0.2, 0.1, 0.3, 0.0, 0.4, 0.5, 0.33;
  Embedding w;
  w << 0.0, 0.5, 0.1, 0.4, 0.0, 0.25, 0.0;
  CHECK(cosine(v, v) == doctest::Approx(1.0));
  CHECK(cosine(3.0 * v, 0.5 * w) == doctest::Approx(cosine(v, w)));
  Embedding a = Embedding::Zero(), b = Embedding::Zero();
  a(0) = 1;
  b(1) = 2;
  CHECK(cosine(a, b) == 0.0);

  Fragment leaf{st("(0 + 0) = 0"), Justification::refl(), {}};
  ProofTree same = from_fragment(Fragment{st("(0 + 0) = 0"), Justification::sym(), {leaf}});
  DriftProfile p = drift_profile(same);
  REQUIRE(p.similarities.size() == 1);
  CHECK(p.similarities[0] == doctest::Approx(1.0));
  CHECK(p.max_drop == doctest::Approx(0.0));
}

TEST_CASE("drifted trees drop further than valid ones") {
  LemmaLibrary lib = default_library();
  InjectionConfig ic;
  ic.seed = 13;
  auto cb = build_corpus(ic, GenBounds{}, 800, lib);
  double valid = 0, drift = 0;
  int nv = 0, nd = 0;
  for (const auto& p : cb.items) {
    const double d = drift_profile(p.tree).max_drop;
    if (p.valid) {
      valid += d;
      ++nv;
    } else if (p.modes[0] == ErrorMode::SemanticDrift) {
      drift += d;
      ++nd;
    }
  }
  REQUIRE(nv > 0);
  REQUIRE(nd > 0);
  CHECK(drift / nd > valid / nv);
}

TEST_CASE("detector rules") {
  LemmaLibrary lib;
  AnnotatedProof ok = labeled(zero_add_tree(), {});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto h = inject_error(ok, ErrorMode::Hallucination, seed, lib, {});
    CHECK(detect_modes(h, lib, 0.99) == std::set<ErrorMode>{ErrorMode::Hallucination});
    auto t = inject_error(ok, ErrorMode::TopoOrder, seed, lib, {});
    CHECK(detect_modes(t, lib, 0.99).count(ErrorMode::TopoOrder) == 1);
    auto i = inject_error(ok, ErrorMode::IncompleteInduction, seed, lib, {});
    CHECK(detect_modes(i, lib, 0.99).count(ErrorMode::IncompleteInduction) == 1);
  }
  const double above = drift_profile(ok.tree).max_drop + 0.01;
  CHECK(detect_modes(ok, lib, std::min(0.99, above)).empty());
  CHECK_THROWS_AS(detect_modes(ok, lib, 0.0), std::invalid_argument);
}

TEST_CASE("detector scores") {
  LemmaLibrary lib;
  AnnotatedProof ok = labeled(zero_add_tree(), {});
  auto h = inject_error(ok, ErrorMode::Hallucination, 1, lib, {});
  auto i = inject_error(ok, ErrorMode::IncompleteInduction, 1, lib, {});
  DetectorScores perfect = detector_scores({ok, h, i}, lib, 0.99);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_recall == 1.0);

  // labels claim faults the trees do not have: the detector finds nothing
  std::vector<AnnotatedProof> mislabeled{labeled(zero_add_tree(), {ErrorMode::Hallucination}),
                                         labeled(zero_add_tree(), {ErrorMode::TopoOrder})};
  DetectorScores blind = detector_scores(mislabeled, lib, 0.99);
  CHECK(blind.macro_recall == 0.0);
  CHECK(blind.accuracy == 0.0);
}

TEST_CASE("calibrated detector on a generated corpus") {
  LemmaLibrary lib = default_library();
  InjectionConfig ic;
  ic.seed = 17;
  auto cb = build_corpus(ic, GenBounds{}, 600, lib);
  const double tau = calibrate_tau(cb.items, lib);
  CHECK(tau > 0);
  CHECK(tau < 1);
  DetectorScores s = detector_scores(cb.items, lib, tau);
  for (ErrorMode m : {ErrorMode::Hallucination, ErrorMode::TopoOrder, ErrorMode::IncompleteInduction}) {
    CAPTURE(to_string(m));
    CHECK(s.per_mode[m].recall() == 1.0);
    CHECK(s.per_mode[m].precision() == 1.0);
  }
  CHECK(s.accuracy >= detector_scores(cb.items, lib, 0.01).accuracy);
}

TEST_CASE("pearson") {
  std::vector<double> x{1, 2, 3, 4, 5.5}, y2, yn;
  for (double v : x) y2.push_back(2 * v), yn.push_back(-v);
  CHECK(pearson(x, y2) == doctest::Approx(1.0));
  CHECK(pearson(x, yn) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(pearson({1, 2}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("incomplete beta and F tail against closed forms") {
  for (double x : {0.1, 0.37, 0.5, 0.93}) {
    CHECK(incomplete_beta(1, 1, x) == doctest::Approx(x));
    CHECK(incomplete_beta(3, 1, x) == doctest::Approx(x * x * x));
    CHECK(incomplete_beta(1, 2.5, x) == doctest::Approx(1 - std::pow(1 - x, 2.5)));
  }
  CHECK(incomplete_beta(4.5, 4.5, 0.5) == doctest::Approx(0.5));
  // F(2, d2): P(F > f) = (1 + 2 f / d2)^(-d2 / 2)
  for (double f : {0.3, 1.0, 4.2, 17.0})
    for (double d2 : {3.0, 10.0, 97.0}) CHECK(f_survival(f, 2, d2) == doctest::Approx(std::pow(1 + 2 * f / d2, -d2 / 2)));
}

TEST_CASE("ols recovers planted coefficients") {
  Rng rng(5);
  const int n = 200;
  Eigen::MatrixXd x(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform() * 4 - 2;
  Eigen::Vector3d beta(1.5, -0.25, 3.0);
  Eigen::VectorXd y = (x * beta).array() + 0.7;
  RegressionResult r = ols_regression(x, y);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(r.coefficients(j) - beta(j)) <= 1e-6 * std::abs(beta(j)));
  CHECK(r.intercept == doctest::Approx(0.7));
  CHECK(std::abs(r.r2 - 1.0) <= 1e-9);
  CHECK(r.p_value < 1e-12);
  CHECK(r.n == 200);
}

TEST_CASE("ols on unrelated data explains little") {
  Rng rng(6);
  const int n = 1000;
  Eigen::MatrixXd x(n, 4);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.uniform();
    y(i) = rng.uniform();
  }
  RegressionResult r = ols_regression(x, y);
  CHECK(r.r2 < 0.05);
  CHECK(r.r2 >= 0);
  CHECK(r.p_value > 0);
  CHECK(r.p_value <= 1);
}

TEST_CASE("ols rejects singular and short designs") {
  Eigen::MatrixXd x(6, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;
  Eigen::VectorXd y(6);
  y << 1, 0, 1, 1, 0, 1;
  CHECK_THROWS_AS(ols_regression(x, y), ReportedSingular);
  CHECK_THROWS_AS(ols_regression(x.topRows(3), y.head(3)), std::invalid_argument);
}

TEST_CASE("report table") {
  MetricsReport m;
  m.fpsr = 0.684;
  m.ppc = 0.9123;
  m.mean_edpt = 3.24;
  m.repaired = 4;
  m.mean_proof_len = 7.0;
  m.records = 10;
  std::string t = render_table({{"desk-test", m}, {"empty", std::nullopt}});
  std::istringstream in(t);
  std::string header, rule, row1, row2, extra;
  std::getline(in, header);
  std::getline(in, rule);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK_FALSE(std::getline(in, extra));
  CHECK(header.find("Dataset") == 0);
  std::size_t at = 0;
  for (const char* col : {"FPSR (%)", "PPC (%)", "EDPT", "Latency (ms)", "Proof Len (avg)"}) {
    auto pos = header.find(col, at);
    CHECK(pos != std::string::npos);
    at = pos;
  }
  CHECK(row1.find("desk-test") == 0);
  CHECK(row1.find("68.4") != std::string::npos);
  CHECK(row1.find("91.2") != std::string::npos);
  CHECK(row1.find("3.2") != std::string::npos);
  CHECK(row2.find("empty") == 0);
  std::size_t dashes = 0;
  for (std::size_t p = row2.find("—"); p != std::string::npos; p = row2.find("—", p + 1)) ++dashes;
  CHECK(dashes == 5);

  std::string recs = render_records({{"a", m}, {"b", std::nullopt}});
  CHECK(recs.find("\"dataset\":\"a\"") < recs.find("\"dataset\":\"b\""));
}

TEST_CASE("metrics stay in range on a corrected corpus") {
  LemmaLibrary lib = default_library();
  InjectionConfig ic;
  ic.seed = 2;
  auto cb = build_corpus(ic, GenBounds{}, 120, lib);
  std::vector<RunRecord> rs;
  for (const auto& p : cb.items) {
    RunRecord r;
    r.id = p.id;
    r.correction = correct_loop(p.tree, lib, PolicyParams{}, {});
    r.attempt = r.correction->tree;
    r.report = verify_tree(r.attempt, lib, {});
    rs.push_back(std::move(r));
  }
  MetricsReport m = summarize_records(rs);
  CHECK(m.fpsr >= 0);
  CHECK(m.fpsr <= 1);
  CHECK(m.ppc >= 0);
  CHECK(m.ppc <= 1);
  CHECK(m.mean_edpt >= 0);
  CHECK_FALSE(m.mean_latency_ms);
  CHECK(summarize_records(rs, true).mean_latency_ms);
}
