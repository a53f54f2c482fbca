#include "vproof/analysis.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include "json.hpp"

#include "vproof/features.hpp"

namespace vproof {

namespace {

void require_records(const std::vector<RunRecord>& r) {
  if (r.empty()) throw std::invalid_argument("no run records");
}

}  // namespace

double fpsr(const std::vector<RunRecord>& records) {
  require_records(records);
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.report.overall;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

double ppc(const std::vector<RunRecord>& records) {
  require_records(records);
  std::size_t valid = 0, total = 0;
  for (const auto& r : records) {
    valid += static_cast<std::size_t>(r.report.valid_count());
    total += r.report.verdicts.size();
  }
  return total ? static_cast<double>(valid) / static_cast<double>(total) : 0.0;
}

EdptSummary edpt(const std::vector<RunRecord>& records) {
  EdptSummary s;
  double sum = 0;
  for (const auto& r : records) {
    if (r.correction && r.correction->status == CorrectionStatus::Repaired && r.correction->edpt) {
      sum += *r.correction->edpt;
      ++s.counted;
    } else {
      ++s.excluded;
    }
  }
  if (s.counted) s.mean = sum / static_cast<double>(s.counted);
  return s;
}

MetricsReport summarize_records(const std::vector<RunRecord>& records, bool with_latency) {
  require_records(records);
  MetricsReport m;
  m.records = records.size();
  double len = 0, lat = 0;
  for (const auto& r : records) {
    m.valid += r.report.overall;
    m.nodes += r.report.verdicts.size();
    m.valid_nodes += static_cast<std::size_t>(r.report.valid_count());
    len += static_cast<double>(r.attempt.size());
    lat += r.report.latency_ms;
  }
  m.fpsr = fpsr(records);
  m.ppc = ppc(records);
  EdptSummary e = edpt(records);
  m.mean_edpt = e.mean;
  m.repaired = e.counted;
  m.unrepaired = e.excluded;
  m.mean_proof_len = len / static_cast<double>(records.size());
  if (with_latency) m.mean_latency_ms = lat / static_cast<double>(records.size());
  return m;
}

DriftProfile drift_profile(const ProofTree& t) {
  DriftProfile p;
  for (double d : edge_drops(t)) {
    const double s = 1.0 - d;
    p.similarities.push_back(s);
    p.min_similarity = std::min(p.min_similarity, s);
    p.max_drop = std::max(p.max_drop, d);
  }
  return p;
}

namespace {

/// Rule-exact modes, without drift.
std::set<ErrorMode> structural_modes(const ProofTree& t, const LemmaLibrary& lib) {
  std::set<ErrorMode> out;
  for (const auto& n : t.nodes) {
    if ((n.just.rule == Rule::CiteLemma || n.just.rule == Rule::SubstLemma) && !lib.contains(n.just.name))
      out.insert(ErrorMode::Hallucination);
    if (n.just.rule == Rule::Induction && n.children.size() < 2) out.insert(ErrorMode::IncompleteInduction);
  }
  if (!topo_order(t).ok()) out.insert(ErrorMode::TopoOrder);
  return out;
}

struct Scored {
  std::set<ErrorMode> truth;
  std::set<ErrorMode> rules;
  double drop = 0.0;
};

std::vector<Scored> prepare(const std::vector<AnnotatedProof>& corpus, const LemmaLibrary& lib) {
  std::vector<Scored> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus)
    out.push_back({std::set<ErrorMode>(p.modes.begin(), p.modes.end()), structural_modes(p.tree, lib),
                   drift_profile(p.tree).max_drop});
  return out;
}

DetectorScores score(const std::vector<Scored>& items, double tau) {
  DetectorScores s;
  s.n = items.size();
  std::size_t exact = 0;
  std::set<ErrorMode> present;
  for (const auto& it : items) {
    std::set<ErrorMode> got = it.rules;
    if (it.drop > tau) got.insert(ErrorMode::SemanticDrift);
    exact += got == it.truth;
    for (ErrorMode m : {ErrorMode::Hallucination, ErrorMode::TopoOrder, ErrorMode::IncompleteInduction,
                        ErrorMode::SemanticDrift}) {
      const bool t = it.truth.count(m) > 0, g = got.count(m) > 0;
      if (t) present.insert(m);
      ModeScore& ms = s.per_mode[m];
      ms.tp += t && g;
      ms.fp += !t && g;
      ms.fn += t && !g;
    }
  }
  s.accuracy = s.n ? static_cast<double>(exact) / static_cast<double>(s.n) : 0.0;
  if (present.empty()) {
    s.macro_recall = 1.0;
  } else {
    double r = 0;
    for (ErrorMode m : present) r += s.per_mode[m].recall();
    s.macro_recall = r / static_cast<double>(present.size());
  }
  return s;
}

}  // namespace

std::array<double, 4> mode_frequencies(const ProofTree& t, const LemmaLibrary& lib, double tau) {
  std::array<double, 4> f{};
  for (const auto& n : t.nodes) {
    if ((n.just.rule == Rule::CiteLemma || n.just.rule == Rule::SubstLemma) && !lib.contains(n.just.name)) f[0] += 1;
    if (n.just.rule == Rule::Induction && n.children.size() < 2) f[2] += 1;
  }
  f[1] = topo_order(t).ok() ? 0.0 : 1.0;
  for (double d : edge_drops(t)) f[3] += d > tau;
  return f;
}

std::set<ErrorMode> detect_modes(const AnnotatedProof& p, const LemmaLibrary& lib, double tau) {
  if (!(tau > 0 && tau < 1)) throw std::invalid_argument("tau must lie in (0, 1)");
  auto out = structural_modes(p.tree, lib);
  if (drift_profile(p.tree).max_drop > tau) out.insert(ErrorMode::SemanticDrift);
  return out;
}

double ModeScore::precision() const { return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
double ModeScore::recall() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }

DetectorScores detector_scores(const std::vector<AnnotatedProof>& corpus, const LemmaLibrary& lib, double tau) {
  if (!(tau > 0 && tau < 1)) throw std::invalid_argument("tau must lie in (0, 1)");
  return score(prepare(corpus, lib), tau);
}

double calibrate_tau(const std::vector<AnnotatedProof>& corpus, const LemmaLibrary& lib) {
  if (corpus.empty()) return kDefaultDriftThreshold;
  auto items = prepare(corpus, lib);
  double best = kDefaultDriftThreshold, best_obj = -1;
  for (int k = 1; k <= 99; ++k) {
    const double tau = k / 100.0;
    DetectorScores s = score(items, tau);
    const double obj = 0.5 * (s.accuracy + s.macro_recall);
    if (obj > best_obj + 1e-12) {
      best_obj = obj;
      best = tau;
    }
  }
  return best;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("pearson needs two equal-length series of at least 3");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::Map<const Eigen::VectorXd> a(x.data(), n), b(y.data(), n);
  Eigen::VectorXd da = a.array() - a.mean(), db = b.array() - b.mean();
  const double va = da.squaredNorm(), vb = db.squaredNorm();
  if (va == 0 || vb == 0) throw std::invalid_argument("pearson needs nonzero variance");
  return std::clamp(da.dot(db) / std::sqrt(va * vb), -1.0, 1.0);
}

namespace {

double beta_fraction(double a, double b, double x) {
  const double tiny = 1e-300;
  double c = 1, d = 1 - (a + b) * x / (a + 1);
  if (std::abs(d) < tiny) d = tiny;
  d = 1 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < 1e-15) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0)) throw std::invalid_argument("incomplete_beta needs a, b > 0");
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1) / (a + b + 2)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1 - x) / b;
}

double f_survival(double f, double d1, double d2) {
  if (std::isinf(f)) return 0.0;
  if (f <= 0) return 1.0;
  return incomplete_beta(d2 / 2, d1 / 2, d2 / (d2 + d1 * f));
}

RegressionResult ols_regression(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (y.size() != n) throw std::invalid_argument("design and response lengths differ");
  if (n <= p + 1) throw std::invalid_argument("ols needs more observations than predictors plus one");
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p + 1) throw ReportedSingular("design matrix is rank deficient");
  Eigen::VectorXd beta = qr.solve(y);
  RegressionResult r;
  r.n = static_cast<std::size_t>(n);
  r.intercept = beta(0);
  r.coefficients = beta.tail(p);
  const double sse = (y - design * beta).squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();
  if (sst == 0) throw std::invalid_argument("response has zero variance");
  r.r2 = std::clamp(1.0 - sse / sst, 0.0, 1.0);
  const double df1 = static_cast<double>(p), df2 = static_cast<double>(n - p - 1);
  if (p == 0) {
    r.f_statistic = 0;
    r.p_value = 1;
  } else if (sse <= 1e-30 * sst) {
    r.f_statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.f_statistic = ((sst - sse) / df1) / (sse / df2);
    r.p_value = f_survival(r.f_statistic, df1, df2);
  }
  return r;
}

namespace {

std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) w += (c & 0xC0) != 0x80;
  return w;
}

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

const char* const kDash = "—";

std::vector<std::string> cells(const TableRow& r) {
  if (!r.metrics) return {r.dataset, kDash, kDash, kDash, kDash, kDash};
  const MetricsReport& m = *r.metrics;
  return {r.dataset,
          fixed1(100.0 * m.fpsr),
          fixed1(100.0 * m.ppc),
          m.repaired ? fixed1(m.mean_edpt) : kDash,
          m.mean_latency_ms ? fixed1(*m.mean_latency_ms) : kDash,
          fixed1(m.mean_proof_len)};
}

}  // namespace

std::string render_table(const std::vector<TableRow>& rows) {
  std::vector<std::vector<std::string>> grid{{"Dataset", "FPSR (%)", "PPC (%)", "EDPT", "Latency (ms)", "Proof Len (avg)"}};
  for (const auto& r : rows) grid.push_back(cells(r));
  std::vector<std::size_t> width(6, 0);
  for (const auto& g : grid)
    for (std::size_t c = 0; c < 6; ++c) width[c] = std::max(width[c], display_width(g[c]));
  std::string out;
  auto line = [&](const std::vector<std::string>& g) {
    std::string s;
    for (std::size_t c = 0; c < 6; ++c) {
      const std::string pad(width[c] - display_width(g[c]), ' ');
      if (c) s += "  ";
      s += c == 0 ? g[c] + pad : pad + g[c];
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out += s + '\n';
  };
  line(grid[0]);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 10, '-') + '\n';
  for (std::size_t i = 1; i < grid.size(); ++i) line(grid[i]);
  return out;
}

std::string render_records(const std::vector<TableRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["dataset"] = r.dataset;
    if (!r.metrics) {
      for (const char* k : {"fpsr", "ppc", "edpt", "latency_ms", "proof_len"}) j[k] = nullptr;
      j["records"] = 0;
    } else {
      const MetricsReport& m = *r.metrics;
      j["fpsr"] = m.fpsr;
      j["ppc"] = m.ppc;
      j["edpt"] = m.repaired ? nlohmann::ordered_json(m.mean_edpt) : nlohmann::ordered_json(nullptr);
      j["latency_ms"] = m.mean_latency_ms ? nlohmann::ordered_json(*m.mean_latency_ms) : nlohmann::ordered_json(nullptr);
      j["proof_len"] = m.mean_proof_len;
      j["records"] = m.records;
      j["valid"] = m.valid;
      j["repaired"] = m.repaired;
    }
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace vproof
