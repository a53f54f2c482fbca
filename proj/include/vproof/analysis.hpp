#pragma once

// Run metrics, drift profiles, the rule-based error-mode detector,
// correlation/regression statistics and the summary table.

#include <Eigen/Core>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vproof/corpus.hpp"
#include "vproof/corrector.hpp"
#include "vproof/verifier.hpp"

namespace vproof {

/// `attempt` is the final tree of the run and `report` its verification;
/// `correction` is set when the correction loop ran.
struct RunRecord {
  std::uint64_t id = 0;
  ProofTree attempt;
  VerifyReport report;
  std::optional<CorrectionOutcome> correction;
  Split split = Split::Unassigned;
};

struct MetricsReport {
  double fpsr = 0.0;
  double ppc = 0.0;
  /// only meaningful when `repaired` > 0
  double mean_edpt = 0.0;
  std::optional<double> mean_latency_ms;
  double mean_proof_len = 0.0;
  std::size_t records = 0;
  std::size_t valid = 0;
  std::size_t nodes = 0;
  std::size_t valid_nodes = 0;
  std::size_t repaired = 0;
  std::size_t unrepaired = 0;
};

double fpsr(const std::vector<RunRecord>& records);
/// Pooled over all nodes of all records.
double ppc(const std::vector<RunRecord>& records);

struct EdptSummary {
  double mean = 0.0;
  std::size_t counted = 0;
  std::size_t excluded = 0;
};
/// Mean edit distance over records with a Repaired outcome.
EdptSummary edpt(const std::vector<RunRecord>& records);

/// Empty input throws std::invalid_argument. Latency is taken from the
/// reports only when `with_latency` is set.
MetricsReport summarize_records(const std::vector<RunRecord>& records, bool with_latency = false);

struct DriftProfile {
  std::vector<double> similarities;
  double min_similarity = 1.0;
  double max_drop = 0.0;
};
DriftProfile drift_profile(const ProofTree& t);

inline constexpr double kDefaultDriftThreshold = 0.13;

/// Per-proof detector counts in mode order: unknown citations, 1 if the
/// order check fails, induction nodes short of two cases, edges dropping
/// more than tau.
std::array<double, 4> mode_frequencies(const ProofTree& t, const LemmaLibrary& lib, double tau = kDefaultDriftThreshold);

std::set<ErrorMode> detect_modes(const AnnotatedProof& p, const LemmaLibrary& lib, double tau = kDefaultDriftThreshold);

struct ModeScore {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision() const;
  double recall() const;
};

struct DetectorScores {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::map<ErrorMode, ModeScore> per_mode;
  /// mean recall over the modes present in the ground truth
  double macro_recall = 0.0;
};

/// Ground truth is the recorded mode set (empty for valid items).
DetectorScores detector_scores(const std::vector<AnnotatedProof>& corpus, const LemmaLibrary& lib, double tau);

/// Grid search over tau in {0.01, ..., 0.99} maximizing the mean of accuracy
/// and macro recall; ties keep the smaller tau.
double calibrate_tau(const std::vector<AnnotatedProof>& corpus, const LemmaLibrary& lib);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

class ReportedSingular : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RegressionResult {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double r2 = 0.0;
  double f_statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Least squares with an intercept column. Needs n > p + 1 and a full-rank
/// design (ReportedSingular otherwise).
RegressionResult ols_regression(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
/// P(F > f) for an F(d1, d2) variable.
double f_survival(double f, double d1, double d2);

struct TableRow {
  std::string dataset;
  std::optional<MetricsReport> metrics;
};

/// Aligned text: Dataset, FPSR (%), PPC (%), EDPT, Latency (ms), Proof Len (avg).
std::string render_table(const std::vector<TableRow>& rows);
/// One JSON object per row.
std::string render_records(const std::vector<TableRow>& rows);

}  // namespace vproof
