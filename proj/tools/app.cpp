#include "app.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vproof/analysis.hpp"
#include "vproof/hashing.hpp"
#include "vproof/parallel.hpp"

namespace vproof::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& v, const char* want) {
  throw validation_error("config key '" + key + "': expected " + want + ", got '" + v + "'");
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string fmt_real(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool canonical = true;
};

Key ikey(std::string name, std::function<int&(RunConfig&)> ref) {
  return {std::move(name), [ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_int<int>(k, v); },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Key zkey(std::string name, std::function<std::size_t&(RunConfig&)> ref) {
  return {std::move(name),
          [ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_int<std::size_t>(k, v); },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Key rkey(std::string name, std::function<double&(RunConfig&)> ref) {
  return {std::move(name), [ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_real(k, v); },
          [ref](const RunConfig& c) { return fmt_real(ref(const_cast<RunConfig&>(c))); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"run.seed",
                 [](RunConfig& c, const std::string& n, const std::string& v) { c.seed = parse_int<std::uint64_t>(n, v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    k.push_back(zkey("run.corpus_size", [](RunConfig& c) -> std::size_t& { return c.corpus_size; }));
    k.push_back(zkey("run.eval_goals", [](RunConfig& c) -> std::size_t& { return c.eval_goals; }));
    Key w = ikey("run.workers", [](RunConfig& c) -> int& { return c.workers; });
    w.canonical = false;
    k.push_back(w);
    k.push_back({"run.output_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
                 [](const RunConfig& c) { return c.output_dir; }, false});

    k.push_back(ikey("generator.max_depth", [](RunConfig& c) -> int& { return c.bounds.max_depth; }));
    k.push_back(ikey("generator.max_nodes", [](RunConfig& c) -> int& { return c.bounds.max_nodes; }));
    k.push_back(ikey("generator.max_goal_term_depth", [](RunConfig& c) -> int& { return c.bounds.max_goal_term_depth; }));
    k.push_back(ikey("generator.max_rewrite_steps", [](RunConfig& c) -> int& { return c.bounds.max_rewrite_steps; }));
    k.push_back(ikey("generator.max_numeral", [](RunConfig& c) -> int& { return c.bounds.max_numeral; }));
    k.push_back(rkey("generator.induction_share", [](RunConfig& c) -> double& { return c.bounds.induction_share; }));
    k.push_back(ikey("generator.attempts", [](RunConfig& c) -> int& { return c.bounds.attempts; }));

    k.push_back(rkey("injection.flawed_fraction", [](RunConfig& c) -> double& { return c.injection.flawed_fraction; }));
    k.push_back(rkey("injection.augmentation_factor",
                     [](RunConfig& c) -> double& { return c.injection.augmentation_factor; }));
    const char* modes[] = {"hallucination", "topo_order", "incomplete_induction", "semantic_drift"};
    for (int m = 0; m < 4; ++m)
      k.push_back(rkey(std::string("injection.") + modes[m],
                       [m](RunConfig& c) -> double& { return c.injection.mode_weights[static_cast<std::size_t>(m)]; }));

    const char* parts[] = {"train", "val", "test"};
    for (int s = 0; s < 3; ++s)
      k.push_back(rkey(std::string("split.") + parts[s],
                       [s](RunConfig& c) -> double& { return c.split.ratios[static_cast<std::size_t>(s)]; }));

    k.push_back({"verifier.timeout_ms",
                 [](RunConfig& c, const std::string& n, const std::string& v) {
                   c.verifier.timeout = std::chrono::milliseconds(parse_int<long>(n, v));
                 },
                 [](const RunConfig& c) {
                   return std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(c.verifier.timeout).count());
                 }});
    k.push_back({"verifier.memoize",
                 [](RunConfig& c, const std::string& n, const std::string& v) { c.verifier.memoize = parse_bool(n, v); },
                 [](const RunConfig& c) { return std::string(c.verifier.memoize ? "true" : "false"); }});
    k.push_back(rkey("verifier.approx_skip_threshold",
                     [](RunConfig& c) -> double& { return c.verifier.approx_skip_threshold; }));
    k.push_back(ikey("verifier.max_term_depth", [](RunConfig& c) -> int& { return c.verifier.max_term_depth; }));

    k.push_back(ikey("train.n_step", [](RunConfig& c) -> int& { return c.train.n_step; }));
    k.push_back(rkey("train.gamma", [](RunConfig& c) -> double& { return c.train.gamma; }));
    k.push_back(rkey("train.clip", [](RunConfig& c) -> double& { return c.train.clip; }));
    k.push_back(rkey("train.learning_rate", [](RunConfig& c) -> double& { return c.train.learning_rate; }));
    k.push_back(ikey("train.epochs", [](RunConfig& c) -> int& { return c.train.epochs; }));
    k.push_back(ikey("train.episodes_per_update", [](RunConfig& c) -> int& { return c.train.episodes_per_update; }));
    k.push_back(ikey("train.max_steps", [](RunConfig& c) -> int& { return c.train.max_steps; }));
    k.push_back(ikey("train.updates", [](RunConfig& c) -> int& { return c.train.updates; }));
    k.push_back(rkey("train.curriculum_warmup", [](RunConfig& c) -> double& { return c.train.curriculum_warmup; }));

    k.push_back(ikey("correct.k", [](RunConfig& c) -> int& { return c.correct.k; }));
    k.push_back(ikey("correct.max_regen_depth", [](RunConfig& c) -> int& { return c.correct.max_regen_depth; }));
    k.push_back(ikey("correct.max_iterations", [](RunConfig& c) -> int& { return c.correct.max_iterations; }));
    std::sort(k.begin(), k.end(), [](const Key& a, const Key& b) { return a.name < b.name; });
    return k;
  }();
  return table;
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::ostream& log_of(const Options& opt) {
  static std::ostringstream sink;
  return opt.log ? *opt.log : sink;
}

}  // namespace

void RunConfig::finalize() {
  if (corpus_size < 1) throw validation_error("run.corpus_size must be at least 1");
  if (workers < 1) throw validation_error("run.workers must be at least 1");
  if (output_dir.empty()) throw validation_error("run.output_dir must not be empty");
  injection.seed = seed;
  split.seed = seed;
  train.seed = seed;
  correct.seed = seed;
  verifier.workers = workers;
  train.workers = workers;
  try {
    injection.validate();
    split.validate();
    verifier.validate();
    train.validate();
    correct.validate();
  } catch (const std::invalid_argument& e) {
    throw validation_error(std::string("invalid configuration: ") + e.what());
  }
  if (bounds.max_depth < 1 || bounds.max_nodes < 1 || bounds.attempts < 1)
    throw validation_error("generator bounds must be positive");
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::map<std::string, const Key*> by_name;
  for (const auto& k : keys()) by_name[k.name] = &k;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw validation_error(where + "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw validation_error(where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw validation_error(where + "expected 'key = value'");
    if (section.empty()) throw validation_error(where + "key outside any section");
    const std::string name = section + "." + trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    auto it = by_name.find(name);
    if (it == by_name.end()) throw validation_error("unknown config key '" + name + "' (line " + std::to_string(line_no) + ")");
    if (!seen.insert(name).second) throw validation_error(where + "duplicate key '" + name + "'");
    it->second->set(cfg, name, value);
  }
  cfg.finalize();
  return cfg;
}

RunConfig load_config(const fs::path& path) { return parse_config(read_file(path)); }

std::string canonical_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : keys())
    if (k.canonical) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

fs::path resolve_run_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("VPROOF_RUN_DIR"); env && *env) return fs::path(env);
  return fs::path(cfg.output_dir);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw io_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw io_error("read failed: " + p.string());
  return ss.str();
}

void write_file(const fs::path& p, std::string_view text) {
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  if (ec) throw io_error("cannot create " + p.parent_path().string() + ": " + ec.message());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw io_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, p, ec);
  if (ec) throw io_error("cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

ordered_json load_manifest(const Paths& P) {
  if (!fs::exists(P.manifest())) return ordered_json::object();
  try {
    return ordered_json::parse(read_file(P.manifest()));
  } catch (const ordered_json::parse_error& e) {
    throw validation_error("malformed manifest " + P.manifest().string() + ": " + e.what());
  }
}

std::string stamp(const RunConfig& cfg, const std::string& step, const std::vector<fs::path>& inputs) {
  std::uint64_t h = hash_bytes(canonical_config(cfg));
  h = hash_combine(h, hash_bytes(step));
  for (const auto& p : inputs) h = hash_combine(h, hash_bytes(read_file(p)));
  return hex(h);
}

/// Skips when outputs exist under the same stamp, refuses when some exist
/// under another one, otherwise runs `body` and records the stamp.
template <class Body>
void run_step(const RunConfig& cfg, const Options& opt, const std::string& step, const std::vector<fs::path>& inputs,
              const std::vector<fs::path>& outputs, Body&& body) {
  const Paths P{opt.run_dir};
  for (const auto& in : inputs)
    if (!fs::exists(in)) throw io_error(step + ": missing input " + in.string());
  const std::string st = stamp(cfg, step, inputs);
  ordered_json m = load_manifest(P);
  if (!m.contains("config")) m["config"] = canonical_config(cfg);
  if (!m.contains("steps")) m["steps"] = ordered_json::object();
  bool all = true, any = false;
  for (const auto& o : outputs) {
    const bool e = fs::exists(o);
    all = all && e;
    any = any || e;
  }
  const bool recorded = m["steps"].contains(step) && m["steps"][step] == st;
  if (!opt.overwrite && all && recorded) {
    log_of(opt) << step << ": up to date in " << P.root.string() << "\n";
    return;
  }
  if (!opt.overwrite && any)
    throw validation_error(step + ": " + P.root.string() +
                           " already holds outputs from other inputs or an interrupted run; pass --overwrite to replace them");
  body(m);
  m["config"] = canonical_config(cfg);
  m["steps"][step] = st;
  write_file(P.manifest(), m.dump(2) + "\n");
}

std::vector<AnnotatedProof> load_items(const fs::path& p) {
  const std::string text = read_file(p);
  try {
    return load_corpus_text(text);
  } catch (const CorpusFormatError& e) {
    throw validation_error(p.string() + ": line " + std::to_string(e.line()) + ": " + e.what());
  }
}

PolicyParams load_policy(const fs::path& p) {
  try {
    return parse_checkpoint(read_file(p));
  } catch (const CheckpointError& e) {
    throw validation_error(p.string() + ": " + e.what());
  }
}

std::string fixed(double x, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

}  // namespace

void cmd_gen(const RunConfig& cfg, const Options& opt) {
  const Paths P{opt.run_dir};
  run_step(cfg, opt, "gen", {}, {P.corpus()}, [&](ordered_json& m) {
    const LemmaLibrary lib = default_library();
    CorpusBuild cb;
    try {
      cb = build_corpus(cfg.injection, cfg.bounds, cfg.corpus_size, lib, cfg.workers);
    } catch (const GenerationFailure& e) {
      throw validation_error(std::string("generation failed: ") + e.what());
    }
    write_file(P.corpus(), save_corpus_text(cb.items));
    m["corpus"] = ordered_json::parse(manifest_json(cb.manifest, cfg.injection, nullptr, cfg.bounds));
    for (const auto& w : cb.manifest.warnings) log_of(opt) << "gen: warning: " << w << "\n";
    log_of(opt) << "gen: " << cb.items.size() << " proofs (" << cb.manifest.base_flawed << " flawed base, "
                << cb.manifest.augmented << " augmented) -> " << P.corpus().string() << "\n";
  });
}

void cmd_split(const RunConfig& cfg, const Options& opt) {
  const Paths P{opt.run_dir};
  run_step(cfg, opt, "split", {P.corpus()}, {P.split_corpus(), P.reports() / "split.txt"}, [&](ordered_json& m) {
    auto items = load_items(P.corpus());
    SplitResult r = assign_splits(items, cfg.split);
    write_file(P.split_corpus(), save_corpus_text(items));
    std::string rep;
    for (const auto& [split, hist] : r.histogram)
      for (const auto& [sig, n] : hist) rep += "split=" + split + " signature=" + sig + " count=" + std::to_string(n) + "\n";
    rep += "worst_scaled_deviation=" + fixed(r.worst_scaled_deviation) + "\n";
    for (const auto& w : r.warnings) rep += "warning=" + w + "\n";
    write_file(P.reports() / "split.txt", rep);
    m["split"] = ordered_json::parse(manifest_json(summarize(items), cfg.injection, &cfg.split, cfg.bounds));
    log_of(opt) << "split: " << items.size() << " proofs, worst scaled deviation " << fixed(r.worst_scaled_deviation)
                << " -> " << P.split_corpus().string() << "\n";
  });
}

void cmd_verify(const RunConfig& cfg, const Options& opt, fs::path corpus) {
  const Paths P{opt.run_dir};
  if (corpus.empty()) corpus = fs::exists(P.split_corpus()) ? P.split_corpus() : P.corpus();
  const fs::path out = P.reports() / "verify.jsonl", summary = P.reports() / "verify_summary.txt";
  run_step(cfg, opt, "verify", {corpus}, {out, summary}, [&](ordered_json&) {
    const LemmaLibrary lib = default_library();
    auto items = load_items(corpus);
    std::vector<ProofTree> trees;
    trees.reserve(items.size());
    for (const auto& p : items) trees.push_back(p.tree);
    BatchResult br = verify_batch(trees, lib, cfg.verifier);
    std::string lines;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const VerifyReport& r = br.reports[i];
      ordered_json j;
      j["id"] = items[i].id;
      j["split"] = std::string(to_string(items[i].split));
      j["overall"] = r.overall;
      j["nodes"] = r.verdicts.size();
      j["valid_nodes"] = r.valid_count();
      if (r.failed_node >= 0) {
        j["failed_node"] = r.failed_node;
        j["reason"] = std::string(to_string(r.verdicts[static_cast<std::size_t>(r.failed_node)].reason));
      } else {
        j["failed_node"] = nullptr;
        j["reason"] = nullptr;
      }
      lines += j.dump() + "\n";
    }
    write_file(out, lines);
    write_file(summary, "trees=" + std::to_string(br.stats.trees) + " valid=" + std::to_string(br.stats.valid) + "\n");
    write_file(P.traces() / "verify_stats.txt", br.stats.summary_line() + "\n");
    log_of(opt) << br.stats.summary_line() << "\n";
  });
}

void cmd_train(const RunConfig& cfg, const Options& opt) {
  const Paths P{opt.run_dir};
  run_step(cfg, opt, "train", {P.split_corpus()}, {P.checkpoint(), P.reports() / "train_log.txt"}, [&](ordered_json&) {
    const LemmaLibrary lib = default_library();
    auto items = load_items(P.split_corpus());
    std::vector<AnnotatedProof> train;
    for (auto& p : items)
      if (p.split == Split::Train) train.push_back(std::move(p));
    if (train.empty()) throw validation_error("train: the corpus has no train split");
    std::vector<Statement> goals;
    for (std::size_t i : curriculum_order(train)) goals.push_back(train[i].tree.goal);
    TrainResult tr = train_policy(goals, lib, cfg.train);
    std::string logtext;
    for (const auto& l : tr.log) logtext += l + "\n";
    logtext += "rejected_updates=" + std::to_string(tr.rejected_updates) + "\n";
    write_file(P.checkpoint(), checkpoint_text(tr.params));
    write_file(P.reports() / "train_log.txt", logtext);
    log_of(opt) << "train: " << cfg.train.updates << " updates over " << goals.size() << " goals"
                << (tr.log.empty() ? std::string() : ", last: " + tr.log.back()) << "\n";
  });
}

namespace {

ordered_json outcome_json(const AnnotatedProof& p, const CorrectionOutcome& o) {
  ordered_json j;
  j["id"] = p.id;
  j["signature"] = p.signature();
  j["status"] = std::string(to_string(o.status));
  j["iterations"] = o.iterations;
  j["candidates"] = o.candidate_counts;
  if (o.edpt)
    j["edpt"] = *o.edpt;
  else
    j["edpt"] = nullptr;
  j["tree"] = serialize(o.tree);
  return j;
}

}  // namespace

void cmd_correct(const RunConfig& cfg, const Options& opt, fs::path corpus, fs::path checkpoint) {
  const Paths P{opt.run_dir};
  if (corpus.empty()) corpus = P.split_corpus();
  if (checkpoint.empty()) checkpoint = P.checkpoint();
  const fs::path out = P.reports() / "correct.jsonl";
  run_step(cfg, opt, "correct", {corpus, checkpoint}, {out}, [&](ordered_json&) {
    const LemmaLibrary lib = default_library();
    const PolicyParams policy = load_policy(checkpoint);
    auto items = load_items(corpus);
    std::vector<AnnotatedProof> flawed;
    for (auto& p : items)
      if (!p.valid && p.split == Split::Test) flawed.push_back(std::move(p));
    VerifierConfig vcfg = cfg.verifier;
    vcfg.workers = 1;
    std::vector<CorrectionOutcome> outs(flawed.size());
    parallel_for(flawed.size(), cfg.workers,
                 [&](std::size_t i) { outs[i] = correct_loop(flawed[i].tree, lib, policy, cfg.correct, vcfg); });
    std::string lines, trace;
    std::size_t repaired = 0;
    for (std::size_t i = 0; i < flawed.size(); ++i) {
      lines += outcome_json(flawed[i], outs[i]).dump() + "\n";
      repaired += outs[i].status == CorrectionStatus::Repaired;
      for (const auto& l : outs[i].trace) trace += "id=" + std::to_string(flawed[i].id) + " " + l + "\n";
    }
    write_file(out, lines);
    write_file(P.traces() / "correct.trace", trace);
    log_of(opt) << "correct: " << repaired << "/" << flawed.size() << " flawed test proofs repaired\n";
  });
}

namespace {

std::vector<RunRecord> policy_records(const PolicyParams& p, const std::vector<Statement>& goals,
                                      const LemmaLibrary& lib, const RunConfig& cfg) {
  EvalResult ev = evaluate_policy(p, goals, lib, cfg.train.max_steps, derive_seed(cfg.seed, 0, 17), cfg.workers);
  std::vector<RunRecord> out;
  VerifierConfig vcfg = cfg.verifier;
  vcfg.workers = 1;
  for (std::size_t i = 0; i < ev.episodes.size(); ++i) {
    RunRecord r;
    r.id = i;
    r.attempt = ev.episodes[i].attempt;
    r.report = verify_tree(r.attempt, lib, vcfg);
    r.split = Split::Test;
    out.push_back(std::move(r));
  }
  return out;
}

std::string stats_text(const std::vector<AnnotatedProof>& items, const std::vector<VerifyReport>& reports,
                       const LemmaLibrary& lib) {
  std::string s;
  std::vector<AnnotatedProof> calib, test;
  for (const auto& p : items) (p.split == Split::Test ? test : calib).push_back(p);
  const double tau = calibrate_tau(calib, lib);
  s += "detector tau=" + fixed(tau, 2) + " calibrated_on=train+val n=" + std::to_string(calib.size()) + "\n";
  if (!test.empty()) {
    DetectorScores d = detector_scores(test, lib, tau);
    s += "detector split=test n=" + std::to_string(d.n) + " accuracy=" + fixed(d.accuracy) +
         " macro_recall=" + fixed(d.macro_recall) + "\n";
    for (const auto& [mode, ms] : d.per_mode)
      s += "detector mode=" + std::string(to_string(mode)) + " tp=" + std::to_string(ms.tp) + " fp=" +
           std::to_string(ms.fp) + " fn=" + std::to_string(ms.fn) + " precision=" + fixed(ms.precision()) +
           " recall=" + fixed(ms.recall()) + "\n";
  }

  const auto n = static_cast<Eigen::Index>(items.size());
  Eigen::MatrixXd x(n, 4);
  Eigen::VectorXd y(n);
  std::vector<double> hall, succ;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto f = mode_frequencies(items[static_cast<std::size_t>(i)].tree, lib, tau);
    for (int c = 0; c < 4; ++c) x(i, c) = f[static_cast<std::size_t>(c)];
    y(i) = reports[static_cast<std::size_t>(i)].overall ? 1.0 : 0.0;
    hall.push_back(f[0]);
    succ.push_back(y(i));
  }
  try {
    s += "pearson x=hallucination_frequency y=success n=" + std::to_string(n) + " r=" + fixed(pearson(hall, succ)) + "\n";
  } catch (const std::invalid_argument& e) {
    s += std::string("pearson undefined: ") + e.what() + "\n";
  }
  try {
    RegressionResult r = ols_regression(x, y);
    char p[32];
    std::snprintf(p, sizeof p, "%.4g", r.p_value);
    s += "ols y=success n=" + std::to_string(r.n) + " r2=" + fixed(r.r2) + " f=" + fixed(r.f_statistic, 2) +
         " p=" + p + "\n";
    s += "ols term=intercept coef=" + fixed(r.intercept) + "\n";
    const char* names[] = {"hallucination", "topo_order", "incomplete_induction", "semantic_drift"};
    for (int c = 0; c < 4; ++c) s += std::string("ols term=") + names[c] + " coef=" + fixed(r.coefficients(c)) + "\n";
  } catch (const std::exception& e) {
    s += std::string("ols unavailable: ") + e.what() + "\n";
  }
  return s;
}

}  // namespace

void cmd_report(const RunConfig& cfg, const Options& opt) {
  const Paths P{opt.run_dir};
  const fs::path corrections = P.reports() / "correct.jsonl";
  const fs::path table = P.reports() / "table.txt", records = P.reports() / "table.jsonl",
                 stats = P.reports() / "stats.txt";
  run_step(cfg, opt, "report", {P.split_corpus(), corrections, P.checkpoint()}, {table, records, stats}, [&](ordered_json&) {
    const LemmaLibrary lib = default_library();
    const auto items = load_items(P.split_corpus());
    const PolicyParams trained = load_policy(P.checkpoint());

    std::map<std::uint64_t, CorrectionOutcome> fixes;
    {
      std::istringstream in(read_file(corrections));
      std::size_t line_no = 0;
      for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
          auto j = ordered_json::parse(line);
          CorrectionOutcome o;
          o.status = j.at("status").get<std::string>() == "Repaired" ? CorrectionStatus::Repaired : CorrectionStatus::Exhausted;
          o.iterations = j.at("iterations").get<int>();
          o.candidate_counts = j.at("candidates").get<std::vector<int>>();
          if (!j.at("edpt").is_null()) o.edpt = j.at("edpt").get<int>();
          o.tree = parse_tree(j.at("tree").get<std::string>());
          fixes[j.at("id").get<std::uint64_t>()] = std::move(o);
        } catch (const std::exception& e) {
          throw validation_error(corrections.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
      }
    }

    std::vector<ProofTree> trees;
    for (const auto& p : items) trees.push_back(p.tree);
    VerifierConfig vcfg = cfg.verifier;
    const auto reports = verify_batch(trees, lib, vcfg).reports;

    std::vector<RunRecord> test_raw, test_fixed, flawed_raw, flawed_fixed;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& p = items[i];
      if (p.split != Split::Test) continue;
      RunRecord raw{p.id, p.tree, reports[i], std::nullopt, p.split};
      RunRecord fixed = raw;
      if (!p.valid) {
        auto it = fixes.find(p.id);
        if (it == fixes.end())
          throw validation_error("report: no correction outcome for flawed test proof " + std::to_string(p.id));
        fixed.attempt = it->second.tree;
        fixed.report = verify_tree(fixed.attempt, lib, vcfg);
        fixed.correction = it->second;
        flawed_raw.push_back(raw);
        flawed_fixed.push_back(fixed);
      }
      test_raw.push_back(std::move(raw));
      test_fixed.push_back(std::move(fixed));
    }

    std::vector<TableRow> rows;
    auto add = [&](const char* name, const std::vector<RunRecord>& r) {
      rows.push_back({name, r.empty() ? std::nullopt : std::optional<MetricsReport>(summarize_records(r))});
    };
    add("test", test_raw);
    add("test+correction", test_fixed);
    add("flawed-test", flawed_raw);
    add("flawed-test+correction", flawed_fixed);

    std::vector<Statement> goals;
    std::set<std::string> seen;
    for (const auto& p : items)
      if (p.split == Split::Test && goals.size() < cfg.eval_goals && seen.insert(to_string(p.tree.goal)).second)
        goals.push_back(p.tree.goal);
    if (!goals.empty()) {
      add("policy-untrained", policy_records(PolicyParams{}, goals, lib, cfg));
      add("policy-trained", policy_records(trained, goals, lib, cfg));
    }

    const std::string t = render_table(rows);
    write_file(table, t);
    write_file(records, render_records(rows));
    write_file(stats, stats_text(items, reports, lib));
    log_of(opt) << t;
  });
}

void cmd_bench(const RunConfig& cfg, const Options& opt) {
  cmd_gen(cfg, opt);
  cmd_split(cfg, opt);
  cmd_train(cfg, opt);
  cmd_correct(cfg, opt);
  cmd_report(cfg, opt);
}

}  // namespace vproof::app
