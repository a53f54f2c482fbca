#pragma once

// Equational Peano-arithmetic kernel: terms, statements, justifications and
// the per-step rule checker.
//
// Axiom schemas:
//   A1: forall x. (x + 0) = x
//   A2: forall x y. (x + S(y)) = S((x + y))
//   M1: forall x. (x * 0) = 0
//   M2: forall x y. (x * S(y)) = ((x * y) + x)

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vproof {

inline constexpr int kDefaultMaxTermDepth = 32;

enum class TermKind : std::uint8_t { Zero, Succ, Var, Add, Mul };

/// Position inside a term: 0 selects the argument of S(.) or the left operand
/// of a binary operator, 1 selects the right operand.
using Path = std::vector<std::uint8_t>;

struct TermNode;

/// Immutable, structurally shared term. Hash, depth and symbol count are
/// computed once at construction so equality tests and cache keys are cheap.
class Term {
 public:
  Term();  // 0

  static Term zero();
  static Term succ(const Term& inner);
  static Term var(std::string name);
  static Term add(const Term& lhs, const Term& rhs);
  static Term mul(const Term& lhs, const Term& rhs);
  static Term numeral(int n);

  TermKind kind() const;
  const std::string& name() const;
  /// Operand `i` (0 or 1); for S(.) only 0 is valid.
  const Term& child(int i) const;
  const Term& inner() const { return child(0); }
  const Term& lhs() const { return child(0); }
  const Term& rhs() const { return child(1); }
  int arity() const;

  std::uint64_t hash() const;
  int depth() const;
  int size() const;
  bool is_ground() const;

  friend bool operator==(const Term& a, const Term& b);

 private:
  friend struct TermNode;
  explicit Term(std::shared_ptr<const TermNode> n) : node_(std::move(n)) {}
  static Term make(TermKind k, std::string name, const Term* a, const Term* b);
  std::shared_ptr<const TermNode> node_;
};

struct TermNode {
  TermKind kind = TermKind::Zero;
  std::string name;
  Term a{std::shared_ptr<const TermNode>{}};
  Term b{std::shared_ptr<const TermNode>{}};
  std::uint64_t hash = 0;
  int depth = 1;
  int size = 1;
  bool ground = true;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return static_cast<std::size_t>(t.hash()); }
};

using Bindings = std::map<std::string, Term>;

std::string to_string(const Term& t);

/// Syntax error with a 1-based byte offset into the parsed text (the offset
/// one past the last byte denotes end of input).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// t ::= 0 | S(t) | (t + t) | (t * t) | ident, ident = [a-z][a-z0-9_]*
Term parse_term(std::string_view text);

bool is_valid_var_name(std::string_view name);

/// Free variables in order of first occurrence (left to right).
std::vector<std::string> free_vars(const Term& t);
bool occurs(const Term& t, std::string_view var);

Term substitute(const Term& t, const Bindings& b);
std::optional<Term> subterm_at(const Term& t, std::span<const std::uint8_t> path);
/// Replaces the subterm at `path`; returns nullopt when the path does not exist.
std::optional<Term> replace_at(const Term& t, std::span<const std::uint8_t> path,
                               const Term& replacement);

/// Reading: forall binders. lhs = rhs. Free variables outside `binders` are
/// open (eigenvariables of an enclosing induction step).
struct Statement {
  std::vector<std::string> binders;
  Term lhs;
  Term rhs;

  std::uint64_t hash() const;
  /// Symbol count: one per term constructor, one for '=', one per binder.
  int symbol_count() const;
  bool has_binder(std::string_view v) const;
  friend bool operator==(const Statement& a, const Statement& b) = default;
};

std::string to_string(const Statement& s);
/// `forall x y. <term> = <term>` or `<term> = <term>`.
Statement parse_statement(std::string_view text);
std::vector<std::string> free_vars(const Statement& s);

/// Shallow well-formedness: variable names, distinct binders, term depth.
bool is_well_formed(const Statement& s, int max_term_depth = kDefaultMaxTermDepth);

class UnknownBinder : public std::invalid_argument {
 public:
  explicit UnknownBinder(const std::string& name)
      : std::invalid_argument("unknown binder: " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Instantiates binders; the substituted binders leave the binder list.
/// Throws UnknownBinder for keys that are not binders of `s`.
Statement substitute(const Statement& s, const Bindings& b);

struct AxiomSchema {
  std::string name;
  Statement statement;
};

/// The fixed schema set {A1, A2, M1, M2}.
const std::vector<AxiomSchema>& axiom_schemas();
const AxiomSchema* find_axiom(std::string_view name);

/// Named lemmas in insertion order.
class LemmaLibrary {
 public:
  LemmaLibrary() = default;

  /// Throws std::invalid_argument on duplicate names or malformed statements.
  void add(std::string name, Statement statement);
  const Statement* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  /// Insertion index or -1.
  int index_of(std::string_view name) const;
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }
  const std::vector<std::string>& names() const { return order_; }
  /// Library restricted to the first `n` lemmas.
  LemmaLibrary prefix(std::size_t n) const;
  /// Hash over names and statements; distinguishes libraries in cache keys.
  std::uint64_t fingerprint() const;

 private:
  std::map<std::string, Statement, std::less<>> items_;
  std::vector<std::string> order_;
};

enum class Rule : std::uint8_t { Refl, Sym, Trans, Cong, Axiom, SubstLemma, Hyp, Induction, CiteLemma };

/// Tactic attached to a node. Only the fields relevant to `rule` are used:
///  Axiom/SubstLemma: name + bindings; CiteLemma: name; Cong: path;
///  Hyp: hyp (0 = innermost induction hypothesis in scope); Induction: var.
struct Justification {
  Rule rule = Rule::Refl;
  std::string name;
  Bindings bindings;
  Path path;
  int hyp = 0;
  std::string var;

  static Justification refl() { return {}; }
  static Justification sym() { return of(Rule::Sym); }
  static Justification trans() { return of(Rule::Trans); }
  static Justification cong(Path p) {
    Justification j = of(Rule::Cong);
    j.path = std::move(p);
    return j;
  }
  static Justification axiom(std::string name, Bindings b) {
    Justification j = of(Rule::Axiom);
    j.name = std::move(name);
    j.bindings = std::move(b);
    return j;
  }
  static Justification subst_lemma(std::string name, Bindings b) {
    Justification j = of(Rule::SubstLemma);
    j.name = std::move(name);
    j.bindings = std::move(b);
    return j;
  }
  static Justification cite(std::string name) {
    Justification j = of(Rule::CiteLemma);
    j.name = std::move(name);
    return j;
  }
  static Justification hypothesis(int k) {
    Justification j = of(Rule::Hyp);
    j.hyp = k;
    return j;
  }
  static Justification induction(std::string v) {
    Justification j = of(Rule::Induction);
    j.var = std::move(v);
    return j;
  }
  static Justification of(Rule r) {
    Justification j;
    j.rule = r;
    return j;
  }

  std::uint64_t hash() const;
  friend bool operator==(const Justification&, const Justification&) = default;
};

std::string_view rule_keyword(Rule r);
std::string to_string(const Justification& j);
/// Rule keyword plus its naming parameter, without bindings.
std::string justification_head(const Justification& j);
Justification parse_justification(std::string_view text);

enum class StepStatus : std::uint8_t { Valid, Invalid, Timeout };

enum class Reason : std::uint8_t {
  None,
  UnknownLemma,
  UnknownAxiom,
  BadInstantiation,
  PremiseMismatch,
  MalformedStatement,
  MissingInductionCase,
  UnboundHypothesis,
};

struct StepVerdict {
  StepStatus status = StepStatus::Valid;
  Reason reason = Reason::None;

  static StepVerdict valid() { return {}; }
  static StepVerdict invalid(Reason r) { return {StepStatus::Invalid, r}; }
  static StepVerdict timeout() { return {StepStatus::Timeout, Reason::None}; }
  bool ok() const { return status == StepStatus::Valid; }
  friend bool operator==(const StepVerdict&, const StepVerdict&) = default;
};

std::string_view to_string(Reason r);
std::string to_string(const StepVerdict& v);

/// Checks one inference step. `premises` are the statements of the node's
/// children in order; `hyps` lists the induction hypotheses in scope,
/// innermost first. Total and deterministic: every failure is an Invalid
/// verdict.
StepVerdict check_step(const Statement& conclusion, const Justification& just,
                       std::span<const Statement> premises, const LemmaLibrary& library,
                       std::span<const Statement> hyps,
                       int max_term_depth = kDefaultMaxTermDepth);

/// Base and step obligations of an induction on `var` (step case with `var`
/// free) plus the hypothesis it introduces. Nullopt if `var` is not a binder.
struct InductionCases {
  Statement base;
  Statement step;
  Statement hypothesis;
};
std::optional<InductionCases> induction_cases(const Statement& goal, std::string_view var);

}  // namespace vproof
