#include "vproof/kernel.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "vproof/hashing.hpp"

namespace vproof {

// ---------------------------------------------------------------------------
// Term

Term::Term() : Term(zero()) {}

Term Term::make(TermKind k, std::string name, const Term* a, const Term* b) {
  auto n = std::make_shared<TermNode>();
  n->kind = k;
  std::uint64_t h = hash_combine(0x51ed270b27a4c3a1ULL, static_cast<std::uint64_t>(k));
  int depth = 1;
  int size = 1;
  bool ground = k != TermKind::Var;
  if (k == TermKind::Var) h = hash_combine(h, hash_bytes(name));
  if (a) {
    n->a = *a;
    h = hash_combine(h, a->hash());
    depth = std::max(depth, 1 + a->depth());
    size += a->size();
    ground = ground && a->is_ground();
  }
  if (b) {
    n->b = *b;
    h = hash_combine(h, b->hash());
    depth = std::max(depth, 1 + b->depth());
    size += b->size();
    ground = ground && b->is_ground();
  }
  n->name = std::move(name);
  n->hash = h;
  n->depth = depth;
  n->size = size;
  n->ground = ground;
  return Term(std::shared_ptr<const TermNode>(std::move(n)));
}

Term Term::zero() {
  static const Term z = make(TermKind::Zero, {}, nullptr, nullptr);
  return z;
}
Term Term::succ(const Term& inner) { return make(TermKind::Succ, {}, &inner, nullptr); }
Term Term::var(std::string name) { return make(TermKind::Var, std::move(name), nullptr, nullptr); }
Term Term::add(const Term& l, const Term& r) { return make(TermKind::Add, {}, &l, &r); }
Term Term::mul(const Term& l, const Term& r) { return make(TermKind::Mul, {}, &l, &r); }
Term Term::numeral(int n) {
  Term t = zero();
  for (int i = 0; i < n; ++i) t = succ(t);
  return t;
}

TermKind Term::kind() const { return node_->kind; }
const std::string& Term::name() const { return node_->name; }
const Term& Term::child(int i) const { return i == 0 ? node_->a : node_->b; }
std::uint64_t Term::hash() const { return node_->hash; }
int Term::depth() const { return node_->depth; }
int Term::size() const { return node_->size; }
bool Term::is_ground() const { return node_->ground; }

int Term::arity() const {
  switch (node_->kind) {
    case TermKind::Zero:
    case TermKind::Var: return 0;
    case TermKind::Succ: return 1;
    default: return 2;
  }
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  if (a.hash() != b.hash() || a.size() != b.size() || a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TermKind::Zero: return true;
    case TermKind::Var: return a.name() == b.name();
    case TermKind::Succ: return a.inner() == b.inner();
    default: return a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
}

namespace {

void print_term(std::ostringstream& os, const Term& t) {
  switch (t.kind()) {
    case TermKind::Zero: os << '0'; break;
    case TermKind::Var: os << t.name(); break;
    case TermKind::Succ:
      os << "S(";
      print_term(os, t.inner());
      os << ')';
      break;
    case TermKind::Add:
    case TermKind::Mul:
      os << '(';
      print_term(os, t.lhs());
      os << (t.kind() == TermKind::Add ? " + " : " * ");
      print_term(os, t.rhs());
      os << ')';
      break;
  }
}

class TermParser {
 public:
  explicit TermParser(std::string_view text) : text_(text) {}

  Term term() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected term");
    char c = text_[pos_];
    if (c == '0') {
      ++pos_;
      return Term::zero();
    }
    if (c == 'S') {
      ++pos_;
      expect('(');
      Term inner = term();
      expect(')');
      return Term::succ(inner);
    }
    if (c == '(') {
      ++pos_;
      Term l = term();
      skip_ws();
      if (pos_ >= text_.size()) fail("expected '+' or '*'");
      char op = text_[pos_];
      if (op != '+' && op != '*') fail("expected '+' or '*'");
      ++pos_;
      Term r = term();
      expect(')');
      return op == '+' ? Term::add(l, r) : Term::mul(l, r);
    }
    if (c >= 'a' && c <= 'z') {
      std::string name = ident();
      if (name == "forall") fail("reserved word used as variable", pos_ - name.size());
      return Term::var(std::move(name));
    }
    fail("unexpected character");
  }

  std::string ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::islower(static_cast<unsigned char>(text_[pos_])) ||
            std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  bool consume_keyword(std::string_view kw) {
    skip_ws();
    if (text_.substr(pos_, kw.size()) != kw) return false;
    std::size_t after = pos_ + kw.size();
    if (after < text_.size() && text_[after] != ' ' && text_[after] != '.') return false;
    pos_ = after;
    return true;
  }

  [[noreturn]] void fail(const std::string& msg) { fail(msg, pos_); }
  [[noreturn]] void fail(const std::string& msg, std::size_t at) {
    throw ParseError(at + 1, msg);
  }

  std::size_t pos() const { return pos_; }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void advance() { ++pos_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

void collect_vars(const Term& t, std::vector<std::string>& out) {
  if (t.is_ground()) return;
  if (t.kind() == TermKind::Var) {
    if (std::find(out.begin(), out.end(), t.name()) == out.end()) out.push_back(t.name());
    return;
  }
  for (int i = 0; i < t.arity(); ++i) collect_vars(t.child(i), out);
}

Term rebuild(const Term& t, const Term& a, const Term* b) {
  switch (t.kind()) {
    case TermKind::Succ: return Term::succ(a);
    case TermKind::Add: return Term::add(a, *b);
    case TermKind::Mul: return Term::mul(a, *b);
    default: return t;
  }
}

bool terms_well_formed(const Term& t) {
  if (t.kind() == TermKind::Var) return is_valid_var_name(t.name());
  for (int i = 0; i < t.arity(); ++i)
    if (!terms_well_formed(t.child(i))) return false;
  return true;
}

}  // namespace

std::string to_string(const Term& t) {
  std::ostringstream os;
  print_term(os, t);
  return os.str();
}

ParseError::ParseError(std::size_t offset, const std::string& what)
    : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + what),
      offset_(offset) {}

Term parse_term(std::string_view text) {
  TermParser p(text);
  Term t = p.term();
  if (!p.at_end()) p.fail("trailing input");
  return t;
}

bool is_valid_var_name(std::string_view name) {
  if (name.empty() || name.front() < 'a' || name.front() > 'z') return false;
  if (name == "forall") return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::vector<std::string> free_vars(const Term& t) {
  std::vector<std::string> out;
  collect_vars(t, out);
  return out;
}

bool occurs(const Term& t, std::string_view var) {
  if (t.is_ground()) return false;
  if (t.kind() == TermKind::Var) return t.name() == var;
  for (int i = 0; i < t.arity(); ++i)
    if (occurs(t.child(i), var)) return true;
  return false;
}

Term substitute(const Term& t, const Bindings& b) {
  if (t.is_ground() || b.empty()) return t;
  switch (t.kind()) {
    case TermKind::Var: {
      auto it = b.find(t.name());
      return it == b.end() ? t : it->second;
    }
    case TermKind::Succ: {
      Term a = substitute(t.inner(), b);
      return a == t.inner() ? t : Term::succ(a);
    }
    case TermKind::Add:
    case TermKind::Mul: {
      Term l = substitute(t.lhs(), b);
      Term r = substitute(t.rhs(), b);
      if (l == t.lhs() && r == t.rhs()) return t;
      return t.kind() == TermKind::Add ? Term::add(l, r) : Term::mul(l, r);
    }
    default: return t;
  }
}

std::optional<Term> subterm_at(const Term& t, std::span<const std::uint8_t> path) {
  const Term* cur = &t;
  for (std::uint8_t step : path) {
    if (step >= cur->arity()) return std::nullopt;
    cur = &cur->child(step);
  }
  return *cur;
}

std::optional<Term> replace_at(const Term& t, std::span<const std::uint8_t> path,
                               const Term& replacement) {
  if (path.empty()) return replacement;
  std::uint8_t step = path.front();
  if (step >= t.arity()) return std::nullopt;
  auto sub = replace_at(t.child(step), path.subspan(1), replacement);
  if (!sub) return std::nullopt;
  if (t.arity() == 1) return rebuild(t, *sub, nullptr);
  if (step == 0) return rebuild(t, *sub, &t.rhs());
  return rebuild(t, t.lhs(), &*sub);
}

// ---------------------------------------------------------------------------
// Statement

std::uint64_t Statement::hash() const {
  std::uint64_t h = 0x7a1f3c2be4d5e691ULL;
  for (const auto& b : binders) h = hash_combine(h, hash_bytes(b));
  h = hash_combine(h, binders.size());
  h = hash_combine(h, lhs.hash());
  return hash_combine(h, rhs.hash());
}

int Statement::symbol_count() const {
  return lhs.size() + 1 + rhs.size() + static_cast<int>(binders.size());
}

bool Statement::has_binder(std::string_view v) const {
  return std::find(binders.begin(), binders.end(), v) != binders.end();
}

std::string to_string(const Statement& s) {
  std::string out;
  if (!s.binders.empty()) {
    out = "forall";
    for (const auto& b : s.binders) out += " " + b;
    out += ". ";
  }
  out += to_string(s.lhs);
  out += " = ";
  out += to_string(s.rhs);
  return out;
}

Statement parse_statement(std::string_view text) {
  TermParser p(text);
  Statement s;
  if (p.consume_keyword("forall")) {
    for (;;) {
      p.skip_ws();
      if (p.peek() == '.') {
        p.advance();
        break;
      }
      if (p.peek() < 'a' || p.peek() > 'z') p.fail("expected binder or '.'");
      std::size_t at = p.pos();
      std::string name = p.ident();
      if (!is_valid_var_name(name)) p.fail("invalid binder name", at);
      if (s.has_binder(name)) p.fail("duplicate binder '" + name + "'", at);
      s.binders.push_back(std::move(name));
    }
    if (s.binders.empty()) p.fail("empty binder list");
  }
  s.lhs = p.term();
  p.expect('=');
  s.rhs = p.term();
  if (!p.at_end()) p.fail("trailing input");
  return s;
}

std::vector<std::string> free_vars(const Statement& s) {
  std::vector<std::string> out;
  collect_vars(s.lhs, out);
  collect_vars(s.rhs, out);
  std::erase_if(out, [&](const std::string& v) { return s.has_binder(v); });
  return out;
}

bool is_well_formed(const Statement& s, int max_term_depth) {
  std::set<std::string_view> seen;
  for (const auto& b : s.binders) {
    if (!is_valid_var_name(b) || !seen.insert(b).second) return false;
  }
  if (s.lhs.depth() > max_term_depth || s.rhs.depth() > max_term_depth) return false;
  return terms_well_formed(s.lhs) && terms_well_formed(s.rhs);
}

Statement substitute(const Statement& s, const Bindings& b) {
  for (const auto& [k, v] : b) {
    if (!s.has_binder(k)) throw UnknownBinder(k);
  }
  Statement out;
  for (const auto& v : s.binders)
    if (!b.contains(v)) out.binders.push_back(v);
  out.lhs = substitute(s.lhs, b);
  out.rhs = substitute(s.rhs, b);
  return out;
}

// ---------------------------------------------------------------------------
// Axioms and lemma library

const std::vector<AxiomSchema>& axiom_schemas() {
  static const std::vector<AxiomSchema> schemas = {
      {"A1", parse_statement("forall x. (x + 0) = x")},
      {"A2", parse_statement("forall x y. (x + S(y)) = S((x + y))")},
      {"M1", parse_statement("forall x. (x * 0) = 0")},
      {"M2", parse_statement("forall x y. (x * S(y)) = ((x * y) + x)")},
  };
  return schemas;
}

const AxiomSchema* find_axiom(std::string_view name) {
  for (const auto& a : axiom_schemas())
    if (a.name == name) return &a;
  return nullptr;
}

void LemmaLibrary::add(std::string name, Statement statement) {
  if (items_.contains(name)) throw std::invalid_argument("duplicate lemma: " + name);
  if (!is_well_formed(statement)) throw std::invalid_argument("malformed lemma: " + name);
  order_.push_back(name);
  items_.emplace(std::move(name), std::move(statement));
}

const Statement* LemmaLibrary::find(std::string_view name) const {
  auto it = items_.find(name);
  return it == items_.end() ? nullptr : &it->second;
}

int LemmaLibrary::index_of(std::string_view name) const {
  auto it = std::find(order_.begin(), order_.end(), name);
  return it == order_.end() ? -1 : static_cast<int>(it - order_.begin());
}

LemmaLibrary LemmaLibrary::prefix(std::size_t n) const {
  LemmaLibrary out;
  for (std::size_t i = 0; i < std::min(n, order_.size()); ++i) out.add(order_[i], *find(order_[i]));
  return out;
}

std::uint64_t LemmaLibrary::fingerprint() const {
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  for (const auto& n : order_) {
    h = hash_combine(h, hash_bytes(n));
    h = hash_combine(h, find(n)->hash());
  }
  return h;
}

// ---------------------------------------------------------------------------
// Justifications

std::string_view rule_keyword(Rule r) {
  switch (r) {
    case Rule::Refl: return "refl";
    case Rule::Sym: return "sym";
    case Rule::Trans: return "trans";
    case Rule::Cong: return "cong";
    case Rule::Axiom: return "axiom";
    case Rule::SubstLemma: return "subst";
    case Rule::Hyp: return "hyp";
    case Rule::Induction: return "induction";
    case Rule::CiteLemma: return "cite";
  }
  return "?";
}

namespace {

std::string path_text(const Path& p) {
  if (p.empty()) return "-";
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += '.';
    s += static_cast<char>('0' + p[i]);
  }
  return s;
}

std::string bindings_text(const Bindings& b) {
  std::string s = "{";
  bool first = true;
  for (const auto& [k, v] : b) {
    if (!first) s += "; ";
    first = false;
    s += k + " := " + to_string(v);
  }
  return s + "}";
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::uint64_t Justification::hash() const {
  std::uint64_t h = hash_combine(0x3c6ef372fe94f82bULL, static_cast<std::uint64_t>(rule));
  switch (rule) {
    case Rule::Axiom:
    case Rule::SubstLemma:
      h = hash_combine(h, hash_bytes(name));
      for (const auto& [k, v] : bindings) {
        h = hash_combine(h, hash_bytes(k));
        h = hash_combine(h, v.hash());
      }
      break;
    case Rule::CiteLemma: h = hash_combine(h, hash_bytes(name)); break;
    case Rule::Cong:
      for (auto p : path) h = hash_combine(h, p);
      h = hash_combine(h, path.size());
      break;
    case Rule::Hyp: h = hash_combine(h, static_cast<std::uint64_t>(hyp)); break;
    case Rule::Induction: h = hash_combine(h, hash_bytes(var)); break;
    default: break;
  }
  return h;
}

std::string justification_head(const Justification& j) {
  std::string s(rule_keyword(j.rule));
  switch (j.rule) {
    case Rule::Axiom:
    case Rule::SubstLemma:
    case Rule::CiteLemma: return s + " " + j.name;
    case Rule::Cong: return s + " " + path_text(j.path);
    case Rule::Hyp: return s + " " + std::to_string(j.hyp);
    case Rule::Induction: return s + " " + j.var;
    default: return s;
  }
}

std::string to_string(const Justification& j) {
  switch (j.rule) {
    case Rule::Axiom:
    case Rule::SubstLemma: return justification_head(j) + " " + bindings_text(j.bindings);
    default: return justification_head(j);
  }
}

Justification parse_justification(std::string_view text) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && text[pos] == ' ') ++pos;
  };
  auto word = [&]() -> std::string {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && (is_name_char(text[pos]) || text[pos] == '.' || text[pos] == '-'))
      ++pos;
    if (start == pos) throw ParseError(pos + 1, "expected word");
    return std::string(text.substr(start, pos - start));
  };
  auto finish = [&] {
    skip_ws();
    if (pos != text.size()) throw ParseError(pos + 1, "trailing input in justification");
  };
  auto lemma_name = [&]() -> std::string {
    std::size_t at = pos;
    std::string n = word();
    if (!std::all_of(n.begin(), n.end(), is_name_char)) throw ParseError(at + 1, "bad name");
    return n;
  };

  std::string kw = word();
  Justification j;
  if (kw == "refl") {
    j.rule = Rule::Refl;
  } else if (kw == "sym") {
    j.rule = Rule::Sym;
  } else if (kw == "trans") {
    j.rule = Rule::Trans;
  } else if (kw == "cong") {
    j.rule = Rule::Cong;
    std::size_t at = pos;
    std::string p = word();
    if (p != "-") {
      for (std::size_t i = 0; i < p.size(); ++i) {
        bool digit_slot = i % 2 == 0;
        if (digit_slot && (p[i] == '0' || p[i] == '1')) {
          j.path.push_back(static_cast<std::uint8_t>(p[i] - '0'));
        } else if (!digit_slot && p[i] == '.' && i + 1 < p.size()) {
        } else {
          throw ParseError(at + 1 + i, "bad congruence path");
        }
      }
    }
  } else if (kw == "hyp") {
    j.rule = Rule::Hyp;
    std::size_t at = pos;
    std::string n = word();
    if (!std::all_of(n.begin(), n.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw ParseError(at + 1, "bad hypothesis index");
    j.hyp = std::stoi(n);
  } else if (kw == "induction") {
    j.rule = Rule::Induction;
    std::size_t at = pos;
    j.var = word();
    if (!is_valid_var_name(j.var)) throw ParseError(at + 1, "bad induction variable");
  } else if (kw == "cite") {
    j.rule = Rule::CiteLemma;
    j.name = lemma_name();
  } else if (kw == "axiom" || kw == "subst") {
    j.rule = kw == "axiom" ? Rule::Axiom : Rule::SubstLemma;
    j.name = lemma_name();
    skip_ws();
    if (pos >= text.size() || text[pos] != '{') throw ParseError(pos + 1, "expected '{'");
    std::size_t close = text.find('}', pos);
    if (close == std::string_view::npos) throw ParseError(text.size() + 1, "expected '}'");
    std::string_view body = text.substr(pos + 1, close - pos - 1);
    std::size_t body_off = pos + 1;
    pos = close + 1;
    std::size_t i = 0;
    while (i < body.size()) {
      std::size_t end = body.find(';', i);
      if (end == std::string_view::npos) end = body.size();
      std::string_view item = body.substr(i, end - i);
      std::size_t eq = item.find(":=");
      if (eq == std::string_view::npos) {
        bool blank = std::all_of(item.begin(), item.end(), [](char c) { return c == ' '; });
        if (!blank || end != body.size() || i != 0)
          throw ParseError(body_off + i + 1, "expected ':=' in binding");
        break;
      }
      std::string_view key = item.substr(0, eq);
      while (!key.empty() && key.front() == ' ') key.remove_prefix(1);
      while (!key.empty() && key.back() == ' ') key.remove_suffix(1);
      if (!is_valid_var_name(key)) throw ParseError(body_off + i + 1, "bad binding variable");
      Term value;
      try {
        value = parse_term(item.substr(eq + 2));
      } catch (const ParseError& e) {
        throw ParseError(body_off + i + eq + 2 + e.offset(), "bad binding term");
      }
      if (!j.bindings.emplace(std::string(key), value).second)
        throw ParseError(body_off + i + 1, "duplicate binding");
      i = end + 1;
    }
  } else {
    throw ParseError(1, "unknown rule '" + kw + "'");
  }
  finish();
  return j;
}

// ---------------------------------------------------------------------------
// Verdicts

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::None: return "None";
    case Reason::UnknownLemma: return "UnknownLemma";
    case Reason::UnknownAxiom: return "UnknownAxiom";
    case Reason::BadInstantiation: return "BadInstantiation";
    case Reason::PremiseMismatch: return "PremiseMismatch";
    case Reason::MalformedStatement: return "MalformedStatement";
    case Reason::MissingInductionCase: return "MissingInductionCase";
    case Reason::UnboundHypothesis: return "UnboundHypothesis";
  }
  return "?";
}

std::string to_string(const StepVerdict& v) {
  switch (v.status) {
    case StepStatus::Valid: return "Valid";
    case StepStatus::Timeout: return "Timeout";
    case StepStatus::Invalid: return "Invalid(" + std::string(to_string(v.reason)) + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Rule checking

std::optional<InductionCases> induction_cases(const Statement& goal, std::string_view var) {
  if (!goal.has_binder(var)) return std::nullopt;
  std::vector<std::string> rest;
  for (const auto& b : goal.binders)
    if (b != var) rest.push_back(b);
  Term v = Term::var(std::string(var));
  Bindings to_zero{{std::string(var), Term::zero()}};
  Bindings to_succ{{std::string(var), Term::succ(v)}};
  InductionCases c;
  c.base = {rest, substitute(goal.lhs, to_zero), substitute(goal.rhs, to_zero)};
  c.step = {rest, substitute(goal.lhs, to_succ), substitute(goal.rhs, to_succ)};
  c.hypothesis = {rest, goal.lhs, goal.rhs};
  return c;
}

namespace {

// An instance of a universally valid schema may be stated under any binder
// list that still quantifies the schema's uninstantiated binders.
bool instance_matches(const Statement& inst, const Statement& conclusion) {
  if (!(inst.lhs == conclusion.lhs) || !(inst.rhs == conclusion.rhs)) return false;
  return std::all_of(inst.binders.begin(), inst.binders.end(),
                     [&](const std::string& b) { return conclusion.has_binder(b); });
}

StepVerdict check_instance(const Statement& schema, const Bindings& bindings,
                           const Statement& conclusion, std::span<const Statement> premises) {
  if (!premises.empty()) return StepVerdict::invalid(Reason::PremiseMismatch);
  Statement inst;
  try {
    inst = substitute(schema, bindings);
  } catch (const UnknownBinder&) {
    return StepVerdict::invalid(Reason::BadInstantiation);
  }
  for (const auto& [k, v] : bindings) {
    if (!terms_well_formed(v)) return StepVerdict::invalid(Reason::BadInstantiation);
  }
  return instance_matches(inst, conclusion) ? StepVerdict::valid()
                                            : StepVerdict::invalid(Reason::BadInstantiation);
}

}  // namespace

StepVerdict check_step(const Statement& c, const Justification& just,
                       std::span<const Statement> premises, const LemmaLibrary& library,
                       std::span<const Statement> hyps, int max_term_depth) {
  if (!is_well_formed(c, max_term_depth)) return StepVerdict::invalid(Reason::MalformedStatement);
  const auto mismatch = StepVerdict::invalid(Reason::PremiseMismatch);

  switch (just.rule) {
    case Rule::Refl:
      return premises.empty() && c.lhs == c.rhs ? StepVerdict::valid() : mismatch;

    case Rule::Sym: {
      if (premises.size() != 1) return mismatch;
      const Statement& p = premises[0];
      return p.binders == c.binders && p.lhs == c.rhs && p.rhs == c.lhs ? StepVerdict::valid()
                                                                        : mismatch;
    }

    case Rule::Trans: {
      if (premises.size() != 2) return mismatch;
      const Statement& p = premises[0];
      const Statement& q = premises[1];
      bool ok = p.binders == c.binders && q.binders == c.binders && p.lhs == c.lhs &&
                p.rhs == q.lhs && q.rhs == c.rhs;
      return ok ? StepVerdict::valid() : mismatch;
    }

    case Rule::Cong: {
      if (premises.size() != 1) return mismatch;
      const Statement& p = premises[0];
      if (p.binders != c.binders) return mismatch;
      auto l = subterm_at(c.lhs, just.path);
      auto r = subterm_at(c.rhs, just.path);
      if (!l || !r || !(*l == p.lhs) || !(*r == p.rhs)) return mismatch;
      auto rebuilt = replace_at(c.lhs, just.path, p.rhs);
      return rebuilt && *rebuilt == c.rhs ? StepVerdict::valid() : mismatch;
    }

    case Rule::Axiom: {
      const AxiomSchema* ax = find_axiom(just.name);
      if (!ax) return StepVerdict::invalid(Reason::UnknownAxiom);
      return check_instance(ax->statement, just.bindings, c, premises);
    }

    case Rule::SubstLemma: {
      const Statement* lemma = library.find(just.name);
      if (!lemma) return StepVerdict::invalid(Reason::UnknownLemma);
      return check_instance(*lemma, just.bindings, c, premises);
    }

    case Rule::CiteLemma: {
      const Statement* lemma = library.find(just.name);
      if (!lemma) return StepVerdict::invalid(Reason::UnknownLemma);
      if (!premises.empty()) return mismatch;
      return *lemma == c ? StepVerdict::valid() : mismatch;
    }

    case Rule::Hyp: {
      if (just.hyp < 0 || static_cast<std::size_t>(just.hyp) >= hyps.size())
        return StepVerdict::invalid(Reason::UnboundHypothesis);
      if (!premises.empty()) return mismatch;
      return hyps[static_cast<std::size_t>(just.hyp)] == c ? StepVerdict::valid() : mismatch;
    }

    case Rule::Induction: {
      auto cases = induction_cases(c, just.var);
      if (!cases) return StepVerdict::invalid(Reason::BadInstantiation);
      // The induction variable becomes an eigenvariable of the step case; it
      // must not already be fixed by an enclosing hypothesis.
      for (const auto& h : hyps) {
        if (!h.has_binder(just.var) && (occurs(h.lhs, just.var) || occurs(h.rhs, just.var)))
          return StepVerdict::invalid(Reason::BadInstantiation);
      }
      if (premises.size() < 2) return StepVerdict::invalid(Reason::MissingInductionCase);
      if (premises.size() > 2) return mismatch;
      return premises[0] == cases->base && premises[1] == cases->step ? StepVerdict::valid()
                                                                      : mismatch;
    }
  }
  return mismatch;
}

}  // namespace vproof
