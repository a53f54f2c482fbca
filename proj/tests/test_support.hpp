#pragma once

#include <random>
#include <string>
#include <vector>

#include "vproof/kernel.hpp"

namespace vproof::testing {

inline Term random_term(std::mt19937_64& rng, int depth, const std::vector<std::string>& vars) {
  std::uniform_int_distribution<int> pick(0, depth <= 1 ? 1 : 4);
  int k = pick(rng);
  if (k == 1 && vars.empty()) k = 0;
  switch (k) {
    case 0: return Term::zero();
    case 1: return Term::var(vars[std::uniform_int_distribution<std::size_t>(0, vars.size() - 1)(rng)]);
    case 2: return Term::succ(random_term(rng, depth - 1, vars));
    case 3: return Term::add(random_term(rng, depth - 1, vars), random_term(rng, depth - 1, vars));
    default: return Term::mul(random_term(rng, depth - 1, vars), random_term(rng, depth - 1, vars));
  }
}

inline Statement st(const char* text) { return parse_statement(text); }
inline Term tm(const char* text) { return parse_term(text); }

}  // namespace vproof::testing

#include "vproof/prooftree.hpp"

namespace vproof::testing {

// forall x. (0 + x) = x by induction; six nodes.
inline ProofTree zero_add_tree() {
  Fragment base{st("(0 + 0) = 0"), Justification::axiom("A1", {{"x", tm("0")}}), {}};
  Fragment s1{st("(0 + S(x)) = S((0 + x))"), Justification::axiom("A2", {{"x", tm("0")}, {"y", tm("x")}}), {}};
  Fragment ih{st("(0 + x) = x"), Justification::hypothesis(0), {}};
  Fragment s2{st("S((0 + x)) = S(x)"), Justification::cong({0}), {ih}};
  Fragment step{st("(0 + S(x)) = S(x)"), Justification::trans(), {s1, s2}};
  Fragment root{st("forall x. (0 + x) = x"), Justification::induction("x"), {base, step}};
  return from_fragment(root);
}

}  // namespace vproof::testing
