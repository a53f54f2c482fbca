#include "vproof/features.hpp"

#include <algorithm>
#include <functional>

namespace vproof {

namespace {

void count(const Term& t, Embedding& e) {
  switch (t.kind()) {
    case TermKind::Zero: e(0) += 1; return;
    case TermKind::Succ: e(1) += 1; count(t.inner(), e); return;
    case TermKind::Add: e(2) += 1; break;
    case TermKind::Mul: e(3) += 1; break;
    case TermKind::Var: e(4) += 1; return;
  }
  count(t.lhs(), e);
  count(t.rhs(), e);
}

}  // namespace

Embedding embed(const Statement& s) {
  Embedding e = Embedding::Zero();
  count(s.lhs, e);
  count(s.rhs, e);
  double total = e.head<5>().sum();
  if (total > 0) e.head<5>() /= total;
  e(5) = std::max(s.lhs.depth(), s.rhs.depth()) / 8.0;
  e(6) = static_cast<double>(s.binders.size()) / 3.0;
  return e;
}

double cosine(const Embedding& a, const Embedding& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 && nb == 0) return 1.0;
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::vector<double> edge_drops(const ProofTree& t) {
  std::vector<double> out;
  if (!t.contains(t.root)) return out;
  std::vector<Embedding> emb;
  emb.reserve(t.size());
  for (const auto& n : t.nodes) emb.push_back(embed(n.statement));
  std::vector<std::uint8_t> mark(t.size(), 0);
  std::function<void(NodeId)> go = [&](NodeId n) {
    mark[static_cast<std::size_t>(n)] = 1;
    for (NodeId c : t.node(n).children) {
      if (!t.contains(c) || mark[static_cast<std::size_t>(c)] == 1) continue;
      out.push_back(1.0 - cosine(emb[static_cast<std::size_t>(n)], emb[static_cast<std::size_t>(c)]));
      if (mark[static_cast<std::size_t>(c)] == 0) go(c);
    }
    mark[static_cast<std::size_t>(n)] = 2;
  };
  go(t.root);
  return out;
}

double max_edge_drop(const ProofTree& t) {
  auto d = edge_drops(t);
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

}  // namespace vproof
