#include "vproof/prooftree.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace vproof {

namespace {

enum class Mark : std::uint8_t { White, Gray, Black };

NodeId emit(const Fragment& f, std::vector<ProofNode>& out) {
  std::vector<NodeId> kids;
  kids.reserve(f.children.size());
  for (const auto& c : f.children) kids.push_back(emit(c, out));
  NodeId id = static_cast<NodeId>(out.size());
  out.push_back({id, f.statement, f.just, std::move(kids)});
  return id;
}

}  // namespace

ProofTree from_fragment(const Fragment& root) { return from_fragment(root.statement, root); }

ProofTree from_fragment(const Statement& goal, const Fragment& root) {
  ProofTree t;
  t.goal = goal;
  t.root = emit(root, t.nodes);
  refresh_cites(t);
  return t;
}

Fragment to_fragment(const ProofTree& t, NodeId id) {
  std::vector<bool> on_path(t.size(), false);
  std::function<Fragment(NodeId)> go = [&](NodeId n) {
    const ProofNode& pn = t.node(n);
    Fragment f{pn.statement, pn.just, {}};
    on_path[static_cast<std::size_t>(n)] = true;
    for (NodeId c : pn.children) {
      if (!t.contains(c) || on_path[static_cast<std::size_t>(c)]) continue;
      f.children.push_back(go(c));
    }
    on_path[static_cast<std::size_t>(n)] = false;
    return f;
  };
  return go(id);
}

void refresh_cites(ProofTree& t) {
  t.cites.clear();
  for (const auto& n : t.nodes) {
    if (n.just.rule != Rule::CiteLemma && n.just.rule != Rule::SubstLemma) continue;
    if (std::find(t.cites.begin(), t.cites.end(), n.just.name) == t.cites.end())
      t.cites.push_back(n.just.name);
  }
}

ProofTree canonicalize(const ProofTree& t, std::vector<NodeId>* remap_out) {
  ProofTree out;
  out.goal = t.goal;
  if (!t.contains(t.root)) {
    if (remap_out) remap_out->assign(t.size(), -1);
    return out;
  }
  std::vector<Mark> mark(t.size(), Mark::White);
  std::vector<NodeId> order;
  std::function<void(NodeId)> visit = [&](NodeId n) {
    mark[static_cast<std::size_t>(n)] = Mark::Gray;
    for (NodeId c : t.node(n).children)
      if (t.contains(c) && mark[static_cast<std::size_t>(c)] == Mark::White) visit(c);
    mark[static_cast<std::size_t>(n)] = Mark::Black;
    order.push_back(n);
  };
  visit(t.root);
  std::vector<NodeId> remap(t.size(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) remap[static_cast<std::size_t>(order[i])] = static_cast<NodeId>(i);
  for (NodeId old : order) {
    const ProofNode& n = t.node(old);
    ProofNode m{remap[static_cast<std::size_t>(old)], n.statement, n.just, {}};
    for (NodeId c : n.children)
      if (t.contains(c) && remap[static_cast<std::size_t>(c)] >= 0) m.children.push_back(remap[static_cast<std::size_t>(c)]);
    out.nodes.push_back(std::move(m));
  }
  out.root = remap[static_cast<std::size_t>(t.root)];
  refresh_cites(out);
  if (remap_out) *remap_out = std::move(remap);
  return out;
}

ProofTree splice(const ProofTree& t, NodeId at, const Fragment& replacement, NodeId* new_at) {
  ProofTree work = t;
  std::vector<NodeId> kids;
  for (const auto& c : replacement.children) {
    NodeId id = emit(c, work.nodes);
    kids.push_back(id);
  }
  ProofNode& target = work.node(at);
  target.statement = replacement.statement;
  target.just = replacement.just;
  target.children = std::move(kids);
  std::vector<NodeId> remap;
  ProofTree out = canonicalize(work, &remap);
  if (new_at) *new_at = remap[static_cast<std::size_t>(at)];
  return out;
}

std::string CycleError::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Cycle: os << "cycle"; break;
    case Kind::Dangling: os << "dangling reference"; break;
    case Kind::Shared: os << "shared premise"; break;
  }
  os << " on edge " << from << " -> " << to;
  return os.str();
}

TopoResult topo_order(const ProofTree& t) {
  TopoResult r;
  std::vector<Mark> mark(t.size(), Mark::White);
  std::function<void(NodeId)> visit = [&](NodeId n) {
    mark[static_cast<std::size_t>(n)] = Mark::Gray;
    for (NodeId c : t.node(n).children) {
      if (!t.contains(c)) {
        if (!r.error) r.error = CycleError{CycleError::Kind::Dangling, n, c};
        continue;
      }
      Mark m = mark[static_cast<std::size_t>(c)];
      if (m == Mark::White) {
        visit(c);
      } else if (!r.error) {
        r.error = CycleError{m == Mark::Gray ? CycleError::Kind::Cycle : CycleError::Kind::Shared, n, c};
      }
    }
    mark[static_cast<std::size_t>(n)] = Mark::Black;
    r.order.push_back(n);
  };
  if (t.contains(t.root)) visit(t.root);
  for (NodeId n = 0; n < static_cast<NodeId>(t.size()); ++n)
    if (mark[static_cast<std::size_t>(n)] == Mark::White) visit(n);
  return r;
}

std::vector<NodeId> parents(const ProofTree& t) {
  std::vector<NodeId> p(t.size(), -1);
  std::vector<bool> seen(t.size(), false);
  std::function<void(NodeId)> visit = [&](NodeId n) {
    seen[static_cast<std::size_t>(n)] = true;
    for (NodeId c : t.node(n).children) {
      if (!t.contains(c) || seen[static_cast<std::size_t>(c)]) continue;
      p[static_cast<std::size_t>(c)] = n;
      visit(c);
    }
  };
  if (t.contains(t.root)) visit(t.root);
  return p;
}

int tree_depth(const ProofTree& t) {
  if (!t.contains(t.root)) return 0;
  std::vector<bool> on_path(t.size(), false);
  std::function<int(NodeId)> go = [&](NodeId n) {
    on_path[static_cast<std::size_t>(n)] = true;
    int best = 0;
    for (NodeId c : t.node(n).children)
      if (t.contains(c) && !on_path[static_cast<std::size_t>(c)]) best = std::max(best, go(c));
    on_path[static_cast<std::size_t>(n)] = false;
    return best + 1;
  };
  return go(t.root);
}

Complexity complexity(const ProofTree& t) {
  Complexity c;
  for (const auto& n : t.nodes) c.syntactic += n.statement.symbol_count();
  c.depth = tree_depth(t);
  return c;
}

std::vector<StateAction> linearize(const ProofTree& t) {
  TopoResult topo = topo_order(t);
  if (!topo.ok()) throw CycleException(*topo.error);
  std::vector<int> depth(t.size(), 0);
  if (t.contains(t.root)) {
    std::function<void(NodeId, int)> go = [&](NodeId n, int d) {
      depth[static_cast<std::size_t>(n)] = d;
      for (NodeId c : t.node(n).children) go(c, d + 1);
    };
    go(t.root, 1);
  }
  std::vector<StateAction> out;
  out.reserve(topo.order.size());
  const int total = static_cast<int>(topo.order.size());
  for (int i = 0; i < total; ++i) {
    const ProofNode& n = t.node(topo.order[static_cast<std::size_t>(i)]);
    out.push_back({t.goal, n.statement, depth[static_cast<std::size_t>(n.id)], total - i - 1, n.just,
                   static_cast<int>(n.children.size())});
  }
  return out;
}

ProofTree delinearize(const std::vector<StateAction>& steps) {
  if (steps.empty()) throw std::invalid_argument("empty state-action sequence");
  ProofTree t;
  t.goal = steps.front().goal;
  std::vector<NodeId> stack;
  for (const auto& s : steps) {
    if (s.arity < 0 || static_cast<std::size_t>(s.arity) > stack.size())
      throw std::invalid_argument("state-action sequence underflows");
    NodeId id = static_cast<NodeId>(t.nodes.size());
    std::vector<NodeId> kids(stack.end() - s.arity, stack.end());
    stack.resize(stack.size() - static_cast<std::size_t>(s.arity));
    t.nodes.push_back({id, s.frontier, s.action, std::move(kids)});
    stack.push_back(id);
  }
  if (stack.size() != 1) throw std::invalid_argument("state-action sequence leaves a forest");
  t.root = stack.front();
  refresh_cites(t);
  return t;
}

TreeParseError::TreeParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::string serialize(const ProofTree& t) {
  std::string out = "goal\t" + to_string(t.goal) + "\nroot\t" + std::to_string(t.root) + "\n";
  for (const auto& n : t.nodes) {
    out += std::to_string(n.id);
    out += '\t';
    out += to_string(n.statement);
    out += '\t';
    out += to_string(n.just);
    out += '\t';
    if (n.children.empty()) out += '-';
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(n.children[i]);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    std::size_t p = s.find(sep, start);
    if (p == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || v < 0) return std::nullopt;
  return v;
}

}  // namespace

ProofTree parse_tree(std::string_view text) {
  if (text.empty()) throw TreeParseError(1, "empty input");
  if (text.back() != '\n') throw TreeParseError(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) + 1,
                                                "truncated record (missing final newline)");
  text.remove_suffix(1);
  auto lines = split(text, '\n');
  if (lines.size() < 3) throw TreeParseError(lines.size() + 1, "expected goal, root and at least one node");

  ProofTree t;
  auto header = split(lines[0], '\t');
  if (header.size() != 2 || header[0] != "goal") throw TreeParseError(1, "expected goal header");
  try {
    t.goal = parse_statement(header[1]);
  } catch (const ParseError& e) {
    throw TreeParseError(1, std::string("goal: ") + e.what());
  }
  auto root = split(lines[1], '\t');
  std::optional<int> root_id;
  if (root.size() == 2 && root[0] == "root") root_id = to_int(root[1]);
  if (!root_id) throw TreeParseError(2, "expected root header");
  t.root = *root_id;

  for (std::size_t i = 2; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    auto f = split(lines[i], '\t');
    if (f.size() != 4) throw TreeParseError(line, "expected 4 tab-separated fields");
    auto id = to_int(f[0]);
    if (!id || static_cast<std::size_t>(*id) != i - 2) throw TreeParseError(line, "node ids must be dense and ascending");
    ProofNode n;
    n.id = *id;
    try {
      n.statement = parse_statement(f[1]);
    } catch (const ParseError& e) {
      throw TreeParseError(line, std::string("statement: ") + e.what());
    }
    try {
      n.just = parse_justification(f[2]);
    } catch (const ParseError& e) {
      throw TreeParseError(line, std::string("justification: ") + e.what());
    }
    if (f[3] != "-") {
      for (auto c : split(f[3], ',')) {
        auto cid = to_int(c);
        if (!cid) throw TreeParseError(line, "bad child id");
        n.children.push_back(*cid);
      }
    }
    t.nodes.push_back(std::move(n));
  }
  for (const auto& n : t.nodes)
    for (NodeId c : n.children)
      if (!t.contains(c)) throw TreeParseError(static_cast<std::size_t>(n.id) + 3, "child id out of range");
  if (!t.contains(t.root)) throw TreeParseError(2, "root id out of range");
  refresh_cites(t);
  return t;
}

int OrderedTree::add(int label, int parent) {
  int id = static_cast<int>(labels.size());
  labels.push_back(label);
  children.emplace_back();
  if (parent >= 0) children[static_cast<std::size_t>(parent)].push_back(id);
  return id;
}

int tree_edit_distance(const OrderedTree& a, const OrderedTree& b) {
  struct Post {
    std::vector<int> label;  // 1-based post-order
    std::vector<int> lml;    // leftmost leaf descendant
    std::vector<int> keyroots;
  };
  auto prepare = [](const OrderedTree& t) {
    Post p;
    p.label.assign(t.size() + 1, 0);
    p.lml.assign(t.size() + 1, 0);
    if (t.size() == 0) return p;
    int counter = 0;
    std::function<int(int)> go = [&](int n) {
      int leftmost = -1;
      for (int c : t.children[static_cast<std::size_t>(n)]) {
        int l = go(c);
        if (leftmost < 0) leftmost = l;
      }
      int me = ++counter;
      p.label[static_cast<std::size_t>(me)] = t.labels[static_cast<std::size_t>(n)];
      p.lml[static_cast<std::size_t>(me)] = leftmost < 0 ? me : leftmost;
      return p.lml[static_cast<std::size_t>(me)];
    };
    go(0);
    const int n = static_cast<int>(t.size());
    std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
    for (int i = n; i >= 1; --i) {
      int l = p.lml[static_cast<std::size_t>(i)];
      if (!seen[static_cast<std::size_t>(l)]) {
        seen[static_cast<std::size_t>(l)] = true;
        p.keyroots.push_back(i);
      }
    }
    std::sort(p.keyroots.begin(), p.keyroots.end());
    return p;
  };
  if (a.size() == 0) return static_cast<int>(b.size());
  if (b.size() == 0) return static_cast<int>(a.size());
  Post pa = prepare(a), pb = prepare(b);
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  std::vector<std::vector<int>> td(static_cast<std::size_t>(n) + 1, std::vector<int>(static_cast<std::size_t>(m) + 1, 0));
  std::vector<std::vector<int>> fd(static_cast<std::size_t>(n) + 2, std::vector<int>(static_cast<std::size_t>(m) + 2, 0));
  for (int i : pa.keyroots) {
    for (int j : pb.keyroots) {
      const int li = pa.lml[static_cast<std::size_t>(i)], lj = pb.lml[static_cast<std::size_t>(j)];
      auto F = [&](int x, int y) -> int& {
        return fd[static_cast<std::size_t>(x - li + 1)][static_cast<std::size_t>(y - lj + 1)];
      };
      F(li - 1, lj - 1) = 0;
      for (int x = li; x <= i; ++x) F(x, lj - 1) = F(x - 1, lj - 1) + 1;
      for (int y = lj; y <= j; ++y) F(li - 1, y) = F(li - 1, y - 1) + 1;
      for (int x = li; x <= i; ++x) {
        for (int y = lj; y <= j; ++y) {
          const int lx = pa.lml[static_cast<std::size_t>(x)], ly = pb.lml[static_cast<std::size_t>(y)];
          if (lx == li && ly == lj) {
            int relabel = pa.label[static_cast<std::size_t>(x)] == pb.label[static_cast<std::size_t>(y)] ? 0 : 1;
            F(x, y) = std::min({F(x - 1, y) + 1, F(x, y - 1) + 1, F(x - 1, y - 1) + relabel});
            td[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = F(x, y);
          } else {
            F(x, y) = std::min({F(x - 1, y) + 1, F(x, y - 1) + 1,
                                F(lx - 1, ly - 1) + td[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]});
          }
        }
      }
    }
  }
  return td[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
}

std::string node_label(const ProofNode& n) { return to_string(n.statement) + "\t" + justification_head(n.just); }

OrderedTree unfold(const ProofTree& t, std::vector<std::string>& dictionary) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < dictionary.size(); ++i) index.emplace(dictionary[i], static_cast<int>(i));
  auto intern = [&](const std::string& s) {
    auto [it, fresh] = index.emplace(s, static_cast<int>(dictionary.size()));
    if (fresh) dictionary.push_back(s);
    return it->second;
  };
  OrderedTree out;
  if (!t.contains(t.root)) return out;
  std::vector<bool> on_path(t.size(), false);
  std::function<void(NodeId, int)> go = [&](NodeId n, int parent) {
    const ProofNode& pn = t.node(n);
    int me = out.add(intern(node_label(pn)), parent);
    on_path[static_cast<std::size_t>(n)] = true;
    for (NodeId c : pn.children) {
      if (!t.contains(c))
        out.add(intern("?"), me);
      else if (on_path[static_cast<std::size_t>(c)])
        out.add(intern("^" + node_label(t.node(c))), me);
      else
        go(c, me);
    }
    on_path[static_cast<std::size_t>(n)] = false;
  };
  go(t.root, -1);
  return out;
}

int tree_edit_distance(const ProofTree& a, const ProofTree& b) {
  std::vector<std::string> dict;
  OrderedTree ua = unfold(a, dict);
  OrderedTree ub = unfold(b, dict);
  return tree_edit_distance(ua, ub);
}

}  // namespace vproof
