#pragma once

// Exhaustive edit-script search over small ordered labeled trees.

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "vproof/prooftree.hpp"

namespace vproof::testing::ted {

// Preorder forest: (label, subtree size).
using Forest = std::vector<std::pair<int, int>>;

inline std::string key(const Forest& f) {
  std::string k;
  for (auto [l, s] : f) {
    k += static_cast<char>('a' + l);
    k += static_cast<char>('0' + s);
  }
  return k;
}

inline std::vector<int> child_positions(const Forest& f, int p) {
  std::vector<int> out;
  int i = p + 1, end = p < 0 ? static_cast<int>(f.size()) : p + f[static_cast<std::size_t>(p)].second;
  if (p < 0) i = 0;
  while (i < end) {
    out.push_back(i);
    i += f[static_cast<std::size_t>(i)].second;
  }
  return out;
}

inline bool is_ancestor(const Forest& f, int j, int i) { return j < i && j + f[static_cast<std::size_t>(j)].second > i; }

inline std::vector<Forest> neighbours(const Forest& f, int labels, int max_nodes) {
  std::vector<Forest> out;
  const int n = static_cast<int>(f.size());
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < labels; ++l) {
      if (l == f[static_cast<std::size_t>(i)].first) continue;
      Forest g = f;
      g[static_cast<std::size_t>(i)].first = l;
      out.push_back(g);
    }
    Forest g;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      auto e = f[static_cast<std::size_t>(j)];
      if (is_ancestor(f, j, i)) --e.second;
      g.push_back(e);
    }
    out.push_back(g);
  }
  if (n >= max_nodes) return out;
  for (int p = -1; p < n; ++p) {
    auto kids = child_positions(f, p);
    const int k = static_cast<int>(kids.size());
    for (int s = 0; s <= k; ++s) {
      for (int e = s; e <= k; ++e) {
        int pos = s < k ? kids[static_cast<std::size_t>(s)] : (p < 0 ? n : p + f[static_cast<std::size_t>(p)].second);
        int size = 1;
        for (int c = s; c < e; ++c) size += f[static_cast<std::size_t>(kids[static_cast<std::size_t>(c)])].second;
        for (int l = 0; l < labels; ++l) {
          Forest g = f;
          for (int j = 0; j < n; ++j)
            if (j == p || is_ancestor(f, j, p)) ++g[static_cast<std::size_t>(j)].second;
          g.insert(g.begin() + pos, {l, size});
          out.push_back(g);
        }
      }
    }
  }
  return out;
}

inline std::map<std::string, int> bfs(const Forest& src, int labels, int max_nodes) {
  std::map<std::string, int> dist{{key(src), 0}};
  std::deque<Forest> queue{src};
  while (!queue.empty()) {
    Forest f = queue.front();
    queue.pop_front();
    int d = dist[key(f)];
    for (auto& g : neighbours(f, labels, max_nodes)) {
      if (dist.emplace(key(g), d + 1).second) queue.push_back(std::move(g));
    }
  }
  return dist;
}

// All ordered trees with exactly n nodes as preorder forests.
inline std::vector<Forest> trees_of_size(int n, int labels);

inline std::vector<Forest> forests_of_size(int n, int labels) {
  if (n == 0) return {Forest{}};
  std::vector<Forest> out;
  for (int first = 1; first <= n; ++first)
    for (const auto& t : trees_of_size(first, labels))
      for (const auto& rest : forests_of_size(n - first, labels)) {
        Forest f = t;
        f.insert(f.end(), rest.begin(), rest.end());
        out.push_back(f);
      }
  return out;
}

inline std::vector<Forest> trees_of_size(int n, int labels) {
  std::vector<Forest> out;
  for (const auto& kids : forests_of_size(n - 1, labels))
    for (int l = 0; l < labels; ++l) {
      Forest f{{l, n}};
      f.insert(f.end(), kids.begin(), kids.end());
      out.push_back(f);
    }
  return out;
}

inline OrderedTree to_ordered(const Forest& f) {
  OrderedTree t;
  std::vector<std::pair<int, int>> stack;  // (node, end)
  for (int i = 0; i < static_cast<int>(f.size()); ++i) {
    while (!stack.empty() && stack.back().second <= i) stack.pop_back();
    int parent = stack.empty() ? -1 : stack.back().first;
    int id = t.add(f[static_cast<std::size_t>(i)].first, parent);
    stack.push_back({id, i + f[static_cast<std::size_t>(i)].second});
  }
  return t;
}

}  // namespace vproof::testing::ted
