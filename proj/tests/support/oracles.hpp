#pragma once

// Brute-force reference implementations used only by tests. They share no code with the library
// beyond its data types.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "morsecube/combdyn.hpp"
#include "morsecube/cubgrid.hpp"

namespace oracle {

using morsecube::BoxId;
using morsecube::CubicalSet;
using morsecube::OuterMap;

/// Kosaraju: SCC label per domain box (-1 off the domain), labels in order of discovery.
inline std::vector<int> kosaraju(const OuterMap& f) {
  const std::size_t n = f.grid().box_count();
  std::vector<std::vector<std::uint32_t>> rev(n);
  for (BoxId b : f.domain().boxes())
    for (BoxId t : f.image(b))
      if (f.domain().contains(t)) rev[t.value].push_back(b.value);
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> order;
  for (BoxId s : f.domain().boxes()) {
    if (seen[s.value]) continue;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{s.value, 0}};
    seen[s.value] = 1;
    while (!stack.empty()) {
      auto& [v, i] = stack.back();
      const auto& img = f.image(BoxId{v});
      if (i < img.size()) {
        const std::uint32_t w = img[i++].value;
        if (f.domain().contains(BoxId{w}) && !seen[w]) {
          seen[w] = 1;
          stack.push_back({w, 0});
        }
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }
  std::vector<int> label(n, -1);
  int next = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (label[*it] >= 0) continue;
    std::vector<std::uint32_t> todo{*it};
    label[*it] = next;
    while (!todo.empty()) {
      const auto v = todo.back();
      todo.pop_back();
      for (auto u : rev[v])
        if (label[u] < 0) {
          label[u] = next;
          todo.push_back(u);
        }
    }
    ++next;
  }
  return label;
}

/// Recurrent SCCs as box sets, sorted by smallest box.
inline std::vector<CubicalSet> recurrent_sccs(const OuterMap& f) {
  const auto label = kosaraju(f);
  std::map<int, CubicalSet> groups;
  for (BoxId b : f.domain().boxes()) {
    auto it = groups.try_emplace(label[b.value], CubicalSet(f.grid())).first;
    it->second.insert(b);
  }
  std::vector<CubicalSet> out;
  for (auto& [l, s] : groups) {
    bool recurrent = s.count() > 1;
    if (!recurrent) {
      const BoxId b = *s.first();
      for (BoxId t : f.image(b)) recurrent = recurrent || t == b;
    }
    if (recurrent) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const CubicalSet& a, const CubicalSet& b) {
    return a.first()->value < b.first()->value;
  });
  return out;
}

/// Boxes reachable from b (including b) by breadth-first search.
inline CubicalSet reachable(const OuterMap& f, BoxId b) {
  CubicalSet seen(f.grid());
  std::vector<BoxId> todo{b};
  seen.insert(b);
  while (!todo.empty()) {
    const BoxId v = todo.back();
    todo.pop_back();
    for (BoxId t : f.image(v))
      if (!seen.contains(t)) {
        seen.insert(t);
        todo.push_back(t);
      }
  }
  return seen;
}

/// Forward hull by repeated union until nothing changes.
inline CubicalSet naive_hull(const OuterMap& f, CubicalSet s) {
  for (;;) {
    CubicalSet next = s | f.image_of(s);
    if (next == s) return s;
    s = next;
  }
}

// ---------------------------------------------------------------------------
// Planar cubical homology by explicit cell enumeration and dense elimination over Z/2.

/// A cell of the planar unit lattice: lower corner (x, y) and extent (ex, ey) in {0, 1}.
using Cell = std::array<int, 4>;

inline std::set<Cell> cells_2d(const std::vector<std::pair<int, int>>& boxes) {
  std::set<Cell> out;
  for (auto [i, j] : boxes) {
    out.insert({i, j, 1, 1});
    out.insert({i, j, 1, 0});
    out.insert({i, j + 1, 1, 0});
    out.insert({i, j, 0, 1});
    out.insert({i + 1, j, 0, 1});
    out.insert({i, j, 0, 0});
    out.insert({i + 1, j, 0, 0});
    out.insert({i, j + 1, 0, 0});
    out.insert({i + 1, j + 1, 0, 0});
  }
  return out;
}

inline int cell_dim(const Cell& c) { return c[2] + c[3]; }

inline std::vector<Cell> facets(const Cell& c) {
  std::vector<Cell> out;
  if (c[2]) {
    out.push_back({c[0], c[1], 0, c[3]});
    out.push_back({c[0] + 1, c[1], 0, c[3]});
  }
  if (c[3]) {
    out.push_back({c[0], c[1], c[2], 0});
    out.push_back({c[0], c[1] + 1, c[2], 0});
  }
  return out;
}

inline std::size_t dense_rank_z2(std::vector<std::vector<std::uint8_t>> m) {
  std::size_t rank = 0;
  const std::size_t rows = m.size();
  const std::size_t cols = rows ? m[0].size() : 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t p = rank;
    while (p < rows && !m[p][c]) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[rank]);
    for (std::size_t r = 0; r < rows; ++r)
      if (r != rank && m[r][c])
        for (std::size_t k = c; k < cols; ++k) m[r][k] ^= m[rank][k];
    ++rank;
  }
  return rank;
}

/// Betti numbers of H_*(|X|, |A|; Z/2) for planar box lists, degrees 0..2.
inline std::array<std::size_t, 3> betti_2d(const std::vector<std::pair<int, int>>& X,
                                           const std::vector<std::pair<int, int>>& A) {
  const auto cx = cells_2d(X);
  const auto ca = cells_2d(A);
  std::array<std::vector<Cell>, 3> by_dim;
  for (const auto& c : cx)
    if (!ca.count(c)) by_dim[cell_dim(c)].push_back(c);
  std::array<std::size_t, 4> rank{};  // rank[q] of d_q
  for (int q = 1; q <= 2; ++q) {
    const auto& rows = by_dim[q - 1];
    const auto& cols = by_dim[q];
    std::map<Cell, std::size_t> row_of;
    for (std::size_t i = 0; i < rows.size(); ++i) row_of[rows[i]] = i;
    std::vector<std::vector<std::uint8_t>> m(rows.size(), std::vector<std::uint8_t>(cols.size(), 0));
    for (std::size_t j = 0; j < cols.size(); ++j)
      for (const auto& f : facets(cols[j]))
        if (auto it = row_of.find(f); it != row_of.end()) m[it->second][j] ^= 1;
    rank[q] = rows.empty() || cols.empty() ? 0 : dense_rank_z2(m);
  }
  std::array<std::size_t, 3> b{};
  for (int q = 0; q <= 2; ++q) b[q] = by_dim[q].size() - rank[q] - rank[q + 1];
  return b;
}

}  // namespace oracle
