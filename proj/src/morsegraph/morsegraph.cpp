#include "morsecube/morsegraph.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <functional>
#include <queue>
#include <sstream>

#include "morsecube/errors.hpp"

namespace morsecube {

CubicalSet MorseGraph::recurrent_union() const {
  CubicalSet u(transient.grid());
  for (const auto& c : components) u = u | c;
  return u;
}

namespace {

struct Sccs {
  std::vector<std::int64_t> scc_of;             // per box, -1 off the domain
  std::vector<std::vector<std::uint32_t>> members;  // in completion order: sinks first
};

Sccs tarjan(const OuterMap& f) {
  const std::size_t n = f.grid().box_count();
  Sccs out;
  out.scc_of.assign(n, -1);
  std::vector<std::int64_t> index(n, -1), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  struct Frame {
    std::uint32_t v;
    std::size_t next;
  };
  std::vector<Frame> call;
  std::int64_t counter = 0;
  for (BoxId root : f.domain().boxes()) {
    if (index[root.value] >= 0) continue;
    call.push_back({root.value, 0});
    index[root.value] = low[root.value] = counter++;
    stack.push_back(root.value);
    on_stack[root.value] = 1;
    while (!call.empty()) {
      Frame& fr = call.back();
      const auto& img = f.image(BoxId{fr.v});
      if (fr.next < img.size()) {
        const std::uint32_t w = img[fr.next++].value;
        if (!f.domain().contains(BoxId{w})) continue;
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[fr.v] = std::min(low[fr.v], index[w]);
        }
        continue;
      }
      const std::uint32_t v = fr.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::uint32_t> comp;
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          out.scc_of[w] = static_cast<std::int64_t>(out.members.size());
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.members.push_back(std::move(comp));
      }
    }
  }
  return out;
}

}  // namespace

MorseGraph condense(const OuterMap& f) {
  const CubicalGrid& grid = f.grid();
  const std::size_t n = grid.box_count();
  const Sccs sccs = tarjan(f);
  const std::size_t ns = sccs.members.size();

  std::vector<std::int64_t> rec_id(ns, -1);
  std::vector<std::size_t> rec_scc;
  for (std::size_t s = 0; s < ns; ++s) {
    const auto& mem = sccs.members[s];
    bool recurrent = mem.size() > 1;
    if (!recurrent) {
      const auto& img = f.image(BoxId{mem[0]});
      recurrent = std::binary_search(img.begin(), img.end(), BoxId{mem[0]});
    }
    if (recurrent) {
      rec_id[s] = static_cast<std::int64_t>(rec_scc.size());
      rec_scc.push_back(s);
    }
  }
  const std::size_t nr = rec_scc.size();
  const std::size_t words = (nr + 63) / 64;

  // Completion order lists every SCC after all SCCs it can reach.
  std::vector<std::uint64_t> reach(ns * words, 0);
  std::vector<char> exit(ns, 0);
  for (std::size_t s = 0; s < ns; ++s) {
    std::uint64_t* rs = reach.data() + s * words;
    if (rec_id[s] >= 0) rs[rec_id[s] / 64] |= std::uint64_t{1} << (rec_id[s] % 64);
    for (std::uint32_t b : sccs.members[s]) {
      if (f.exits(BoxId{b})) exit[s] = 1;
      for (BoxId t : f.image(BoxId{b})) {
        const std::int64_t ts = sccs.scc_of[t.value];
        if (ts < 0 || static_cast<std::size_t>(ts) == s) continue;
        const std::uint64_t* rt = reach.data() + static_cast<std::size_t>(ts) * words;
        for (std::size_t w = 0; w < words; ++w) rs[w] |= rt[w];
        exit[s] |= exit[ts];
      }
    }
  }
  auto reaches_rec = [&](std::size_t from_rec, std::size_t to_rec) {
    const std::uint64_t* r = reach.data() + rec_scc[from_rec] * words;
    return (r[to_rec / 64] >> (to_rec % 64)) & 1u;
  };

  // Kahn order on the reachability relation, smallest box first among ready components.
  std::vector<std::size_t> pending(nr, 0);
  for (std::size_t c = 0; c < nr; ++c) {
    const std::uint64_t* r = reach.data() + rec_scc[c] * words;
    std::size_t cnt = 0;
    for (std::size_t w = 0; w < words; ++w) cnt += static_cast<std::size_t>(std::popcount(r[w]));
    pending[c] = cnt - 1;
  }
  using Item = std::pair<std::uint32_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
  for (std::size_t c = 0; c < nr; ++c)
    if (pending[c] == 0) ready.push({sccs.members[rec_scc[c]].front(), c});
  std::vector<std::size_t> order;
  std::vector<std::int64_t> final_of(nr, -1);
  while (!ready.empty()) {
    const std::size_t c = ready.top().second;
    ready.pop();
    final_of[c] = static_cast<std::int64_t>(order.size());
    order.push_back(c);
    for (std::size_t d = 0; d < nr; ++d)
      if (d != c && reaches_rec(d, c) && --pending[d] == 0)
        ready.push({sccs.members[rec_scc[d]].front(), d});
  }
  if (order.size() != nr) throw ConsistencyError("recurrent components form a cycle");

  MorseGraph g;
  g.transient = CubicalSet(grid);
  g.component_of.assign(n, -1);
  g.max_reachable.assign(n, -1);
  g.reaches_exit.assign(n, 0);
  for (std::size_t k = 0; k < nr; ++k) {
    CubicalSet comp(grid);
    for (std::uint32_t b : sccs.members[rec_scc[order[k]]]) {
      comp.insert(BoxId{b});
      g.component_of[b] = static_cast<int>(k);
    }
    g.components.push_back(std::move(comp));
  }
  std::vector<int> scc_max(ns, -1);
  for (std::size_t s = 0; s < ns; ++s) {
    const std::uint64_t* r = reach.data() + s * words;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t word = r[w];
      while (word) {
        const std::size_t c = w * 64 + static_cast<std::size_t>(std::countr_zero(word));
        scc_max[s] = std::max(scc_max[s], static_cast<int>(final_of[c]));
        word &= word - 1;
      }
    }
  }
  for (BoxId b : f.domain().boxes()) {
    const auto s = static_cast<std::size_t>(sccs.scc_of[b.value]);
    g.max_reachable[b.value] = scc_max[s];
    g.reaches_exit[b.value] = exit[s];
    if (rec_id[s] < 0) g.transient.insert(b);
  }

  g.reaches.assign(nr, std::vector<bool>(nr, false));
  for (std::size_t j = 0; j < nr; ++j)
    for (std::size_t i = 0; i < nr; ++i)
      if (i != j && reaches_rec(order[j], order[i])) {
        if (i > j) throw ConsistencyError("Morse order violates reachability");
        g.reaches[j][i] = true;
      }
  for (std::size_t j = 0; j < nr; ++j)
    for (std::size_t i = 0; i < j; ++i) {
      if (!g.reaches[j][i]) continue;
      bool direct = true;
      for (std::size_t k = i + 1; k < j && direct; ++k)
        if (g.reaches[j][k] && g.reaches[k][i]) direct = false;
      if (direct) g.edges.emplace_back(j, i);
    }
  return g;
}

CubicalSet combinatorial_attractor(const OuterMap& f, const CubicalSet& seed) {
  if (seed.empty()) throw PreconditionError("attractor seed is empty");
  CubicalSet hull = seed;
  std::deque<BoxId> queue;
  for (BoxId b : seed.boxes()) queue.push_back(b);
  while (!queue.empty()) {
    const BoxId b = queue.front();
    queue.pop_front();
    if (f.exits(b))
      throw Error("attractor escapes domain at box " + std::to_string(b.value) +
                  "; enlarge the domain");
    for (BoxId t : f.image(b))
      if (!hull.contains(t)) {
        hull.insert(t);
        queue.push_back(t);
      }
  }
  return hull;
}

CubicalSet invariant_part(const OuterMap& f, const CubicalSet& s) {
  const CubicalGrid& grid = f.grid();
  std::vector<std::vector<std::uint32_t>> preds(grid.box_count());
  for (BoxId b : (f.domain() & s).boxes())
    for (BoxId t : f.image(b)) preds[t.value].push_back(b.value);
  CubicalSet bad = s.complement();
  for (BoxId b : s.boxes())
    if (f.exits(b) || !f.domain().contains(b)) bad.insert(b);
  std::deque<std::uint32_t> queue;
  for (BoxId b : bad.boxes()) queue.push_back(b.value);
  while (!queue.empty()) {
    const std::uint32_t t = queue.front();
    queue.pop_front();
    for (std::uint32_t p : preds[t])
      if (!bad.contains(BoxId{p})) {
        bad.insert(BoxId{p});
        queue.push_back(p);
      }
  }
  return s - bad;
}

const CubicalSet& MorseFiltration::neighborhood(std::size_t k) const {
  if (k == 0) return empty_;
  if (!neighborhood_valid_.at(k - 1))
    throw PreconditionError("trimmed basin of A_" + std::to_string(k) +
                            " has no forward-invariant part containing it; use a deeper grid");
  return neighborhoods_[k - 1];
}

const CubicalSet& MorseFiltration::shrunk_neighborhood(std::size_t k) const {
  if (k == 0) return empty_;
  if (!shrunk_valid_.at(k - 1))
    throw PreconditionError("shrunk neighborhood of A_" + std::to_string(k) +
                            " no longer contains it; use a deeper grid");
  return shrunk_[k - 1];
}

MorseFiltration filtration(const MorseGraph& g, const OuterMap& f) {
  const CubicalGrid& grid = f.grid();
  MorseFiltration filt;
  filt.empty_ = CubicalSet(grid);
  const std::size_t l = g.size();
  CubicalSet prev(grid);
  CubicalSet prev_w(grid);
  for (std::size_t k = 1; k <= l; ++k) {
    const CubicalSet& mk = g.morse_set(k);
    if (mk.intersects(prev))
      throw ConsistencyError("M_" + std::to_string(k) + " meets A_" + std::to_string(k - 1));
    CubicalSet ak = combinatorial_attractor(f, prev | mk);

    CubicalSet basin(grid);
    for (BoxId b : f.domain().boxes())
      if (!g.reaches_exit[b.value] && g.max_reachable[b.value] < static_cast<int>(k)) basin.insert(b);

    const CubicalSet candidate = basin - collar(basin.complement(), 1);
    CubicalSet w = invariant_part(f, candidate);
    if (!prev_w.subset_of(w)) throw ConsistencyError("neighborhoods are not nested");
    if (!ak.subset_of(basin)) throw ConsistencyError("attractor leaves its basin");
    const bool valid = ak.subset_of(w);
    filt.neighborhood_valid_.push_back(valid ? 1 : 0);

    CubicalSet shrunk = invariant_part(f, w - collar(w.complement(), 1));
    filt.shrunk_valid_.push_back(valid && ak.subset_of(shrunk) ? 1 : 0);

    filt.morse_sets_.push_back(mk);
    filt.attractors_.push_back(ak);
    filt.basins_.push_back(std::move(basin));
    filt.neighborhoods_.push_back(w);
    filt.shrunk_.push_back(std::move(shrunk));
    prev = std::move(ak);
    prev_w = std::move(w);
  }
  return filt;
}

CubicalSet dual_repeller(const MorseFiltration& filt, std::size_t k) {
  const std::size_t l = filt.size();
  if (k > l) throw Error("repeller index " + std::to_string(k) + " out of range 0.." + std::to_string(l));
  return filt.attractor(l) - filt.basin(k);
}

std::string to_dot(const MorseGraph& g) {
  std::ostringstream out;
  out << "digraph morse {\n";
  for (std::size_t k = 0; k < g.size(); ++k)
    out << "  M" << k + 1 << " [label=\"M" << k + 1 << " (" << g.components[k].count() << " boxes)\"];\n";
  for (const auto& [j, i] : g.edges) out << "  M" << j + 1 << " -> M" << i + 1 << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace morsecube
