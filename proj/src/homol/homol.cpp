#include "morsecube/homol.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <sstream>
#include <unordered_map>

#include "morsecube/errors.hpp"

namespace morsecube {

using Rational = boost::multiprecision::cpp_rational;

std::string field_name(Field f) { return f == Field::Z2 ? "Z2" : "Q"; }

Field parse_field(const std::string& name) {
  if (name == "Z2" || name == "z2") return Field::Z2;
  if (name == "Q" || name == "q") return Field::Q;
  throw Error("unknown coefficient field '" + name + "' (expected Z2 or Q)");
}

long long BettiVector::euler() const {
  long long e = 0;
  for (std::size_t q = 0; q < ranks.size(); ++q)
    e += (q % 2 == 0 ? 1 : -1) * static_cast<long long>(ranks[q]);
  return e;
}

std::string to_string(const BettiVector& b) {
  std::string s = "(";
  for (std::size_t q = 0; q < b.ranks.size(); ++q) s += (q ? "," : "") + std::to_string(b.ranks[q]);
  return s + ")";
}

// ---------------------------------------------------------------------------

CellSpace::CellSpace(const CubicalGrid& grid) : grid_(grid) {
  total_ = 1;
  for (std::size_t i = 0; i < grid.dim(); ++i) {
    extent_[i] = 2 * grid.subdivisions(i) + 1;
    total_ *= extent_[i];
  }
}

BoxCoords CellSpace::coords(std::size_t cell) const {
  BoxCoords c{};
  for (std::size_t i = 0; i < grid_.dim(); ++i) {
    c[i] = static_cast<std::int64_t>(cell % extent_[i]);
    cell /= extent_[i];
  }
  return c;
}

std::size_t CellSpace::index(const BoxCoords& c) const {
  std::size_t idx = 0;
  for (std::size_t i = grid_.dim(); i-- > 0;) idx = idx * extent_[i] + static_cast<std::size_t>(c[i]);
  return idx;
}

std::size_t CellSpace::dim(std::size_t cell) const {
  const BoxCoords c = coords(cell);
  std::size_t d = 0;
  for (std::size_t i = 0; i < grid_.dim(); ++i) d += static_cast<std::size_t>(c[i] & 1);
  return d;
}

std::size_t CellSpace::cell_of_box(BoxId b) const {
  BoxCoords c = grid_.coords(b);
  for (std::size_t i = 0; i < grid_.dim(); ++i) c[i] = 2 * c[i] + 1;
  return index(c);
}

void CellSpace::boundary(std::size_t cell, std::vector<std::pair<std::size_t, int>>& out) const {
  out.clear();
  const BoxCoords c = coords(cell);
  int sign = 1;
  for (std::size_t i = 0; i < grid_.dim(); ++i) {
    if ((c[i] & 1) == 0) continue;
    BoxCoords up = c, down = c;
    ++up[i];
    --down[i];
    out.emplace_back(index(up), sign);
    out.emplace_back(index(down), -sign);
    sign = -sign;
  }
}

CellSpace::Mask CellSpace::closure(const CubicalSet& s) const {
  Mask m(total_, 0);
  const std::size_t d = grid_.dim();
  std::size_t faces = 1;
  for (std::size_t i = 0; i < d; ++i) faces *= 3;
  for (BoxId b : s.boxes()) {
    BoxCoords base = coords(cell_of_box(b));
    for (std::size_t code = 0; code < faces; ++code) {
      BoxCoords c = base;
      std::size_t t = code;
      for (std::size_t i = 0; i < d; ++i) {
        c[i] += static_cast<std::int64_t>(t % 3) - 1;
        t /= 3;
      }
      m[index(c)] = 1;
    }
  }
  return m;
}

CellSpace::Mask CellSpace::frontier(const CubicalSet& s) const {
  Mask cl = closure(s);
  Mask out(total_, 0);
  const std::size_t d = grid_.dim();
  for (std::size_t cell = 0; cell < total_; ++cell) {
    if (!cl[cell]) continue;
    const BoxCoords c = coords(cell);
    // Enumerate the boxes whose closure contains the cell.
    std::array<std::array<std::int64_t, 2>, kMaxDim> opts{};
    std::array<std::size_t, kMaxDim> nopt{};
    std::size_t combos = 1;
    for (std::size_t i = 0; i < d; ++i) {
      if (c[i] & 1) {
        opts[i] = {(c[i] - 1) / 2, 0};
        nopt[i] = 1;
      } else {
        opts[i] = {c[i] / 2 - 1, c[i] / 2};
        nopt[i] = 2;
      }
      combos *= nopt[i];
    }
    bool edge = false;
    for (std::size_t code = 0; code < combos && !edge; ++code) {
      BoxCoords bc{};
      std::size_t t = code;
      for (std::size_t i = 0; i < d; ++i) {
        bc[i] = opts[i][t % nopt[i]];
        t /= nopt[i];
      }
      if (!grid_.in_range(bc) || !s.contains(grid_.flat(bc))) edge = true;
    }
    if (edge) out[cell] = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

ChainComplex build_complex(const CellSpace& space, const CellSpace::Mask& x, const CellSpace::Mask& a,
                           const std::vector<CellSpace::Mask>& collapse) {
  const std::size_t n = space.size();
  const std::size_t top = space.grid().dim();
  for (std::size_t c = 0; c < n; ++c)
    if (a[c] && !x[c]) throw PreconditionError("subcomplex A is not contained in X");

  // Group of each cell; groups outside x are ignored, groups inside a need no new vertex.
  std::vector<int> group(n, -1);
  std::vector<char> active(collapse.size(), 0), new_vertex(collapse.size(), 0);
  for (std::size_t g = 0; g < collapse.size(); ++g) {
    std::size_t size = 0, in_x = 0, in_a = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!collapse[g][c]) continue;
      ++size;
      in_x += x[c] ? 1 : 0;
      in_a += a[c] ? 1 : 0;
    }
    if (size == 0 || in_x == 0) continue;
    if (in_x != size) throw PreconditionError("collapse group " + std::to_string(g) + " straddles X");
    if (in_a != 0 && in_a != size)
      throw PreconditionError("collapse group " + std::to_string(g) + " meets A without lying in it");
    active[g] = 1;
    new_vertex[g] = in_a == 0 ? 1 : 0;
    for (std::size_t c = 0; c < n; ++c)
      if (collapse[g][c]) {
        if (group[c] >= 0) throw PreconditionError("collapse groups overlap");
        group[c] = static_cast<int>(g);
      }
  }

  ChainComplex cx;
  cx.cells.assign(top + 1, {});
  cx.boundary.assign(top + 1, {});
  std::vector<std::size_t> row(n, static_cast<std::size_t>(-1));
  std::vector<std::size_t> group_row(collapse.size(), static_cast<std::size_t>(-1));
  for (std::size_t c = 0; c < n; ++c) {
    if (!x[c] || a[c] || group[c] >= 0) continue;
    const std::size_t d = space.dim(c);
    row[c] = cx.cells[d].size();
    cx.cells[d].push_back(c);
  }
  for (std::size_t g = 0; g < collapse.size(); ++g)
    if (active[g] && new_vertex[g]) {
      group_row[g] = cx.cells[0].size();
      cx.cells[0].push_back(n + g);
    }

  std::vector<std::pair<std::size_t, int>> facets;
  std::map<std::size_t, int> acc;
  for (std::size_t d = 1; d <= top; ++d) {
    cx.boundary[d].reserve(cx.cells[d].size());
    for (std::size_t c : cx.cells[d]) {
      space.boundary(c, facets);
      acc.clear();
      for (auto [f, s] : facets) {
        if (a[f]) continue;
        if (group[f] >= 0) {
          if (d == 1) acc[group_row[group[f]]] += s;
          continue;
        }
        acc[row[f]] += s;
      }
      std::vector<std::pair<std::size_t, int>> col;
      for (auto [r, s] : acc)
        if (s != 0) col.emplace_back(r, s);
      cx.boundary[d].push_back(std::move(col));
    }
  }
  return cx;
}

namespace {

std::size_t rank_z2(const std::vector<std::vector<std::pair<std::size_t, int>>>& cols, std::size_t rows,
                    const std::vector<char>& skip, std::vector<char>& pivots) {
  std::vector<std::vector<std::size_t>> reduced(cols.size());
  std::vector<std::size_t> owner(rows, static_cast<std::size_t>(-1));
  std::size_t rank = 0;
  std::vector<std::size_t> tmp;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (!skip.empty() && skip[j]) continue;
    std::vector<std::size_t> col;
    for (auto [r, s] : cols[j])
      if (s % 2 != 0) col.push_back(r);
    while (!col.empty() && owner[col.back()] != static_cast<std::size_t>(-1)) {
      const auto& other = reduced[owner[col.back()]];
      tmp.clear();
      std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                    std::back_inserter(tmp));
      col.swap(tmp);
    }
    if (!col.empty()) {
      owner[col.back()] = j;
      pivots[col.back()] = 1;
      reduced[j] = std::move(col);
      ++rank;
    }
  }
  return rank;
}

std::size_t rank_q(const std::vector<std::vector<std::pair<std::size_t, int>>>& cols, std::size_t rows,
                   const std::vector<char>& skip, std::vector<char>& pivots) {
  using Col = std::vector<std::pair<std::size_t, Rational>>;
  std::vector<Col> reduced(cols.size());
  std::vector<std::size_t> owner(rows, static_cast<std::size_t>(-1));
  std::size_t rank = 0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (!skip.empty() && skip[j]) continue;
    Col col;
    for (auto [r, s] : cols[j]) col.emplace_back(r, Rational(s));
    while (!col.empty() && owner[col.back().first] != static_cast<std::size_t>(-1)) {
      const Col& other = reduced[owner[col.back().first]];
      const Rational factor = col.back().second / other.back().second;
      Col next;
      std::size_t i = 0, k = 0;
      while (i < col.size() || k < other.size()) {
        if (k == other.size() || (i < col.size() && col[i].first < other[k].first)) {
          next.push_back(col[i++]);
        } else if (i == col.size() || other[k].first < col[i].first) {
          next.emplace_back(other[k].first, -factor * other[k].second);
          ++k;
        } else {
          Rational v = col[i].second - factor * other[k].second;
          if (v != 0) next.emplace_back(col[i].first, std::move(v));
          ++i;
          ++k;
        }
      }
      col.swap(next);
    }
    if (!col.empty()) {
      owner[col.back().first] = j;
      pivots[col.back().first] = 1;
      reduced[j] = std::move(col);
      ++rank;
    }
  }
  return rank;
}

}  // namespace

std::vector<std::size_t> boundary_ranks(const ChainComplex& c, Field field) {
  const std::size_t top = c.cells.size() - 1;
  std::vector<std::size_t> ranks(top + 2, 0);
  // Top degree first: a (q-1)-cell that is a pivot row of d_q has a column reducing to zero in d_{q-1}.
  std::vector<char> cleared;
  for (std::size_t q = top; q >= 1; --q) {
    const std::size_t rows = c.cells[q - 1].size();
    std::vector<char> skip = std::move(cleared);
    if (skip.size() != c.boundary[q].size()) skip.assign(c.boundary[q].size(), 0);
    cleared.assign(rows, 0);
    ranks[q] = field == Field::Z2 ? rank_z2(c.boundary[q], rows, skip, cleared)
                                  : rank_q(c.boundary[q], rows, skip, cleared);
  }
  return ranks;
}

void check_boundary_squared(const ChainComplex& c, Field field) {
  std::unordered_map<std::size_t, long long> acc;
  for (std::size_t q = 2; q < c.boundary.size(); ++q)
    for (std::size_t j = 0; j < c.boundary[q].size(); ++j) {
      acc.clear();
      for (auto [r, s] : c.boundary[q][j])
        for (auto [r2, s2] : c.boundary[q - 1][r]) acc[r2] += static_cast<long long>(s) * s2;
      for (auto [r2, v] : acc)
        if (field == Field::Z2 ? (v % 2 != 0) : (v != 0))
          throw ConsistencyError("boundary of boundary is nonzero in degree " + std::to_string(q));
    }
}

long long cell_euler(const ChainComplex& c) {
  long long e = 0;
  for (std::size_t q = 0; q < c.cells.size(); ++q)
    e += (q % 2 == 0 ? 1 : -1) * static_cast<long long>(c.cells[q].size());
  return e;
}

BettiVector betti_of_complex(const ChainComplex& c, Field field, std::size_t top_degree) {
  check_boundary_squared(c, field);
  const auto ranks = boundary_ranks(c, field);
  BettiVector b;
  b.field = field;
  b.ranks.assign(top_degree + 1, 0);
  for (std::size_t q = 0; q <= top_degree && q < c.cells.size(); ++q) {
    const std::size_t rq = q == 0 ? 0 : ranks[q];
    const std::size_t rq1 = q + 1 < ranks.size() ? ranks[q + 1] : 0;
    b.ranks[q] = c.cells[q].size() - rq - rq1;
  }
  if (b.euler() != cell_euler(c)) throw ConsistencyError("Euler-Poincare identity fails");
  return b;
}

BettiVector betti_cells(const CellSpace& space, const CellSpace::Mask& x, const CellSpace::Mask& a, Field field) {
  return betti_of_complex(build_complex(space, x, a), field, space.grid().dim());
}

BettiVector betti(const CubicalSet& X, const CubicalSet& A, Field field) {
  if (!A.subset_of(X)) throw PreconditionError("betti(X, A) needs A within X");
  const CellSpace space(X.grid());
  return betti_cells(space, space.closure(X), space.closure(A), field);
}

BettiVector betti_collapsed(const CubicalSet& X, const CubicalSet& A, const std::vector<CubicalSet>& groups,
                            Field field) {
  if (!A.subset_of(X)) throw PreconditionError("betti(X, A) needs A within X");
  const CellSpace space(X.grid());
  std::vector<CellSpace::Mask> masks;
  for (const auto& g : groups) masks.push_back(space.closure(g));
  return betti_of_complex(build_complex(space, space.closure(X), space.closure(A), masks), field,
                          X.grid().dim());
}

long long euler(const CubicalSet& X, const CubicalSet& A, Field field) {
  if (!A.subset_of(X)) throw PreconditionError("euler(X, A) needs A within X");
  const CellSpace space(X.grid());
  const ChainComplex c = build_complex(space, space.closure(X), space.closure(A));
  const BettiVector b = betti_of_complex(c, field, X.grid().dim());
  return b.euler();
}

long long phi_q(const BettiVector& b, std::size_t q) {
  long long s = 0;
  for (std::size_t j = 0; j <= q; ++j) s += ((q - j) % 2 == 0 ? 1 : -1) * static_cast<long long>(b[j]);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

const CubicalSet& pick(const MorseFiltration& filt, std::size_t k, Neighborhoods which) {
  return which == Neighborhoods::trimmed ? filt.neighborhood(k) : filt.shrunk_neighborhood(k);
}

void require_invariant(const OuterMap& f, const CubicalSet& w, std::size_t k) {
  for (BoxId b : w.boxes()) {
    bool ok = !f.exits(b);
    for (BoxId t : f.image(b)) ok = ok && w.contains(t);
    if (!ok)
      throw ConsistencyError("W_" + std::to_string(k) + " is not forward invariant at box " +
                             std::to_string(b.value));
  }
}

}  // namespace

BettiVector critical_groups(const MorseFiltration& filt, const OuterMap& f, std::size_t k, Field field,
                            Neighborhoods which) {
  if (k < 1 || k > filt.size()) throw Error("Morse set index out of range");
  const CubicalSet& wk = pick(filt, k, which);
  const CubicalSet& wp = pick(filt, k - 1, which);
  require_invariant(f, wk, k);
  require_invariant(f, wp, k - 1);
  if (!wp.subset_of(wk)) throw ConsistencyError("neighborhoods are not nested");
  return betti(wk, wp, field);
}

BettiVector quotient_critical_groups(const MorseFiltration& filt, const OuterMap& f, std::size_t k,
                                     Field field, Neighborhoods which) {
  if (k < 1 || k > filt.size()) throw Error("Morse set index out of range");
  const CubicalSet& wk = pick(filt, k, which);
  const CubicalSet& wp = pick(filt, k - 1, which);
  require_invariant(f, wk, k);
  require_invariant(f, wp, k - 1);
  if (collar(filt.morse_set(k), 1).intersects(wp))
    throw PreconditionError("collar of M_" + std::to_string(k) + " meets W_" + std::to_string(k - 1) +
                            "; use a deeper grid");
  std::vector<CubicalSet> groups;
  for (std::size_t i = 1; i <= k; ++i) groups.push_back(filt.morse_set(i));
  return betti_collapsed(wk, wp, groups, field);
}

CriticalGroupTable critical_group_table(const MorseFiltration& filt, const OuterMap& f, Field field,
                                        Neighborhoods which) {
  CriticalGroupTable t;
  t.field = field;
  for (std::size_t k = 1; k <= filt.size(); ++k)
    t.entries.push_back({critical_groups(filt, f, k, field, which),
                         quotient_critical_groups(filt, f, k, field, which)});
  return t;
}

std::vector<BettiVector> sublevel_critical_groups(const std::vector<CubicalSet>& sublevels, Field field) {
  std::vector<BettiVector> out;
  for (std::size_t k = 1; k < sublevels.size(); ++k) {
    if (!sublevels[k - 1].subset_of(sublevels[k]))
      throw PreconditionError("sublevel covers are not nested at level " + std::to_string(k));
    out.push_back(betti(sublevels[k], sublevels[k - 1], field));
  }
  return out;
}

BettiVector equilibrium_critical_groups(const CubicalSet& sublevel_c, const CubicalSet& morse_set, Field field) {
  if (!morse_set.subset_of(sublevel_c)) throw PreconditionError("Morse set is not inside V_c");
  return betti(sublevel_c, sublevel_c - morse_set, field);
}

std::vector<long long> morse_numbers(const std::vector<BettiVector>& groups, std::size_t top_degree) {
  std::vector<long long> m(top_degree + 1, 0);
  for (const auto& g : groups)
    for (std::size_t q = 0; q <= top_degree; ++q) m[q] += static_cast<long long>(g[q]);
  return m;
}

BettiVector basin_betti(const MorseFiltration& filt, Field field) {
  const CubicalSet& w = filt.neighborhood(filt.size());
  return betti(w, CubicalSet(w.grid()), field);
}

BettiVector quotient_basin_betti(const MorseFiltration& filt, Field field) {
  const CubicalSet& w = filt.neighborhood(filt.size());
  std::vector<CubicalSet> groups;
  for (std::size_t i = 1; i <= filt.size(); ++i) groups.push_back(filt.morse_set(i));
  return betti_collapsed(w, CubicalSet(w.grid()), groups, field);
}

bool MorseReport::all_pass() const {
  return equation && gamma_top_zero &&
         std::all_of(inequality.begin(), inequality.end(), [](bool b) { return b; }) &&
         std::all_of(gamma_nonnegative.begin(), gamma_nonnegative.end(), [](bool b) { return b; });
}

MorseReport verify_inequalities(const std::vector<long long>& m, const std::vector<long long>& beta) {
  MorseReport r;
  const std::size_t n = std::max(m.size(), beta.size());
  r.m = m;
  r.beta = beta;
  r.m.resize(n, 0);
  r.beta.resize(n, 0);
  for (std::size_t q = 0; q < n; ++q) {
    long long l = 0, rr = 0;
    for (std::size_t j = 0; j <= q; ++j) {
      const long long s = (q - j) % 2 == 0 ? 1 : -1;
      l += s * r.m[j];
      rr += s * r.beta[j];
    }
    r.lhs.push_back(l);
    r.rhs.push_back(rr);
    r.inequality.push_back(l >= rr);
    r.gamma.push_back(l - rr);
    r.gamma_nonnegative.push_back(l - rr >= 0);
    const long long sign = q % 2 == 0 ? 1 : -1;
    r.morse_sum += sign * r.m[q];
    r.euler += sign * r.beta[q];
  }
  r.equation = r.morse_sum == r.euler;
  r.gamma_top_zero = n == 0 || r.gamma.back() == 0;
  return r;
}

}  // namespace morsecube
