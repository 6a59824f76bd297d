#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "morsecube/errors.hpp"
#include "morsecube/morsegraph.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace morsecube;

namespace {

OuterMap zero_map(std::size_t depth) {
  OuterMapParams p;
  p.bloat_rings = 0;
  return build_outer_map(fixture::square_grid(depth), VectorField::builtin("zero-field"), p);
}

/// Basin of A_k by breadth-first search from every box.
CubicalSet basin_oracle(const OuterMap& f, const std::vector<CubicalSet>& comps, std::size_t k) {
  CubicalSet out(f.grid());
  for (BoxId b : f.domain().boxes()) {
    const CubicalSet r = oracle::reachable(f, b);
    bool ok = !r.intersects(f.flagged());
    for (std::size_t j = k; j < comps.size() && ok; ++j) ok = !r.intersects(comps[j]);
    if (ok) out.insert(b);
  }
  return out;
}

double max_radius(const CubicalSet& s) {
  double r = 0;
  for (BoxId b : s.boxes()) r = std::max(r, s.grid().box_center(b).norm());
  return r;
}

double min_radius(const CubicalSet& s) {
  double r = 1e9;
  for (BoxId b : s.boxes()) r = std::min(r, s.grid().box_center(b).norm());
  return r;
}

void check_structure(const fixture::System& s) {
  const auto& g = s.graph;
  const auto& filt = s.filt;
  const std::size_t l = g.size();
  REQUIRE(filt.size() == l);

  // Components agree with the independent SCC oracle, up to order.
  auto sorted = g.components;
  std::sort(sorted.begin(), sorted.end(),
            [](const CubicalSet& a, const CubicalSet& b) { return a.first()->value < b.first()->value; });
  CHECK(sorted == oracle::recurrent_sccs(s.map));

  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < l; ++j) {
      if (i != j) CHECK_FALSE(g.components[i].intersects(g.components[j]));
      if (i != j && g.reaches[j][i]) {
        CHECK(j > i);
        CHECK_FALSE(g.reaches[i][j]);
      }
    }

  // Every map edge out of M_j leads only to boxes reaching components of index <= j.
  for (std::size_t j = 0; j < l; ++j)
    for (BoxId b : g.components[j].boxes())
      for (BoxId t : s.map.image(b)) CHECK(g.max_reachable[t.value] <= static_cast<int>(j));

  for (std::size_t k = 1; k <= l; ++k) {
    const CubicalSet& A = filt.attractor(k);
    CHECK(s.map.forward_invariant(A));
    CHECK(filt.attractor(k - 1).subset_of(A));
    CHECK_FALSE(A == filt.attractor(k - 1));
    CubicalSet seed(s.grid);
    for (std::size_t i = 1; i <= k; ++i) seed = seed | g.morse_set(i);
    CHECK(A == oracle::naive_hull(s.map, seed));
    CHECK(filt.basin(k) == basin_oracle(s.map, g.components, k));
    CHECK(filt.basin(k - 1).subset_of(filt.basin(k)));
    CHECK((A & dual_repeller(filt, k - 1) & g.recurrent_union()) == g.morse_set(k));
    if (filt.has_neighborhood(k)) {
      const CubicalSet& W = filt.neighborhood(k);
      CHECK(s.map.forward_invariant(W));
      CHECK(A.subset_of(W));
      CHECK(W.subset_of(filt.basin(k)));
      CHECK(filt.neighborhood(k - 1).subset_of(W));
    }
  }
}

}  // namespace

TEST_CASE("zero field: every box is its own recurrent component") {
  const auto f = zero_map(6);
  const auto g = condense(f);
  CHECK(g.size() == 36);
  for (std::size_t k = 1; k <= g.size(); ++k) {
    CHECK(g.morse_set(k).count() == 1);
    CHECK(g.morse_set(k).first()->value == k - 1);
  }
  CHECK(g.edges.empty());
  CHECK(g.transient.empty());
  const auto seed = CubicalSet::from_boxes(f.grid(), {BoxId{14}});
  CHECK(combinatorial_attractor(f, seed) == seed);

  const auto filt = filtration(g, f);
  for (std::size_t k = 1; k <= filt.size(); ++k) {
    CHECK(filt.basin(k) == filt.attractor(k));
    CHECK(f.forward_invariant(filt.attractor(k)));
  }
  CHECK_FALSE(filt.has_neighborhood(1));
  CHECK_THROWS_AS(filt.neighborhood(1), PreconditionError);
}

TEST_CASE("circle attractor: origin then circle") {
  const auto& s = fixture::builtin("circle-attractor");
  REQUIRE(s.graph.size() == 2);
  const CubicalSet origin = fixture::circle_cover(s.grid, 0.0);
  const CubicalSet circle = fixture::circle_cover(s.grid, 1.0);
  CHECK(origin.subset_of(s.graph.morse_set(1)));
  CHECK(s.graph.morse_set(1).subset_of(collar(origin, 2)));
  CHECK(circle.subset_of(s.graph.morse_set(2)));
  CHECK(min_radius(s.graph.morse_set(2)) > 0.6);
  CHECK(max_radius(s.graph.morse_set(2)) < 1.4);
  CHECK(s.graph.edges == std::vector<std::pair<std::size_t, std::size_t>>{{1, 0}});
  CHECK(combinatorial_attractor(s.map, s.graph.morse_set(1)) == s.filt.attractor(1));
  CHECK(dual_repeller(s.filt, 1) == s.graph.morse_set(2));
  CHECK(dual_repeller(s.filt, 2).empty());
  CHECK(dual_repeller(s.filt, 0) == s.filt.attractor(2));
  CHECK_THROWS_AS(dual_repeller(s.filt, 3), Error);
  // The disk lies in A_2, the basin of A_1 stays inside the unit disk.
  CHECK(max_radius(s.filt.basin(1)) < 1.0);
  CHECK(min_radius(s.filt.attractor(2).complement()) > 1.0);
  check_structure(s);
}

TEST_CASE("double well: two sinks then the saddle") {
  const auto& s = fixture::builtin("double-well");
  REQUIRE(s.graph.size() == 3);
  const double w = s.grid.min_box_width();
  auto center = [&](std::size_t k) {
    Vec c{0.0, 0.0};
    const auto boxes = s.graph.morse_set(k).boxes();
    for (BoxId b : boxes) c += s.grid.box_center(b);
    return (1.0 / static_cast<double>(boxes.size())) * c;
  };
  CHECK(distance(center(1), Vec{-1.0, 0.0}) <= 2 * w);
  CHECK(distance(center(2), Vec{1.0, 0.0}) <= 2 * w);
  CHECK(distance(center(3), Vec{0.0, 0.0}) <= 2 * w);
  CHECK(s.graph.edges == std::vector<std::pair<std::size_t, std::size_t>>{{2, 0}, {2, 1}});

  const CubicalSet hull = combinatorial_attractor(s.map, s.graph.morse_set(3));
  CHECK(s.graph.morse_set(1).subset_of(hull));
  CHECK(s.graph.morse_set(2).subset_of(hull));
  CHECK(hull == oracle::naive_hull(s.map, s.graph.morse_set(3)));
  CHECK(connected_components(hull).size() == 1);
  CHECK(dual_repeller(s.filt, 2) == s.graph.morse_set(3));
  // Omega(A_2) misses exactly a band around the stable axis of the saddle.
  for (BoxId b : s.filt.basin(2).complement().boxes()) CHECK(std::abs(s.grid.box_center(b)[0]) <= 4 * w);
  check_structure(s);
}

TEST_CASE("attractor hull meeting a flagged box escapes the domain") {
  OuterMapParams p;
  p.tau = 1.0;
  const std::size_t d[1] = {8};
  const auto g = build_grid(Vec{0.0}, Vec{2.0}, d);
  const auto f = build_outer_map(g, VectorField::parse_polynomial("dim 1\ncomponent 0\n1 1\n"), p);
  try {
    combinatorial_attractor(f, CubicalSet::from_boxes(g, {BoxId{4}}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("attractor escapes domain") != std::string::npos);
  }
}

TEST_CASE("invariant_part is the largest forward-invariant subset") {
  const auto& s = fixture::builtin("double-well");
  const CubicalSet omega = s.filt.basin(2);
  const CubicalSet w = invariant_part(s.map, omega);
  CHECK(s.map.forward_invariant(w));
  CHECK(w.subset_of(omega));
  // Adding any removed box breaks invariance of the union's hull inside omega.
  for (BoxId b : (omega - w).boxes()) {
    const CubicalSet reach = oracle::reachable(s.map, b);
    CHECK_FALSE((reach.subset_of(omega) && !reach.intersects(s.map.flagged())));
  }
}

TEST_CASE("DOT export") {
  const auto& s = fixture::builtin("circle-attractor");
  const std::string dot = to_dot(s.graph);
  CHECK(dot.rfind("digraph morse {", 0) == 0);
  CHECK(dot.find("M1 [label=\"M1 (" + std::to_string(s.graph.morse_set(1).count()) + " boxes)\"]") !=
        std::string::npos);
  CHECK(dot.find("M2 -> M1") != std::string::npos);
  CHECK(std::count(dot.begin(), dot.end(), '\n') == 5);
  CHECK(to_dot(condense(s.map)) == dot);
}
