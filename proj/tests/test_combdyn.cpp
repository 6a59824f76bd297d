#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "morsecube/combdyn.hpp"
#include "morsecube/errors.hpp"
#include "support/fixtures.hpp"

using namespace morsecube;

namespace {

OuterMap small_map(const std::string& name, std::size_t depth, double tau, std::size_t bloat) {
  OuterMapParams p;
  p.tau = tau;
  p.bloat_rings = bloat;
  return build_outer_map(fixture::square_grid(depth), VectorField::builtin(name), p);
}

bool has(const std::vector<BoxId>& v, BoxId b) { return std::find(v.begin(), v.end(), b) != v.end(); }

std::string temp_path(const std::string& name) {
  return (std::filesystem::path(MORSECUBE_FIXTURE_DIR) / name).string();
}

double fraction_covered(const fixture::System& s, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double w = s.grid.min_box_width();
  std::uniform_real_distribution<double> coord(-2.0 + w, 2.0 - w);
  std::size_t ok = 0, tried = 0;
  while (tried < n) {
    const Vec x{coord(rng), coord(rng)};
    const Vec y = flow_map(s.field, x, s.tau, 1e-3);
    const auto by = s.grid.box_of_point(y);
    if (!by || s.grid.distance_to_exterior(y) < w) continue;
    ++tried;
    if (has(s.map.image(*s.grid.box_of_point(x)), *by)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("zero field with no bloat is the identity") {
  const auto f = small_map("zero-field", 8, 1.0, 0);
  for (BoxId b : f.domain().boxes()) {
    REQUIRE(f.image(b).size() == 1);
    CHECK(f.image(b)[0] == b);
    CHECK_FALSE(f.exits(b));
  }
}

TEST_CASE("linear sink halves distances in time ln 2") {
  const auto f = small_map("linear-sink", 16, std::log(2.0), 0);
  const auto& g = f.grid();
  const double eps = 1e-3;
  const BoxId src = *g.box_of_point(Vec{2 - eps, 2 - eps});
  const BoxId dst = *g.box_of_point(Vec{1 - eps / 2, 1 - eps / 2});
  CHECK(has(f.image(src), dst));
}

TEST_CASE("image lists are sorted and duplicate-free") {
  const auto& s = fixture::builtin("double-well");
  for (BoxId b : s.map.domain().boxes()) {
    const auto& img = s.map.image(b);
    CHECK(std::is_sorted(img.begin(), img.end()));
    CHECK(std::adjacent_find(img.begin(), img.end()) == img.end());
  }
}

TEST_CASE("circle boxes map onto the circle cover") {
  const auto f = fixture::cached_map("circle-attractor", 64, 0.5);
  const auto& g = f.grid();
  const CubicalSet cover = fixture::circle_cover(g, 1.0);
  REQUIRE(cover.count() > 100);
  for (BoxId b : cover.boxes()) {
    bool hit = false;
    for (BoxId t : f.image(b)) hit = hit || cover.contains(t);
    CHECK(hit);
  }
}

TEST_CASE("restrict") {
  const auto f = small_map("double-well", 16, 2.0, 1);
  CHECK(restrict(f, CubicalSet::full(f.grid())) == f);
  const auto empty = restrict(f, CubicalSet(f.grid()));
  CHECK(empty.domain().empty());
  const auto z = small_map("zero-field", 16, 1.0, 0);
  CubicalSet s(z.grid());
  for (std::uint32_t b = 0; b < 256; b += 3) s.insert(BoxId{b});
  const auto r = restrict(z, s);
  CHECK(r.domain() == s);
  for (BoxId b : s.boxes()) {
    REQUIRE(r.image(b).size() == 1);
    CHECK(r.image(b)[0] == b);
  }
  const auto r2 = restrict(f, s);
  for (BoxId b : s.boxes()) {
    bool left = false;
    for (BoxId t : f.image(b)) left = left || !s.contains(t);
    CHECK(r2.exits(b) == (left || f.exits(b)));
    for (BoxId t : r2.image(b)) CHECK(s.contains(t));
  }
}

TEST_CASE("map files round-trip exactly") {
  const auto z = small_map("zero-field", 8, 1.0, 0);
  save_map(z, temp_path("zero.map"));
  CHECK(load_map(temp_path("zero.map")) == z);
  const auto& s = fixture::builtin("circle-attractor");
  REQUIRE(s.map.grid().box_count() == 4096);
  save_map(s.map, temp_path("circle-roundtrip.map"));
  CHECK(load_map(temp_path("circle-roundtrip.map")) == s.map);
}

TEST_CASE("truncated and malformed map files are parse errors") {
  const auto f = small_map("double-well", 8, 2.0, 1);
  std::ostringstream out;
  write_map(f, out);
  const std::string text = out.str();
  std::istringstream cut(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_map(cut), ParseError);
  std::string bad = text;
  bad.replace(bad.find("\n1:"), 3, "\n1x");
  std::istringstream bin(bad);
  try {
    read_map(bin);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream empty("");
  CHECK_THROWS_AS(read_map(empty), ParseError);
}

TEST_CASE("images grow with bloat and builds are deterministic") {
  const auto a = small_map("double-well", 16, 2.0, 0);
  const auto b = small_map("double-well", 16, 2.0, 1);
  const auto c = small_map("double-well", 16, 2.0, 2);
  for (BoxId x : a.domain().boxes()) {
    CHECK(std::includes(b.image(x).begin(), b.image(x).end(), a.image(x).begin(), a.image(x).end()));
    CHECK(std::includes(c.image(x).begin(), c.image(x).end(), b.image(x).begin(), b.image(x).end()));
  }
  CHECK(small_map("double-well", 16, 2.0, 1) == b);
  std::ostringstream o1, o2;
  write_map(b, o1);
  write_map(small_map("double-well", 16, 2.0, 1), o2);
  CHECK(o1.str() == o2.str());
}

TEST_CASE("over-approximation spot check") {
  CHECK(fraction_covered(fixture::builtin("circle-attractor"), 1000, 5) == 1.0);
  const double dw = fraction_covered(fixture::builtin("double-well"), 1000, 6);
  MESSAGE("double-well coverage " << dw);
  CHECK(dw >= 0.95);
}

TEST_CASE("exits are flagged and blowups name the box") {
  const auto f = small_map("linear-sink", 8, 1.0, 1);
  CHECK(f.flagged().empty());
  const auto dw = small_map("double-well", 8, 2.0, 0);
  CHECK(dw.flagged().empty());
  const std::size_t d[1] = {4};
  const auto g = build_grid(Vec{0.5}, Vec{2.0}, d);
  const auto blow = VectorField::parse_polynomial("dim 1\ncomponent 0\n1 2\n");
  OuterMapParams p;
  p.tau = 5.0;
  p.h = 1e-2;
  try {
    build_outer_map(g, blow, p);
    FAIL("expected IntegrationBlowupError");
  } catch (const IntegrationBlowupError& e) {
    CHECK(std::string(e.what()).find("box") != std::string::npos);
  }
  const auto grow = VectorField::parse_polynomial("dim 1\ncomponent 0\n1 1\n");
  p.tau = 1.0;
  const auto out = build_outer_map(g, grow, p);
  CHECK(out.exits(BoxId{3}));
  CHECK_FALSE(out.flagged().empty());
}
