#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "morsecube/errors.hpp"
#include "morsecube/lyap.hpp"
#include "support/fixtures.hpp"

using namespace morsecube;

namespace {

BoxId at(const CubicalGrid& g, std::int64_t i, std::int64_t j) { return g.flat(BoxCoords{i, j, 0, 0}); }

CubicalSet block(const CubicalGrid& g, std::int64_t lo, std::int64_t hi) {
  CubicalSet s(g);
  for (std::int64_t i = lo; i <= hi; ++i)
    for (std::int64_t j = lo; j <= hi; ++j) s.insert(at(g, i, j));
  return s;
}

/// Linear sink on [-2,2]^2 at depth 16 with K = [-0.25,0.25]^2 and Omega the whole grid.
struct Sink {
  CubicalGrid grid = fixture::square_grid(16);
  CubicalSet K = block(grid, 7, 8);
  VectorField field = VectorField::builtin("linear-sink");
  LyapunovParams params = fixture::lyap_params(2.0);
  StrictMorseLyapunov V = StrictMorseLyapunov::single(field, K, CubicalSet::full(grid), params);
  std::vector<CriticalRange> critical{{0.0, 0.0}};
};

/// Independent Simpson rule for psi along the positive x-axis of the linear sink.
double sink_psi_oracle(double x0, double lambda) {
  auto alpha = [](double r) { return r <= 0.25 ? 0.0 : (r - 0.25) * (1.0 + 1.0 / (2.0 - r)); };
  const double T = std::log(x0 / 0.25);
  const int n = 20000;
  const double dt = T / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = i * dt;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(lambda * t) * alpha(x0 * std::exp(-t));
  }
  return s * dt / 3.0;
}

std::vector<CriticalRange> morse_values(const LyapunovFunction& V, const fixture::System& s) {
  std::vector<CriticalRange> out;
  for (std::size_t k = 1; k <= s.graph.size(); ++k) {
    CriticalRange r{1e300, -1e300};
    for (BoxId b : s.graph.morse_set(k).boxes()) {
      const double v = V.value(s.grid.box_center(b));
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("alpha examples") {
  const std::size_t d[2] = {16, 16};
  const auto g = build_grid(Vec{-4.0, -4.0}, Vec{4.0, 4.0}, d);
  const CubicalSet K = block(g, 7, 8);       // [-0.5, 0.5]^2
  const CubicalSet omega = block(g, 4, 11);  // [-2, 2]^2
  const auto a = make_alpha(K, omega);
  CHECK(a(Vec{0.0, 0.0}) == 0.0);
  CHECK(a(Vec{0.5, 0.5}) == 0.0);
  CHECK(a(Vec{1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(a.distance_to_K(Vec{1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(a.gap(Vec{1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(std::isinf(a(Vec{2.5, 0.0})));
  CHECK_FALSE(a.in_omega(Vec{2.5, 0.0}));
  CHECK(make_alpha(K, omega, 3.0)(Vec{1.0, 0.0}) == doctest::Approx(3.0));

  // Blows up approaching the boundary of Omega: alpha * gap >= d(x, K).
  double prev = 0.0;
  for (int j = 1; j <= 8; ++j) {
    const double eps = std::pow(10.0, -j);
    const Vec x{2.0 - eps, 0.3};
    const double v = a(x);
    CHECK(v * a.gap(x) >= a.distance_to_K(x));
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 1e7);

  // Bounded below away from K inside Omega.
  for (BoxId b : (omega - collar(K, 1)).boxes()) CHECK(a(g.box_center(b)) >= 0.25);
}

TEST_CASE("alpha preconditions") {
  const auto g = fixture::square_grid(16);
  CHECK_THROWS_AS(make_alpha(CubicalSet(g), CubicalSet::full(g)), PreconditionError);
  CHECK_THROWS_AS(make_alpha(block(g, 6, 9), block(g, 7, 8)), PreconditionError);
  CHECK_THROWS_AS(make_alpha(block(g, 7, 8), CubicalSet::full(g), 0.0), PreconditionError);
  try {
    make_alpha(block(g, 7, 8), block(g, 6, 9));
    FAIL("expected PreconditionError");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("deeper grid") != std::string::npos);
  }
  // K touching the domain edge leaves no room either.
  CHECK_THROWS_AS(make_alpha(block(g, 0, 1), CubicalSet::full(g)), PreconditionError);
}

TEST_CASE("phi and psi on the linear sink") {
  const Sink s;
  const auto& a = s.V.alpha(1);
  CHECK(eval_phi(s.field, a, Vec{0.1, -0.2}, 10.0, 1e-3) == 0.0);
  CHECK(eval_psi(s.field, a, Vec{0.1, -0.2}, 1.0, 10.0, 1e-3) == 0.0);
  for (const Vec& x : {Vec{1.0, 0.0}, Vec{-1.2, 0.7}, Vec{1.9, 1.9}})
    CHECK(eval_phi(s.field, a, x, 10.0, 1e-3) == a(x));
  for (double x0 : {1.0, 1.7}) {
    for (double lambda : {1.0, 2.0}) {
      const double psi = eval_psi(s.field, a, Vec{x0, 0.0}, lambda, 10.0, 1e-3);
      CHECK(std::abs(psi - sink_psi_oracle(x0, lambda)) <= 1e-5);
    }
  }
  // The sink never leaves K, so waiting for capture changes nothing.
  CHECK(eval_psi(s.field, a, Vec{1.3, -0.4}, 1.0, 10.0, 1e-3, 2.0) == eval_psi(s.field, a, Vec{1.3, -0.4}, 1.0, 10.0, 1e-3));
  CHECK(eval_phi(s.field, a, Vec{0.1, 0.1}, 10.0, 1e-3, 2.0) == 0.0);
  CHECK_THROWS_AS(eval_psi(s.field, a, Vec{1.0, 0.0}, 0.0, 10.0, 1e-3), PreconditionError);
  CHECK_THROWS_AS(eval_phi(s.field, a, Vec{1.0, 0.0}, 0.5, 1e-3), TruncationError);
}

TEST_CASE("phi decreases and psi contracts along the circle flow") {
  const auto& s = fixture::builtin("circle-attractor");
  const auto V = StrictMorseLyapunov::from_filtration(s.field, s.filt, fixture::lyap_params());
  const auto& a = V.alpha(2);
  std::mt19937_64 rng(21);
  const auto pts = sample_points(s.filt.basin(2) - s.filt.attractor(2), 40, rng);
  for (const Vec& x : pts) {
    for (double tau : {0.1, 0.5}) {
      const Vec y = flow_map(s.field, x, tau, 1e-3);
      CHECK(eval_phi(s.field, a, y, 100.0, 1e-3, 2.0) <= eval_phi(s.field, a, x, 100.0, 1e-3, 2.0) + 1e-6);
      const double px = eval_psi(s.field, a, x, 1.0, 100.0, 1e-3, 2.0);
      const double py = eval_psi(s.field, a, y, 1.0, 100.0, 1e-3, 2.0);
      CHECK(py <= std::exp(-tau) * px + 1e-6 * (1.0 + px));
    }
  }
}

TEST_CASE("psi decays at rate lambda over one step") {
  const Sink s;
  const auto& a = s.V.alpha(1);
  std::mt19937_64 rng(4);
  const auto pts = sample_points(CubicalSet::full(s.grid) - collar(s.K, 1), 50, rng);
  const double hp = 1e-3;
  for (double lambda : {1.0, 3.0}) {
    for (const Vec& x : pts) {
      const double px = eval_psi(s.field, a, x, lambda, 10.0, 1e-3);
      const double py = eval_psi(s.field, a, rk4_step(s.field, x, hp), lambda, 10.0, 1e-3);
      CHECK((py - px) / hp <= -lambda * px + 1e-6 * (1.0 + px));
    }
  }
}

TEST_CASE("attractor function values") {
  const auto& s = fixture::builtin("circle-attractor");
  const auto V = StrictMorseLyapunov::from_filtration(s.field, s.filt, fixture::lyap_params());
  REQUIRE(V.size() == 2);
  const auto origin = V.evaluate(Vec{0.0, 0.0});
  CHECK(origin.V == 0.0);
  CHECK(origin.parts[0].in_basin);
  const auto far = V.evaluate(Vec{1.7, 1.6});
  CHECK(far.parts[0].V == 1.0);
  CHECK_FALSE(far.parts[0].in_basin);
  CHECK(far.parts[1].in_basin);
  CHECK(far.parts[1].V > 0.0);
  CHECK(far.parts[1].V < 1.0);
  CHECK(far.V == doctest::Approx(far.parts[0].V + far.parts[1].V));
  for (const auto& part : far.parts)
    if (part.in_basin) CHECK(radially_unbounded_L(part.V) == doctest::Approx(part.phi + part.psi).epsilon(1e-9));

  // Nonincreasing along trajectories.
  std::mt19937_64 rng(8);
  const auto pts = sample_points(CubicalSet::full(s.grid), 60, rng);
  for (const Vec& x : pts) {
    const double v0 = V.value(x);
    for (double t : {0.25, 0.5, 1.0}) CHECK(V.value(flow_map(s.field, x, t, 1e-3)) <= v0 + 1e-9);
  }
}

TEST_CASE("radially unbounded transform") {
  CHECK(radially_unbounded_L(0.0) == 0.0);
  CHECK(radially_unbounded_L(1.0 - std::exp(-2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(radially_unbounded_L(1.0 - 1e-9) > 20.0);
  CHECK_THROWS_AS(radially_unbounded_L(1.0), PreconditionError);
  CHECK_THROWS_AS(radially_unbounded_L(1.5), PreconditionError);
}

TEST_CASE("strict Morse-Lyapunov values on Morse sets") {
  for (const char* name : {"circle-attractor", "double-well"}) {
    const auto& s = fixture::builtin(name);
    const auto V = StrictMorseLyapunov::from_filtration(s.field, s.filt, fixture::lyap_params());
    const auto ranges = morse_values(V, s);
    for (std::size_t k = 0; k < ranges.size(); ++k) {
      CHECK(std::abs(ranges[k].lo - static_cast<double>(k)) <= 0.05);
      CHECK(std::abs(ranges[k].hi - static_cast<double>(k)) <= 0.05);
      if (k > 0) CHECK(ranges[k - 1].hi < ranges[k].lo);
    }
  }
}

TEST_CASE("Dini certificate") {
  const auto& s = fixture::builtin("circle-attractor");
  const auto V = StrictMorseLyapunov::from_filtration(s.field, s.filt, fixture::lyap_params());
  CubicalSet region = dini_region(s.graph, s.filt, 2);
  CubicalSet annulus(s.grid);
  for (BoxId b : region.boxes()) {
    const double r = s.grid.box_center(b).norm();
    if (r > 0.2 && r < 0.9) annulus.insert(b);
  }
  REQUIRE_FALSE(annulus.empty());
  std::mt19937_64 rng(12);
  const auto rep = dini_certificate(V, sample_points(annulus, 200, rng), 1e-3);
  MESSAGE("worst margin " << rep.worst_margin);
  CHECK(rep.passed());
  CHECK(rep.worst_margin >= 0.0);

  // The zero field never reaches K, so no sample can certify decay.
  const auto g = fixture::square_grid(16);
  LyapunovParams p = fixture::lyap_params();
  p.t_max = 1.0;
  const auto Z = StrictMorseLyapunov::single(VectorField::builtin("zero-field"), block(g, 7, 8),
                                             CubicalSet::full(g), p);
  const auto zrep = dini_certificate(Z, sample_points(CubicalSet::full(g) - collar(block(g, 7, 8), 1), 20, rng), 1e-3);
  CHECK(zrep.violations == 20);
  CHECK_FALSE(zrep.passed());
  CHECK_FALSE(zrep.offending.empty());
}

TEST_CASE("exit time matches the radial decay of the linear sink") {
  const Sink s;
  const double a = 0.5, b = 1.0;
  for (double theta : {0.0, 0.4, 1.1, 2.5, 4.0}) {
    const Vec dir{std::cos(theta), std::sin(theta)};
    const double r0 = 1.4;
    const Vec x = r0 * dir;
    // Radius where V along the ray equals a, by bisection.
    double lo = 0.0, hi = r0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (s.V.value(mid * dir) > a ? hi : lo) = mid;
    }
    const double expected = std::log(r0 / hi);
    const ExitTime t = exit_time(s.V, x, a, b, s.critical);
    CHECK(std::abs(t.time(s.params.h) - expected) <= 1e-4);
    CHECK(t.remainder >= 0.0);
    CHECK(t.remainder <= s.params.h);
    const ExitTime t2 = exit_time(s.V, x, 0.3, b, s.critical);
    CHECK(t2.time(s.params.h) >= t.time(s.params.h));
  }
  const ExitTime inside = exit_time(s.V, Vec{0.3, 0.0}, a, b, s.critical);
  CHECK(inside.steps == 0);
  CHECK(inside.remainder == 0.0);
  CHECK_THROWS_AS(exit_time(s.V, Vec{1.0, 0.0}, 0.5, 0.5, s.critical), PreconditionError);
  CHECK_THROWS_AS(exit_time(s.V, Vec{1.0, 0.0}, 0.0, 0.9, s.critical), PreconditionError);
  CHECK_THROWS_AS(exit_time(s.V, Vec{1.9, 1.9}, 0.1, 0.2, s.critical), PreconditionError);
}

TEST_CASE("exit time varies continuously") {
  const Sink s;
  const double a = 0.5, b = 1.0, w = s.grid.min_box_width();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-1.6, 1.6), nudge(-w / 2, w / 2);
  double worst = 0.0;
  int pairs = 0;
  while (pairs < 100) {
    const Vec x{coord(rng), coord(rng)};
    const Vec y{x[0] + nudge(rng), x[1] + nudge(rng)};
    if (s.V.value(x) <= a + 0.05 || s.V.value(y) <= a + 0.05) continue;
    ++pairs;
    const double tx = exit_time(s.V, x, a, b, s.critical).time(s.params.h);
    const double ty = exit_time(s.V, y, a, b, s.critical).time(s.params.h);
    worst = std::max(worst, std::abs(tx - ty) / distance(x, y));
  }
  MESSAGE("largest difference quotient " << worst);
  CHECK(std::isfinite(worst));
  CHECK(worst <= 20.0);
}

TEST_CASE("retraction onto a sublevel set") {
  const Sink s;
  const double a = 0.5, b = 1.0, tol = 1e-6 * (b - a);
  std::mt19937_64 rng(23);
  const auto pts = sample_points(CubicalSet::full(s.grid), 100, rng);
  for (const Vec& x : pts) {
    CHECK(retract(s.V, 0.0, x, a, b, s.critical) == x);
    const Vec y = retract(s.V, 1.0, x, a, b, s.critical);
    if (s.V.value(x) <= a) {
      CHECK(y == x);
      continue;
    }
    CHECK(std::abs(s.V.value(y) - a) <= tol);
    CHECK(distance(retract(s.V, 1.0, y, a, b, s.critical), y) <= 1e-4);
    const Vec mid = retract(s.V, 0.5, x, a, b, s.critical);
    CHECK(s.V.value(mid) <= s.V.value(x) + 1e-12);
    CHECK(s.V.value(mid) >= s.V.value(y) - tol);
  }
  CHECK_THROWS_AS(retract(s.V, 1.5, Vec{1.0, 0.0}, a, b, s.critical), PreconditionError);
}

TEST_CASE("limits at equilibria") {
  const Sink s;
  const double w = s.grid.min_box_width();
  const Vec lim = equilibrium_limit(s.V, s.K, Vec{1.2, -1.0}, 0.0, 1.0, s.critical);
  CHECK(BoxUnionDistance(s.K)(lim) <= 2 * w);

  const auto& c = fixture::builtin("circle-attractor");
  const auto V = StrictMorseLyapunov::from_filtration(c.field, c.filt, fixture::lyap_params());
  const auto crit = morse_values(V, c);
  const double cw = c.grid.min_box_width();
  const double v0 = V.value(Vec{0.4, 0.1});
  REQUIRE(v0 < crit[1].lo);
  const Vec o = equilibrium_limit(V, c.graph.morse_set(1), Vec{0.4, 0.1}, crit[0].lo, v0, crit);
  CHECK(BoxUnionDistance(c.graph.morse_set(1))(o) <= 2 * cw);
  CHECK_THROWS_AS(equilibrium_limit(V, c.graph.morse_set(2), Vec{0.4, 0.1}, crit[1].lo, 1.5, crit),
                  PreconditionError);
  CHECK_THROWS_AS(equilibrium_limit(V, c.graph.morse_set(1), Vec{0.4, 0.1}, crit[0].lo, 1.5, crit),
                  PreconditionError);

  const auto& d = fixture::builtin("double-well");
  const auto D = StrictMorseLyapunov::from_filtration(d.field, d.filt, fixture::lyap_params());
  const auto dcrit = morse_values(D, d);
  const Vec start{0.0, 1.5};
  const double top = D.value(start);
  REQUIRE(top < 3.0);
  const Vec sad = equilibrium_limit(D, d.graph.morse_set(3), start, dcrit[2].lo, top, dcrit);
  CHECK(sad.norm() <= 2 * d.grid.min_box_width());
}

TEST_CASE("tabulated field and CSV") {
  const Sink s;
  const auto t = tabulate(s.V, s.grid);
  CHECK(t.truncated == 0);
  CHECK(t.sublevel(0.0) == s.K);
  for (std::uint32_t b = 0; b < s.grid.box_count(); ++b) {
    CHECK(t.V[b] >= 0.0);
    CHECK(t.V[b] < 1.0);
    CHECK(t.v[b] >= 0.0);
  }
  std::ostringstream out;
  t.write_csv(out);
  const std::string csv = out.str();
  CHECK(csv.rfind("box_index,center_0,center_1,phi,psi,V,v\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 257);
}
