#include "morsecube/lyap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "morsecube/errors.hpp"

namespace morsecube {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

double box_gap(const CubicalGrid& g, BoxId a, BoxId b) {
  const BoxCoords ca = g.coords(a);
  const BoxCoords cb = g.coords(b);
  double s = 0.0;
  for (std::size_t i = 0; i < g.dim(); ++i) {
    const auto d = std::max<std::int64_t>(0, std::abs(ca[i] - cb[i]) - 1);
    const double w = static_cast<double>(d) * g.box_width(i);
    s += w * w;
  }
  return std::sqrt(s);
}

}  // namespace

BoxUnionDistance::BoxUnionDistance(const CubicalSet& s) : set_(s) {
  const CubicalGrid& g = s.grid();
  CubicalSet edge = inner_boundary(s);
  for (BoxId b : s.boxes()) {
    const BoxCoords c = g.coords(b);
    for (std::size_t i = 0; i < g.dim(); ++i)
      if (c[i] == 0 || c[i] + 1 == static_cast<std::int64_t>(g.subdivisions(i))) edge.insert(b);
  }
  boundary_ = edge.boxes();
  offsets_.assign(g.box_count() + 1, 0);
  if (boundary_.empty()) return;
  double half_diag = 0.0;
  for (std::size_t i = 0; i < g.dim(); ++i) half_diag += 0.25 * g.box_width(i) * g.box_width(i);
  half_diag = std::sqrt(half_diag);
  for (std::uint32_t B = 0; B < g.box_count(); ++B) {
    offsets_[B] = static_cast<std::uint32_t>(candidates_.size());
    if (s.contains(BoxId{B})) continue;
    const Vec center = g.box_center(BoxId{B});
    double bound = kInf;
    for (BoxId b : boundary_) bound = std::min(bound, g.distance_to_box(center, b));
    bound += half_diag;
    for (BoxId b : boundary_)
      if (box_gap(g, BoxId{B}, b) <= bound * (1.0 + 1e-12)) candidates_.push_back(b);
  }
  offsets_[g.box_count()] = static_cast<std::uint32_t>(candidates_.size());
}

double BoxUnionDistance::operator()(const Vec& p) const {
  if (boundary_.empty()) return kInf;
  const CubicalGrid& g = set_.grid();
  const auto box = g.box_of_point(p);
  double d = kInf;
  if (!box) {
    for (BoxId b : boundary_) d = std::min(d, g.distance_to_box(p, b));
    return d;
  }
  if (set_.contains(*box)) return 0.0;
  for (std::uint32_t i = offsets_[box->value]; i < offsets_[box->value + 1]; ++i)
    d = std::min(d, g.distance_to_box(p, candidates_[i]));
  return d;
}

// ---------------------------------------------------------------------------

AlphaFunction make_alpha(const CubicalSet& K, const CubicalSet& omega, double scale) {
  if (K.empty()) throw PreconditionError("alpha needs a nonempty set K");
  if (!K.subset_of(omega)) throw PreconditionError("alpha needs K inside the basin cover");
  if (!(scale > 0.0)) throw PreconditionError("alpha scale must be positive");
  const CubicalGrid& g = K.grid();
  bool room = collar(K, 2).subset_of(omega);
  for (BoxId b : K.boxes()) {
    const BoxCoords c = g.coords(b);
    for (std::size_t i = 0; i < g.dim(); ++i)
      if (c[i] < 2 || c[i] + 3 > static_cast<std::int64_t>(g.subdivisions(i))) room = false;
  }
  if (!room)
    throw PreconditionError("gap between K and the basin boundary is under 2 boxes; use a deeper grid");
  AlphaFunction a;
  a.K_ = K;
  a.omega_ = omega;
  a.scale_ = scale;
  a.dK_ = BoxUnionDistance(K);
  a.dOut_ = BoxUnionDistance(omega.complement());
  return a;
}

double AlphaFunction::gap(const Vec& x) const {
  return std::min(dOut_(x), K_.grid().distance_to_exterior(x));
}

double AlphaFunction::operator()(const Vec& x) const {
  const double w = gap(x);
  if (w <= 0.0) return kInf;
  const double d = dK_(x);
  if (d == 0.0) return 0.0;
  return scale_ * d * (1.0 + 1.0 / std::max(w, kEps));
}

// ---------------------------------------------------------------------------

namespace {

struct Accum {
  const AlphaFunction* alpha;
  double phi = 0.0;
  double psi = 0.0;
  double prev = 0.0;  // exp(lambda t) alpha at the previous sample
  std::size_t zero_run = 0;  // consecutive samples inside K
  bool done = false;
  bool escaped = false;
};

// Follows x until every accumulator has stayed in its K (alpha = 0) for `settle` time units or
// left its basin.
void follow(const VectorField& field, const Vec& x0, double lambda, double t_max, double h, double settle,
            std::vector<Accum>& acc) {
  const std::size_t n_max = step_count(h, t_max);
  const auto hold = static_cast<std::size_t>(std::ceil(std::max(settle, 0.0) / h - 1e-9));
  Vec x = x0;
  std::size_t remaining = 0;
  for (auto& a : acc) {
    const double al = (*a.alpha)(x);
    if (std::isinf(al)) {
      a.escaped = a.done = true;
      continue;
    }
    a.phi = al;
    a.prev = al;
    a.zero_run = al == 0.0 ? 1 : 0;
    if (al == 0.0 && hold == 0) a.done = true;
    else ++remaining;
  }
  for (std::size_t i = 1; remaining > 0; ++i) {
    if (i > n_max)
      throw TruncationError("trajectory was not captured by the attractor cover within t_max = " +
                            format_double(t_max));
    x = rk4_step(field, x, h);
    if (!x.finite()) throw IntegrationBlowupError(i, "integration blew up at step " + std::to_string(i));
    const double grow = std::exp(lambda * static_cast<double>(i) * h);
    for (auto& a : acc) {
      if (a.done) continue;
      const double al = (*a.alpha)(x);
      if (std::isinf(al)) {
        a.escaped = a.done = true;
        --remaining;
        continue;
      }
      const double cur = grow * al;
      a.psi += 0.5 * h * (a.prev + cur);
      a.prev = cur;
      a.phi = std::max(a.phi, al);
      a.zero_run = al == 0.0 ? a.zero_run + 1 : 0;
      if (a.zero_run > hold) {
        a.done = true;
        --remaining;
      }
    }
  }
}

AttractorValues finish(const Accum& a, const Vec& x, double lambda) {
  AttractorValues out;
  if (a.escaped) {
    out.phi = out.psi = kInf;
    out.V = 1.0;
    out.v = 0.0;
    out.slack = 0.0;
    out.in_basin = !std::isinf((*a.alpha)(x));
    return out;
  }
  out.in_basin = true;
  out.phi = a.phi;
  out.psi = a.psi;
  const double L = a.phi + a.psi;
  out.slack = std::exp(-L);
  out.V = -std::expm1(-L);
  out.v = std::min({lambda * out.slack * a.psi, a.alpha->gap(x), 1.0});
  return out;
}

}  // namespace

StrictMorseLyapunov::StrictMorseLyapunov(VectorField field, std::vector<AlphaFunction> alphas,
                                         LyapunovParams params)
    : field_(std::move(field)), alphas_(std::move(alphas)), params_(params) {
  if (alphas_.empty()) throw PreconditionError("need at least one attractor function");
  if (!(params_.lambda > 0.0) || !(params_.h > 0.0) || !(params_.t_max >= params_.h))
    throw PreconditionError("lambda, h and t_max must be positive with t_max >= h");
  if (!(params_.settle >= 0.0)) throw PreconditionError("settle time must be nonnegative");
}

StrictMorseLyapunov StrictMorseLyapunov::from_filtration(const VectorField& field,
                                                         const MorseFiltration& filt,
                                                         const LyapunovParams& params) {
  std::vector<AlphaFunction> alphas;
  for (std::size_t k = 1; k <= filt.size(); ++k)
    alphas.push_back(make_alpha(filt.attractor(k), filt.basin(k), params.alpha_scale));
  return StrictMorseLyapunov(field, std::move(alphas), params);
}

StrictMorseLyapunov StrictMorseLyapunov::single(const VectorField& field, const CubicalSet& K,
                                                const CubicalSet& omega, const LyapunovParams& params) {
  return StrictMorseLyapunov(field, {make_alpha(K, omega, params.alpha_scale)}, params);
}

PointValues StrictMorseLyapunov::evaluate(const Vec& x) const {
  std::vector<Accum> acc;
  acc.reserve(alphas_.size());
  for (const auto& a : alphas_) acc.push_back(Accum{&a});
  follow(field_, x, params_.lambda, params_.t_max, params_.h, params_.settle, acc);
  PointValues pv;
  for (const auto& a : acc) {
    pv.parts.push_back(finish(a, x, params_.lambda));
    pv.V += pv.parts.back().V;
    pv.v += pv.parts.back().v;
  }
  return pv;
}

double eval_phi(const VectorField& field, const AlphaFunction& alpha, const Vec& x, double t_max, double h,
                double settle) {
  std::vector<Accum> acc{Accum{&alpha}};
  follow(field, x, 1.0, t_max, h, settle, acc);
  return acc[0].escaped ? kInf : acc[0].phi;
}

double eval_psi(const VectorField& field, const AlphaFunction& alpha, const Vec& x, double lambda,
                double t_max, double h, double settle) {
  if (!(lambda > 0.0)) throw PreconditionError("lambda must be positive");
  std::vector<Accum> acc{Accum{&alpha}};
  follow(field, x, lambda, t_max, h, settle, acc);
  return acc[0].escaped ? kInf : acc[0].psi;
}

double radially_unbounded_L(double V) {
  if (!(V < 1.0)) throw PreconditionError("outside basin: V >= 1");
  return -std::log1p(-V);
}

double value_difference(const PointValues& y, const PointValues& x) {
  double d = 0.0;
  for (std::size_t k = 0; k < x.parts.size(); ++k) {
    const auto& a = x.parts[k];
    const auto& b = y.parts[k];
    if (a.in_basin && b.in_basin && a.slack > 0.0 && b.slack > 0.0) d += a.slack - b.slack;
    else d += b.V - a.V;
  }
  return d;
}

DiniReport dini_certificate(const LyapunovFunction& V, const std::vector<Vec>& samples, double h_prime) {
  DiniReport rep;
  rep.worst_margin = kInf;
  for (const Vec& x : samples) {
    ++rep.samples;
    DiniViolation viol;
    viol.x = x;
    try {
      const PointValues px = V.evaluate(x);
      const Vec y = flow_map(V.field(), x, h_prime, V.params().h);
      const PointValues py = V.evaluate(y);
      viol.rate = value_difference(py, px) / h_prime;
      viol.v = px.v;
      const double margin = -viol.rate - 0.5 * px.v;
      rep.worst_margin = std::min(rep.worst_margin, margin);
      if (!(px.v > 0.0)) viol.reason = "v(x) is not positive";
      else if (margin < 0.0) viol.reason = "decay slower than v/2";
    } catch (const Error& e) {
      viol.reason = e.what();
      rep.worst_margin = -kInf;
    }
    if (!viol.reason.empty()) {
      ++rep.violations;
      if (rep.offending.size() < 20) rep.offending.push_back(viol);
    }
  }
  if (rep.samples == 0) rep.worst_margin = 0.0;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

void check_interval(double a, double b, const std::vector<CriticalRange>& critical) {
  if (!(a < b)) throw PreconditionError("sublevel bounds need a < b");
  for (std::size_t k = 0; k < critical.size(); ++k)
    if (critical[k].hi >= a && critical[k].lo <= b)
      throw PreconditionError("critical value of M_" + std::to_string(k + 1) + " lies in [" +
                              format_double(a) + ", " + format_double(b) + "]");
}

Vec advance(const VectorField& f, Vec x, std::size_t steps, double h) {
  for (std::size_t i = 0; i < steps; ++i) x = rk4_step(f, x, h);
  return x;
}

}  // namespace

ExitTime exit_time(const LyapunovFunction& V, const Vec& x, double a, double b,
                   const std::vector<CriticalRange>& critical) {
  check_interval(a, b, critical);
  const double v0 = V.value(x);
  if (v0 > b) throw PreconditionError("start point lies above the sublevel bound b");
  if (v0 <= a) return {};
  const auto& p = V.params();
  const std::size_t n_max = step_count(p.h, p.t_max);

  std::vector<Vec> samples{x};
  auto sample = [&](std::size_t i) -> const Vec& {
    while (samples.size() <= i) {
      samples.push_back(rk4_step(V.field(), samples.back(), p.h));
      if (!samples.back().finite())
        throw IntegrationBlowupError(samples.size() - 1, "integration blew up");
    }
    return samples[i];
  };

  // Gallop, then binary search for the first sample with V <= a.
  std::size_t lo = 0, hi = 1;
  while (V.value(sample(hi)) > a) {
    lo = hi;
    if (hi == n_max) throw TruncationError("sublevel set V_a not reached within t_max");
    hi = std::min(2 * hi, n_max);
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (V.value(sample(mid)) > a) lo = mid;
    else hi = mid;
  }

  // Bisection inside the step from sample lo.
  const Vec& base = sample(lo);
  const double tol = 1e-6 * (b - a);
  double s_lo = 0.0, s_hi = p.h;
  double best = p.h;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (s_lo + s_hi);
    const double g = V.value(rk4_step(V.field(), base, mid)) - a;
    if (g <= 0.0) {
      s_hi = mid;
      best = mid;
      if (g >= -tol) break;
    } else {
      s_lo = mid;
      if (g <= tol) {
        best = mid;
        break;
      }
    }
  }
  return ExitTime{lo, best};
}

Vec retract(const LyapunovFunction& V, double sigma, const Vec& x, double a, double b,
            const std::vector<CriticalRange>& critical) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw PreconditionError("sigma must lie in [0, 1]");
  const ExitTime t = exit_time(V, x, a, b, critical);
  if (sigma == 0.0 || (t.steps == 0 && t.remainder == 0.0)) return x;
  const double h = V.params().h;
  if (sigma == 1.0) return rk4_step(V.field(), advance(V.field(), x, t.steps, h), t.remainder);
  const double target = sigma * t.time(h);
  const auto whole = static_cast<std::size_t>(std::floor(target / h));
  return rk4_step(V.field(), advance(V.field(), x, whole, h), target - static_cast<double>(whole) * h);
}

Vec equilibrium_limit(const LyapunovFunction& V, const CubicalSet& component, const Vec& x, double c,
                      double b, const std::vector<CriticalRange>& critical) {
  const CubicalGrid& g = component.grid();
  if (component.empty() || connected_components(component).size() != 1)
    throw PreconditionError("equilibrium limit needs a single connected Morse set");
  Vec center(g.dim());
  for (BoxId box : component.boxes()) center += g.box_center(box);
  center *= 1.0 / static_cast<double>(component.count());
  const BoxUnionDistance near(component);
  if (!near.contains(center) || V.field()(center).norm() > g.min_box_width())
    throw PreconditionError("Morse set is not certified as an equilibrium");
  for (std::size_t k = 0; k < critical.size(); ++k)
    if (critical[k].lo > c + 1e-9 && critical[k].lo <= b)
      throw PreconditionError("another critical value lies in (c, b]");
  const auto& p = V.params();
  const double tol = 1e-9;
  if (V.value(x) > b) throw PreconditionError("start point lies above b");

  double width = 0.0;
  for (std::size_t i = 0; i < g.dim(); ++i) width = std::max(width, g.box_width(i));
  const std::size_t chunk = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 / p.h)));
  const std::size_t n_max = step_count(p.h, p.t_max);
  Vec cur = x;
  Vec last_unit = x;
  std::size_t steps = 0;
  Vec result = x;
  bool found = false;
  while (!found) {
    if (near(cur) <= 2.0 * width && V.value(cur) <= c + tol) {
      result = cur;
      found = true;
      break;
    }
    if (steps >= n_max) throw TruncationError("no convergence to the equilibrium within t_max");
    cur = advance(V.field(), cur, chunk, p.h);
    if (!cur.finite()) throw IntegrationBlowupError(steps, "integration blew up");
    steps += chunk;
    if (steps % (10 * chunk) == 0) {
      if (distance(cur, last_unit) < 1e-9) {
        result = cur;
        found = true;
      }
      last_unit = cur;
    }
  }
  if (!(near(result) <= 2.0 * width) && !(V.value(result) <= c + tol))
    throw ConsistencyError("limit point is neither near the equilibrium nor in V_c");
  return result;
}

// ---------------------------------------------------------------------------

LyapunovField tabulate(const StrictMorseLyapunov& V, const CubicalGrid& grid) {
  LyapunovField t;
  t.grid = grid;
  t.params = V.params();
  const std::size_t n = grid.box_count();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  t.phi.assign(n, nan);
  t.psi.assign(n, nan);
  t.V.assign(n, nan);
  t.v.assign(n, nan);
  t.V_k.assign(V.size(), std::vector<double>(n, nan));
  for (std::uint32_t b = 0; b < n; ++b) {
    try {
      const PointValues pv = V.evaluate(grid.box_center(BoxId{b}));
      t.phi[b] = pv.parts.back().phi;
      t.psi[b] = pv.parts.back().psi;
      t.V[b] = pv.V;
      t.v[b] = pv.v;
      for (std::size_t k = 0; k < pv.parts.size(); ++k) t.V_k[k][b] = pv.parts[k].V;
    } catch (const TruncationError&) {
      ++t.truncated;
    }
  }
  return t;
}

CubicalSet LyapunovField::sublevel(double a) const {
  CubicalSet s(grid);
  for (std::uint32_t b = 0; b < V.size(); ++b)
    if (V[b] <= a) s.insert(BoxId{b});
  return s;
}

std::vector<CriticalRange> LyapunovField::critical_ranges(const MorseFiltration& filt) const {
  std::vector<CriticalRange> out;
  for (std::size_t k = 1; k <= filt.size(); ++k) {
    CriticalRange r{kInf, -kInf};
    for (BoxId b : filt.morse_set(k).boxes()) {
      if (std::isnan(V[b.value])) continue;
      r.lo = std::min(r.lo, V[b.value]);
      r.hi = std::max(r.hi, V[b.value]);
    }
    out.push_back(r);
  }
  return out;
}

void LyapunovField::write_csv(std::ostream& out) const {
  out << "box_index";
  for (std::size_t i = 0; i < grid.dim(); ++i) out << ",center_" << i;
  out << ",phi,psi,V,v\n";
  auto num = [](double x) {
    if (std::isnan(x)) return std::string("nan");
    if (std::isinf(x)) return std::string(x > 0 ? "inf" : "-inf");
    return format_double(x);
  };
  for (std::uint32_t b = 0; b < grid.box_count(); ++b) {
    out << b;
    for (double c : grid.box_center(BoxId{b})) out << ',' << num(c);
    out << ',' << num(phi[b]) << ',' << num(psi[b]) << ',' << num(V[b]) << ',' << num(v[b]) << '\n';
  }
}

}  // namespace morsecube

namespace morsecube {

CubicalSet dini_region(const MorseGraph& g, const MorseFiltration& filt, std::size_t rings) {
  const CubicalGrid& grid = filt.grid();
  CubicalSet bad = collar(g.recurrent_union(), rings);
  for (std::size_t k = 1; k <= filt.size(); ++k) {
    const CubicalSet& in = filt.basin(k);
    const CubicalSet out = in.complement();
    if (in.empty() || out.empty()) continue;
    bad = bad | (collar(in, rings) & collar(out, rings));
  }
  CubicalSet ok(grid);
  for (std::uint32_t b = 0; b < grid.box_count(); ++b) {
    const BoxCoords c = grid.coords(BoxId{b});
    bool inner = true;
    for (std::size_t i = 0; i < grid.dim(); ++i) {
      const auto n = static_cast<std::int64_t>(grid.subdivisions(i));
      const auto r = static_cast<std::int64_t>(rings);
      if (c[i] < r || c[i] >= n - r) inner = false;
    }
    if (inner && !bad.contains(BoxId{b})) ok.insert(BoxId{b});
  }
  return ok;
}

std::vector<Vec> sample_points(const CubicalSet& s, std::size_t n, std::mt19937_64& rng) {
  const auto boxes = s.boxes();
  if (boxes.empty()) throw PreconditionError("cannot sample from an empty set");
  const CubicalGrid& grid = s.grid();
  std::uniform_int_distribution<std::size_t> pick(0, boxes.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const BoxId b = boxes[pick(rng)];
    const Vec lo = grid.box_lower(b), hi = grid.box_upper(b);
    Vec x(grid.dim());
    for (std::size_t i = 0; i < grid.dim(); ++i) x[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
    out.push_back(x);
  }
  return out;
}

}  // namespace morsecube
