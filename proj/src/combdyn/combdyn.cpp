#include "morsecube/combdyn.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "morsecube/errors.hpp"

namespace morsecube {

OuterMap::OuterMap(const CubicalGrid& grid, const OuterMapParams& params)
    : params_(params), domain_(grid), images_(grid.box_count()), flags_(grid.box_count(), 0) {}

CubicalSet OuterMap::flagged() const {
  CubicalSet s(grid());
  for (std::size_t i = 0; i < flags_.size(); ++i)
    if (flags_[i]) s.insert(BoxId{static_cast<std::uint32_t>(i)});
  return s;
}

CubicalSet OuterMap::image_of(const CubicalSet& s) const {
  CubicalSet out(grid());
  for (BoxId b : s.boxes())
    for (BoxId t : images_[b.value]) out.insert(t);
  return out;
}

bool OuterMap::forward_invariant(const CubicalSet& s) const {
  for (BoxId b : s.boxes()) {
    if (flags_[b.value]) return false;
    for (BoxId t : images_[b.value])
      if (!s.contains(t)) return false;
  }
  return true;
}

void OuterMap::set(BoxId b, std::vector<BoxId> image, bool exits) {
  std::sort(image.begin(), image.end());
  image.erase(std::unique(image.begin(), image.end()), image.end());
  domain_.insert(b);
  images_[b.value] = std::move(image);
  flags_[b.value] = exits ? 1 : 0;
}

bool operator==(const OuterMap& a, const OuterMap& b) {
  return a.params_.tau == b.params_.tau && a.params_.samples_per_axis == b.params_.samples_per_axis &&
         a.params_.bloat_rings == b.params_.bloat_rings && a.params_.h == b.params_.h &&
         a.domain_ == b.domain_ && a.images_ == b.images_ && a.flags_ == b.flags_;
}

namespace {

// Boxes within Chebyshev distance r of some box in `hit`, clipped to the grid.
std::vector<BoxId> dilate(const CubicalGrid& g, const std::vector<BoxId>& hit, std::size_t r) {
  if (r == 0) return hit;
  const std::size_t m = g.dim();
  const auto ri = static_cast<std::int64_t>(r);
  std::vector<BoxId> out;
  for (BoxId b : hit) {
    const BoxCoords c = g.coords(b);
    BoxCoords lo{}, hi{};
    for (std::size_t i = 0; i < m; ++i) {
      lo[i] = std::max<std::int64_t>(0, c[i] - ri);
      hi[i] = std::min<std::int64_t>(static_cast<std::int64_t>(g.subdivisions(i)) - 1, c[i] + ri);
    }
    BoxCoords cur = lo;
    while (true) {
      out.push_back(g.flat(cur));
      std::size_t i = 0;
      for (; i < m; ++i) {
        if (cur[i] < hi[i]) {
          ++cur[i];
          break;
        }
        cur[i] = lo[i];
      }
      if (i == m) break;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

OuterMap build_outer_map(const CubicalGrid& grid, const VectorField& field, const OuterMapParams& params) {
  if (!(params.tau > 0.0)) throw Error("tau must be positive");
  if (params.samples_per_axis < 2) throw Error("samples_per_axis must be at least 2");
  if (field.dim() != grid.dim()) throw Error("field dimension does not match the grid");
  const std::size_t m = grid.dim();
  const std::size_t step = params.samples_per_axis - 1;

  // Neighboring boxes share their face samples, so the flow is evaluated once per lattice point.
  std::array<std::size_t, kMaxDim> npts{};
  std::size_t total = 1;
  for (std::size_t i = 0; i < m; ++i) {
    npts[i] = grid.subdivisions(i) * step + 1;
    total *= npts[i];
  }
  std::vector<Vec> image_point(total);
  std::vector<std::size_t> idx(m, 0);
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t t = p;
    Vec x(m);
    for (std::size_t i = 0; i < m; ++i) {
      idx[i] = t % npts[i];
      t /= npts[i];
      // Same expression as the box faces, so lattice points on a face lie exactly on it.
      const auto box = static_cast<double>(idx[i] / step);
      const auto frac = static_cast<double>(idx[i] % step) / static_cast<double>(step);
      x[i] = idx[i] + 1 == npts[i] ? grid.upper()[i]
             : frac == 0.0       ? grid.lower()[i] + box * grid.box_width(i)
                                 : grid.lower()[i] + (box + frac) * grid.box_width(i);
    }
    try {
      image_point[p] = flow_map(field, x, params.tau, params.h);
    } catch (const IntegrationBlowupError& e) {
      BoxCoords c{};
      for (std::size_t i = 0; i < m; ++i)
        c[i] = static_cast<std::int64_t>(std::min(idx[i] / step, grid.subdivisions(i) - 1));
      throw IntegrationBlowupError(e.step(), "integration blew up in box " +
                                                 std::to_string(grid.flat(c).value) + ": " + e.what());
    }
  }

  OuterMap f(grid, params);
  std::vector<BoxId> hit;
  for (std::uint32_t b = 0; b < grid.box_count(); ++b) {
    const BoxCoords c = grid.coords(BoxId{b});
    const Vec lo = grid.box_lower(BoxId{b}), hi = grid.box_upper(BoxId{b});
    hit.clear();
    bool exits = false;
    std::array<std::size_t, kMaxDim> off{};
    while (true) {
      std::size_t p = 0;
      for (std::size_t i = m; i-- > 0;)
        p = p * npts[i] + static_cast<std::size_t>(c[i]) * step + off[i];
      // An image on the closed source box counts as the source box, so face points of a
      // stationary lattice do not spill into neighbors.
      const Vec& y = image_point[p];
      bool own = true;
      for (std::size_t i = 0; i < m; ++i) own = own && lo[i] <= y[i] && y[i] <= hi[i];
      if (own) {
        hit.push_back(BoxId{b});
      } else if (auto t = grid.box_of_point(y)) {
        hit.push_back(*t);
      } else {
        exits = true;
      }
      std::size_t i = 0;
      for (; i < m; ++i) {
        if (off[i] < step) {
          ++off[i];
          break;
        }
        off[i] = 0;
      }
      if (i == m) break;
    }
    std::sort(hit.begin(), hit.end());
    hit.erase(std::unique(hit.begin(), hit.end()), hit.end());
    f.set(BoxId{b}, dilate(grid, hit, params.bloat_rings), exits);
  }
  return f;
}

OuterMap restrict(const OuterMap& f, const CubicalSet& s) {
  if (!(f.grid() == s.grid())) throw Error("restriction set lives on a different grid");
  OuterMap r(f.grid(), f.params());
  for (BoxId b : (f.domain() & s).boxes()) {
    std::vector<BoxId> img;
    bool exits = f.exits(b);
    for (BoxId t : f.image(b)) {
      if (s.contains(t)) img.push_back(t);
      else exits = true;
    }
    r.set(b, std::move(img), exits);
  }
  return r;
}

void write_map(const OuterMap& f, std::ostream& out) {
  const auto& p = f.params();
  out << "outer-map " << f.grid().describe() << " tau " << format_double(p.tau) << " samples "
      << p.samples_per_axis << " bloat " << p.bloat_rings << " h " << format_double(p.h)
      << " boxes " << f.domain().count() << '\n';
  for (BoxId b : f.domain().boxes()) {
    out << b.value << ':';
    for (BoxId t : f.image(b)) out << ' ' << t.value;
    if (f.exits(b)) out << " out";
    out << '\n';
  }
}

namespace {

std::size_t parse_index(const std::string& tok, std::size_t line) {
  unsigned long long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(line, "expected a box index, got '" + tok + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

OuterMap read_map(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty map file");
  if (line.rfind("outer-map ", 0) != 0) throw ParseError(1, "expected 'outer-map' header");
  const auto tau_pos = line.find(" tau ");
  if (tau_pos == std::string::npos) throw ParseError(1, "header lacks tau");
  const CubicalGrid grid = parse_grid(line.substr(10, tau_pos - 10), 1);
  std::istringstream hs(line.substr(tau_pos));
  OuterMapParams p;
  std::string key, val;
  int seen = 0;
  std::size_t expected = 0;
  while (hs >> key) {
    if (!(hs >> val)) throw ParseError(1, "header key '" + key + "' lacks a value");
    if (key == "tau") p.tau = parse_double(val, 1);
    else if (key == "samples") p.samples_per_axis = parse_index(val, 1);
    else if (key == "bloat") p.bloat_rings = parse_index(val, 1);
    else if (key == "h") p.h = parse_double(val, 1);
    else if (key == "boxes") expected = parse_index(val, 1);
    else throw ParseError(1, "unknown header key '" + key + "'");
    ++seen;
  }
  if (seen != 5) throw ParseError(1, "header needs tau, samples, bloat, h and boxes");

  OuterMap f(grid, p);
  std::size_t lineno = 1;
  long last = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError(lineno, "expected '<src>: <images>'");
    const std::size_t src = parse_index(line.substr(0, colon), lineno);
    if (src >= grid.box_count()) throw ParseError(lineno, "source box out of range");
    if (static_cast<long>(src) <= last) throw ParseError(lineno, "source boxes must be increasing");
    last = static_cast<long>(src);
    std::istringstream ls(line.substr(colon + 1));
    std::vector<BoxId> img;
    bool exits = false;
    std::string tok;
    while (ls >> tok) {
      if (exits) throw ParseError(lineno, "'out' must be the last token");
      if (tok == "out") {
        exits = true;
        continue;
      }
      const std::size_t t = parse_index(tok, lineno);
      if (t >= grid.box_count()) throw ParseError(lineno, "image box out of range");
      if (!img.empty() && t <= img.back().value) throw ParseError(lineno, "images must be increasing");
      img.push_back(BoxId{static_cast<std::uint32_t>(t)});
    }
    f.set(BoxId{static_cast<std::uint32_t>(src)}, std::move(img), exits);
  }
  if (!in.eof()) throw ParseError(lineno, "read error");
  if (f.domain().count() != expected)
    throw ParseError(lineno + 1, "file truncated: expected " + std::to_string(expected) +
                                     " box lines, found " + std::to_string(f.domain().count()));
  return f;
}

void save_map(const OuterMap& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write map file '" + path + "'");
  write_map(f, out);
  if (!out) throw Error("failed writing map file '" + path + "'");
}

OuterMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open map file '" + path + "'");
  return read_map(in);
}

}  // namespace morsecube
