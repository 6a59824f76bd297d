#include "morsecube/cubgrid.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "morsecube/errors.hpp"

namespace morsecube {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, std::size_t line) {
  double x = 0.0;
  const char* end = token.data() + token.size();
  auto res = std::from_chars(token.data(), end, x);
  if (res.ec != std::errc() || res.ptr != end)
    throw ParseError(line, "expected a number, got '" + token + "'");
  return x;
}

CubicalGrid::CubicalGrid(const Vec& lower, const Vec& upper,
                         std::span<const std::size_t> subdivisions)
    : lower_(lower), upper_(upper) {
  const std::size_t m = lower.size();
  if (m == 0 || m > kMaxDim)
    throw Error("grid dimension must be between 1 and " + std::to_string(kMaxDim));
  if (upper.size() != m || subdivisions.size() != m)
    throw Error("grid corner and subdivision dimensions disagree");
  box_count_ = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(lower[i] < upper[i]))
      throw DegenerateDomainError(i, "degenerate domain on axis " + std::to_string(i) +
                                         ": lower must be below upper");
    if (subdivisions[i] == 0)
      throw Error("subdivisions on axis " + std::to_string(i) + " must be positive");
    subdivisions_[i] = subdivisions[i];
    widths_[i] = (upper[i] - lower[i]) / static_cast<double>(subdivisions[i]);
    box_count_ *= subdivisions[i];
    if (box_count_ > std::numeric_limits<std::uint32_t>::max())
      throw Error("grid has too many boxes");
  }
}

CubicalGrid build_grid(const Vec& lower, const Vec& upper, std::span<const std::size_t> depth) {
  return CubicalGrid(lower, upper, depth);
}

std::vector<std::size_t> CubicalGrid::subdivisions() const {
  return {subdivisions_.begin(), subdivisions_.begin() + dim()};
}

double CubicalGrid::min_box_width() const noexcept {
  double w = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dim(); ++i) w = std::min(w, widths_[i]);
  return w;
}

BoxId CubicalGrid::flat(const BoxCoords& c) const noexcept {
  std::uint64_t idx = 0;
  for (std::size_t i = dim(); i-- > 0;) idx = idx * subdivisions_[i] + static_cast<std::uint64_t>(c[i]);
  return BoxId{static_cast<std::uint32_t>(idx)};
}

BoxCoords CubicalGrid::coords(BoxId id) const noexcept {
  BoxCoords c{};
  std::uint64_t idx = id.value;
  for (std::size_t i = 0; i < dim(); ++i) {
    c[i] = static_cast<std::int64_t>(idx % subdivisions_[i]);
    idx /= subdivisions_[i];
  }
  return c;
}

bool CubicalGrid::in_range(const BoxCoords& c) const noexcept {
  for (std::size_t i = 0; i < dim(); ++i)
    if (c[i] < 0 || c[i] >= static_cast<std::int64_t>(subdivisions_[i])) return false;
  return true;
}

bool CubicalGrid::contains_point(const Vec& p) const noexcept {
  if (p.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(p[i] >= lower_[i] && p[i] <= upper_[i])) return false;
  return true;
}

std::optional<BoxId> CubicalGrid::box_of_point(const Vec& p) const noexcept {
  if (!contains_point(p)) return std::nullopt;
  BoxCoords c{};
  for (std::size_t i = 0; i < dim(); ++i) {
    const auto n = static_cast<std::int64_t>(subdivisions_[i]);
    auto k = static_cast<std::int64_t>(std::floor((p[i] - lower_[i]) / widths_[i]));
    c[i] = std::clamp<std::int64_t>(k, 0, n - 1);
  }
  return flat(c);
}

Vec CubicalGrid::box_lower(BoxId id) const noexcept {
  const BoxCoords c = coords(id);
  Vec v(dim());
  for (std::size_t i = 0; i < dim(); ++i) v[i] = lower_[i] + static_cast<double>(c[i]) * widths_[i];
  return v;
}

Vec CubicalGrid::box_upper(BoxId id) const noexcept {
  const BoxCoords c = coords(id);
  Vec v(dim());
  for (std::size_t i = 0; i < dim(); ++i)
    v[i] = c[i] + 1 == static_cast<std::int64_t>(subdivisions_[i])
               ? upper_[i]
               : lower_[i] + static_cast<double>(c[i] + 1) * widths_[i];
  return v;
}

Vec CubicalGrid::box_center(BoxId id) const noexcept {
  const BoxCoords c = coords(id);
  Vec v(dim());
  for (std::size_t i = 0; i < dim(); ++i)
    v[i] = lower_[i] + (static_cast<double>(c[i]) + 0.5) * widths_[i];
  return v;
}

double CubicalGrid::distance_to_box(const Vec& p, BoxId id) const noexcept {
  const Vec lo = box_lower(id);
  const Vec hi = box_upper(id);
  double s = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    double d = 0.0;
    if (p[i] < lo[i]) d = lo[i] - p[i];
    else if (p[i] > hi[i]) d = p[i] - hi[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double CubicalGrid::distance_to_exterior(const Vec& p) const noexcept {
  if (!contains_point(p)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dim(); ++i) d = std::min({d, p[i] - lower_[i], upper_[i] - p[i]});
  return d;
}

bool operator==(const CubicalGrid& a, const CubicalGrid& b) noexcept {
  if (a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (a.subdivisions_[i] != b.subdivisions_[i]) return false;
  return a.lower_ == b.lower_ && a.upper_ == b.upper_;
}

std::string CubicalGrid::describe() const {
  std::string s = "lower";
  for (double x : lower_) s += ' ' + format_double(x);
  s += " upper";
  for (double x : upper_) s += ' ' + format_double(x);
  s += " subdivisions";
  for (std::size_t i = 0; i < dim(); ++i) s += ' ' + std::to_string(subdivisions_[i]);
  return s;
}

CubicalGrid parse_grid(const std::string& text, std::size_t line) {
  std::istringstream in(text);
  std::vector<std::string> lower, upper, subs;
  std::vector<std::string>* target = nullptr;
  std::string tok;
  while (in >> tok) {
    if (tok == "lower") target = &lower;
    else if (tok == "upper") target = &upper;
    else if (tok == "subdivisions") target = &subs;
    else if (target) target->push_back(tok);
    else throw ParseError(line, "unexpected token '" + tok + "' in grid description");
  }
  if (lower.empty() || lower.size() > kMaxDim || upper.size() != lower.size() ||
      subs.size() != lower.size())
    throw ParseError(line, "grid description needs matching lower, upper, subdivisions");
  Vec lo(lower.size()), hi(lower.size());
  std::vector<std::size_t> n(lower.size());
  for (std::size_t i = 0; i < lower.size(); ++i) {
    lo[i] = parse_double(lower[i], line);
    hi[i] = parse_double(upper[i], line);
    unsigned long long v = 0;
    auto res = std::from_chars(subs[i].data(), subs[i].data() + subs[i].size(), v);
    if (res.ec != std::errc() || res.ptr != subs[i].data() + subs[i].size())
      throw ParseError(line, "bad subdivision count '" + subs[i] + "'");
    n[i] = static_cast<std::size_t>(v);
  }
  try {
    return CubicalGrid(lo, hi, n);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
}

// ---------------------------------------------------------------------------

CubicalSet::CubicalSet(const CubicalGrid& grid)
    : grid_(grid), bits_((grid.box_count() + 63) / 64, 0) {}

CubicalSet CubicalSet::full(const CubicalGrid& grid) {
  CubicalSet s(grid);
  std::fill(s.bits_.begin(), s.bits_.end(), ~std::uint64_t{0});
  s.clear_padding();
  return s;
}

CubicalSet CubicalSet::from_boxes(const CubicalGrid& grid, const std::vector<BoxId>& boxes) {
  CubicalSet s(grid);
  for (BoxId b : boxes) {
    if (b.value >= grid.box_count()) throw Error("box index out of range");
    s.insert(b);
  }
  return s;
}

void CubicalSet::clear_padding() noexcept {
  const std::size_t rem = grid_.box_count() & 63;
  if (rem != 0 && !bits_.empty()) bits_.back() &= (std::uint64_t{1} << rem) - 1;
}

std::size_t CubicalSet::count() const noexcept {
  std::size_t n = 0;
  for (auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool CubicalSet::empty() const noexcept {
  return std::all_of(bits_.begin(), bits_.end(), [](std::uint64_t w) { return w == 0; });
}

std::vector<BoxId> CubicalSet::boxes() const {
  std::vector<BoxId> out;
  out.reserve(count());
  for (std::size_t w = 0; w < bits_.size(); ++w) {
    std::uint64_t word = bits_[w];
    while (word) {
      const int b = std::countr_zero(word);
      out.push_back(BoxId{static_cast<std::uint32_t>(w * 64 + static_cast<std::size_t>(b))});
      word &= word - 1;
    }
  }
  return out;
}

std::optional<BoxId> CubicalSet::first() const noexcept {
  for (std::size_t w = 0; w < bits_.size(); ++w)
    if (bits_[w])
      return BoxId{static_cast<std::uint32_t>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits_[w])))};
  return std::nullopt;
}

void CubicalSet::require_same_grid(const CubicalSet& other) const {
  if (!(grid_ == other.grid_)) throw Error("cubical sets live on different grids");
}

bool CubicalSet::subset_of(const CubicalSet& other) const {
  require_same_grid(other);
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] & ~other.bits_[i]) return false;
  return true;
}

bool CubicalSet::intersects(const CubicalSet& other) const {
  require_same_grid(other);
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] & other.bits_[i]) return true;
  return false;
}

CubicalSet CubicalSet::complement() const {
  CubicalSet r(*this);
  for (auto& w : r.bits_) w = ~w;
  r.clear_padding();
  return r;
}

CubicalSet operator|(const CubicalSet& a, const CubicalSet& b) {
  a.require_same_grid(b);
  CubicalSet r(a);
  for (std::size_t i = 0; i < r.bits_.size(); ++i) r.bits_[i] |= b.bits_[i];
  return r;
}

CubicalSet operator&(const CubicalSet& a, const CubicalSet& b) {
  a.require_same_grid(b);
  CubicalSet r(a);
  for (std::size_t i = 0; i < r.bits_.size(); ++i) r.bits_[i] &= b.bits_[i];
  return r;
}

CubicalSet operator-(const CubicalSet& a, const CubicalSet& b) {
  a.require_same_grid(b);
  CubicalSet r(a);
  for (std::size_t i = 0; i < r.bits_.size(); ++i) r.bits_[i] &= ~b.bits_[i];
  return r;
}

bool operator==(const CubicalSet& a, const CubicalSet& b) {
  return a.grid_ == b.grid_ && a.bits_ == b.bits_;
}

void CubicalSet::write(std::ostream& out) const {
  out << "grid: " << grid_.describe() << "\nrle:";
  const std::size_t n = size();
  std::size_t i = 0;
  while (i < n) {
    const bool bit = contains(BoxId{static_cast<std::uint32_t>(i)});
    std::size_t j = i + 1;
    while (j < n && contains(BoxId{static_cast<std::uint32_t>(j)}) == bit) ++j;
    out << ' ' << (j - i) << ':' << (bit ? 1 : 0);
    i = j;
  }
  out << '\n';
}

std::string CubicalSet::to_text() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

CubicalSet CubicalSet::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing grid line");
  if (line.rfind("grid:", 0) != 0) throw ParseError(1, "expected 'grid:'");
  CubicalSet s(parse_grid(line.substr(5), 1));
  if (!std::getline(in, line)) throw ParseError(2, "missing rle line");
  if (line.rfind("rle:", 0) != 0) throw ParseError(2, "expected 'rle:'");
  std::istringstream runs(line.substr(4));
  std::string tok;
  std::size_t pos = 0;
  while (runs >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos || colon + 2 != tok.size() ||
        (tok.back() != '0' && tok.back() != '1'))
      throw ParseError(2, "bad run '" + tok + "'");
    unsigned long long len = 0;
    auto res = std::from_chars(tok.data(), tok.data() + colon, len);
    if (res.ec != std::errc() || res.ptr != tok.data() + colon || len == 0)
      throw ParseError(2, "bad run length '" + tok + "'");
    if (pos + len > s.size()) throw ParseError(2, "runs exceed box count");
    if (tok.back() == '1')
      for (std::size_t k = pos; k < pos + len; ++k) s.insert(BoxId{static_cast<std::uint32_t>(k)});
    pos += len;
  }
  if (pos != s.size()) throw ParseError(2, "runs cover " + std::to_string(pos) + " of " +
                                                std::to_string(s.size()) + " boxes");
  return s;
}

CubicalSet CubicalSet::from_text(const std::string& text) {
  std::istringstream in(text);
  return read(in);
}

// ---------------------------------------------------------------------------

namespace {

template <class F>
void for_each_moore_neighbor(const CubicalGrid& g, BoxId b, F&& f) {
  const std::size_t m = g.dim();
  const BoxCoords c = g.coords(b);
  std::size_t total = 1;
  for (std::size_t i = 0; i < m; ++i) total *= 3;
  for (std::size_t code = 0; code < total; ++code) {
    BoxCoords n = c;
    std::size_t t = code;
    bool self = true;
    for (std::size_t i = 0; i < m; ++i) {
      const auto off = static_cast<std::int64_t>(t % 3) - 1;
      t /= 3;
      n[i] += off;
      if (off != 0) self = false;
    }
    if (!self && g.in_range(n)) f(g.flat(n));
  }
}

template <class F>
void for_each_face_neighbor(const CubicalGrid& g, BoxId b, F&& f) {
  const BoxCoords c = g.coords(b);
  for (std::size_t i = 0; i < g.dim(); ++i)
    for (std::int64_t off : {-1, 1}) {
      BoxCoords n = c;
      n[i] += off;
      if (g.in_range(n)) f(g.flat(n));
    }
}

}  // namespace

CubicalSet collar(const CubicalSet& s, std::size_t rings) {
  CubicalSet cur = s;
  for (std::size_t r = 0; r < rings; ++r) {
    CubicalSet next = cur;
    for (BoxId b : cur.boxes())
      for_each_moore_neighbor(cur.grid(), b, [&](BoxId n) { next.insert(n); });
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

CubicalSet inner_boundary(const CubicalSet& s) {
  CubicalSet out(s.grid());
  for (BoxId b : s.boxes()) {
    bool edge = false;
    for_each_moore_neighbor(s.grid(), b, [&](BoxId n) { edge = edge || !s.contains(n); });
    if (edge) out.insert(b);
  }
  return out;
}

std::vector<CubicalSet> connected_components(const CubicalSet& s) {
  std::vector<CubicalSet> out;
  CubicalSet seen(s.grid());
  std::deque<BoxId> queue;
  for (BoxId start : s.boxes()) {
    if (seen.contains(start)) continue;
    CubicalSet comp(s.grid());
    seen.insert(start);
    queue.push_back(start);
    while (!queue.empty()) {
      const BoxId b = queue.front();
      queue.pop_front();
      comp.insert(b);
      for_each_face_neighbor(s.grid(), b, [&](BoxId n) {
        if (s.contains(n) && !seen.contains(n)) {
          seen.insert(n);
          queue.push_back(n);
        }
      });
    }
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace morsecube
