#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morsecube/vec.hpp"

namespace morsecube {

/// Flat index of a box in a CubicalGrid.
struct BoxId {
  std::uint32_t value = 0;
  friend auto operator<=>(const BoxId&, const BoxId&) = default;
};

/// Integer box coordinates, one entry per axis.
using BoxCoords = std::array<std::int64_t, kMaxDim>;

/// Uniform subdivision of the rectangle [lower, upper] into boxes.
///
/// Boxes are half-open [low, high) along every axis, except that the top face
/// of the domain belongs to the last box, so each point of the closed domain
/// lies in exactly one box. Flat indices run with axis 0 fastest.
class CubicalGrid {
 public:
  CubicalGrid() = default;

  /// Throws DegenerateDomainError if lower[i] >= upper[i] on some axis.
  CubicalGrid(const Vec& lower, const Vec& upper, std::span<const std::size_t> subdivisions);

  std::size_t dim() const noexcept { return lower_.size(); }
  const Vec& lower() const noexcept { return lower_; }
  const Vec& upper() const noexcept { return upper_; }
  std::size_t subdivisions(std::size_t axis) const noexcept { return subdivisions_[axis]; }
  std::vector<std::size_t> subdivisions() const;
  double box_width(std::size_t axis) const noexcept { return widths_[axis]; }
  double min_box_width() const noexcept;
  std::size_t box_count() const noexcept { return box_count_; }

  BoxId flat(const BoxCoords& coords) const noexcept;
  BoxCoords coords(BoxId id) const noexcept;
  bool in_range(const BoxCoords& coords) const noexcept;

  /// Box containing p, or nullopt if p is outside the closed domain.
  std::optional<BoxId> box_of_point(const Vec& p) const noexcept;
  bool contains_point(const Vec& p) const noexcept;

  Vec box_lower(BoxId id) const noexcept;
  Vec box_upper(BoxId id) const noexcept;
  Vec box_center(BoxId id) const noexcept;

  /// Euclidean distance from p to the closed box; 0 inside.
  double distance_to_box(const Vec& p, BoxId id) const noexcept;

  /// Distance from p to the complement of the domain (0 when outside).
  double distance_to_exterior(const Vec& p) const noexcept;

  friend bool operator==(const CubicalGrid& a, const CubicalGrid& b) noexcept;

  /// `lower <l..> upper <u..> subdivisions <n..>` with round-trip number formatting.
  std::string describe() const;

 private:
  Vec lower_;
  Vec upper_;
  std::array<std::size_t, kMaxDim> subdivisions_{};
  std::array<double, kMaxDim> widths_{};
  std::size_t box_count_ = 0;
};

CubicalGrid build_grid(const Vec& lower, const Vec& upper, std::span<const std::size_t> depth);

/// Inverse of CubicalGrid::describe; `line` is used for error messages.
CubicalGrid parse_grid(const std::string& text, std::size_t line);

/// A subset of the boxes of one grid.
class CubicalSet {
 public:
  CubicalSet() = default;
  explicit CubicalSet(const CubicalGrid& grid);
  static CubicalSet full(const CubicalGrid& grid);
  static CubicalSet from_boxes(const CubicalGrid& grid, const std::vector<BoxId>& boxes);

  const CubicalGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.box_count(); }

  bool contains(BoxId id) const noexcept {
    return (bits_[id.value >> 6] >> (id.value & 63)) & 1u;
  }
  void insert(BoxId id) noexcept { bits_[id.value >> 6] |= std::uint64_t{1} << (id.value & 63); }
  void erase(BoxId id) noexcept { bits_[id.value >> 6] &= ~(std::uint64_t{1} << (id.value & 63)); }

  std::size_t count() const noexcept;
  bool empty() const noexcept;
  std::vector<BoxId> boxes() const;
  std::optional<BoxId> first() const noexcept;

  bool subset_of(const CubicalSet& other) const;
  bool intersects(const CubicalSet& other) const;

  CubicalSet complement() const;
  friend CubicalSet operator|(const CubicalSet& a, const CubicalSet& b);
  friend CubicalSet operator&(const CubicalSet& a, const CubicalSet& b);
  friend CubicalSet operator-(const CubicalSet& a, const CubicalSet& b);
  friend bool operator==(const CubicalSet& a, const CubicalSet& b);

  /// Text form: a `grid:` line, then an `rle:` line of `<count>:<bit>` runs.
  void write(std::ostream& out) const;
  std::string to_text() const;
  static CubicalSet read(std::istream& in);
  static CubicalSet from_text(const std::string& text);

 private:
  void require_same_grid(const CubicalSet& other) const;
  void clear_padding() noexcept;

  CubicalGrid grid_;
  std::vector<std::uint64_t> bits_;
};

/// Adds `rings` layers of face-or-corner neighbors, clipped at the domain.
CubicalSet collar(const CubicalSet& s, std::size_t rings);

/// Face-adjacency components, ordered by their smallest box.
std::vector<CubicalSet> connected_components(const CubicalSet& s);

/// Boxes of s having a face-or-corner neighbor outside s (domain exterior excluded).
CubicalSet inner_boundary(const CubicalSet& s);

/// Round-trip decimal formatting for doubles.
std::string format_double(double x);
double parse_double(const std::string& token, std::size_t line);

}  // namespace morsecube
