#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "morsecube/cubgrid.hpp"
#include "morsecube/flowsim.hpp"

namespace morsecube {

struct OuterMapParams {
  double tau = 1.0;
  std::size_t samples_per_axis = 3;
  std::size_t bloat_rings = 1;
  double h = 1e-3;
};

/// Multivalued box map over-approximating the time-tau flow map at sample resolution.
class OuterMap {
 public:
  OuterMap() = default;
  OuterMap(const CubicalGrid& grid, const OuterMapParams& params);

  const CubicalGrid& grid() const noexcept { return domain_.grid(); }
  const OuterMapParams& params() const noexcept { return params_; }
  double tau() const noexcept { return params_.tau; }

  /// Boxes on which the map is defined.
  const CubicalSet& domain() const noexcept { return domain_; }
  /// Sorted, duplicate-free; empty off the domain.
  const std::vector<BoxId>& image(BoxId b) const { return images_[b.value]; }
  bool exits(BoxId b) const { return flags_[b.value] != 0; }
  CubicalSet flagged() const;

  /// Union of the images of the boxes in s.
  CubicalSet image_of(const CubicalSet& s) const;
  bool forward_invariant(const CubicalSet& s) const;

  void set(BoxId b, std::vector<BoxId> image, bool exits);

  friend bool operator==(const OuterMap& a, const OuterMap& b);

 private:
  OuterMapParams params_;
  CubicalSet domain_;
  std::vector<std::vector<BoxId>> images_;
  std::vector<char> flags_;
};

/// image(b) = collar(boxes hit by a samples_per_axis^m lattice of b, incl. corners, bloat_rings);
/// b is flagged when some sample image leaves the domain.
OuterMap build_outer_map(const CubicalGrid& grid, const VectorField& field, const OuterMapParams& params);

/// Domain and images intersected with s; images that left s raise the exit flag.
OuterMap restrict(const OuterMap& f, const CubicalSet& s);

/// Text format: a header line `outer-map <grid description> tau <t> samples <n> bloat <r> h <h> boxes <n>`,
/// then `<src>: <img> <img> ...` per domain box, with a trailing `out` token on flagged boxes.
void write_map(const OuterMap& f, std::ostream& out);
OuterMap read_map(std::istream& in);
void save_map(const OuterMap& f, const std::string& path);
OuterMap load_map(const std::string& path);

}  // namespace morsecube
