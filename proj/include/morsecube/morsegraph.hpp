#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "morsecube/combdyn.hpp"
#include "morsecube/cubgrid.hpp"

namespace morsecube {

/// Recurrent components M_1..M_l of an outer map with their reachability order.
///
/// If M_j reaches M_i for i != j then j > i.
struct MorseGraph {
  std::vector<CubicalSet> components;
  CubicalSet transient;
  /// reaches[j][i]: some path leads from M_j into M_i (i != j).
  std::vector<std::vector<bool>> reaches;
  /// (j, i) pairs, 0-based: the Hasse diagram of `reaches`.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  /// Per box: index of its recurrent component, or -1.
  std::vector<int> component_of;
  /// Per box: largest component index reachable from it, or -1 when none.
  std::vector<int> max_reachable;
  /// Per box: some path reaches a box whose image leaves the domain.
  std::vector<char> reaches_exit;

  std::size_t size() const noexcept { return components.size(); }
  /// 1-based access matching M_1..M_l.
  const CubicalSet& morse_set(std::size_t k) const { return components.at(k - 1); }
  CubicalSet recurrent_union() const;
};

/// Strongly connected components with an internal edge, ordered so that sinks come first.
MorseGraph condense(const OuterMap& f);

/// Smallest forward-invariant superset of seed. Throws if it meets a flagged box.
CubicalSet combinatorial_attractor(const OuterMap& f, const CubicalSet& seed);

/// Largest forward-invariant subset of s.
CubicalSet invariant_part(const OuterMap& f, const CubicalSet& s);

/// Attractor chain with basins, dual repellers and forward-invariant neighborhoods.
/// All accessors are 1-based in k; index 0 gives the empty set (A*_0 = A_l).
class MorseFiltration {
 public:
  std::size_t size() const noexcept { return attractors_.size(); }
  const CubicalGrid& grid() const noexcept { return empty_.grid(); }

  const CubicalSet& attractor(std::size_t k) const { return k == 0 ? empty_ : attractors_.at(k - 1); }
  const CubicalSet& basin(std::size_t k) const { return k == 0 ? empty_ : basins_.at(k - 1); }
  /// Largest forward-invariant part of the 1-ring-trimmed basin.
  /// Throws PreconditionError when it does not contain A_k.
  const CubicalSet& neighborhood(std::size_t k) const;
  bool has_neighborhood(std::size_t k) const { return k == 0 || neighborhood_valid_.at(k - 1); }
  /// The 1-ring forward-invariant shrink of the neighborhood, a second admissible choice.
  /// Throws PreconditionError when the shrink no longer contains A_k.
  const CubicalSet& shrunk_neighborhood(std::size_t k) const;
  const CubicalSet& morse_set(std::size_t k) const { return morse_sets_.at(k - 1); }

  friend MorseFiltration filtration(const MorseGraph& g, const OuterMap& f);

 private:
  CubicalSet empty_;
  std::vector<CubicalSet> morse_sets_;
  std::vector<CubicalSet> attractors_;
  std::vector<CubicalSet> basins_;
  std::vector<CubicalSet> neighborhoods_;
  std::vector<CubicalSet> shrunk_;
  std::vector<char> neighborhood_valid_;
  std::vector<char> shrunk_valid_;
};

MorseFiltration filtration(const MorseGraph& g, const OuterMap& f);

/// A*_k = A_l minus the basin of A_k; A*_0 = A_l and A*_l is empty.
CubicalSet dual_repeller(const MorseFiltration& filt, std::size_t k);

/// DOT digraph with nodes `M<k> (<n> boxes)` and the Hasse edges of the reachability order.
std::string to_dot(const MorseGraph& g);

}  // namespace morsecube
