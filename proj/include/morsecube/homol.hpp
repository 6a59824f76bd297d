#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "morsecube/cubgrid.hpp"
#include "morsecube/morsegraph.hpp"

namespace morsecube {

enum class Field { Z2, Q };

std::string field_name(Field f);
Field parse_field(const std::string& name);

struct BettiVector {
  std::vector<std::size_t> ranks;  // degree 0..m
  Field field = Field::Z2;

  std::size_t operator[](std::size_t q) const { return q < ranks.size() ? ranks[q] : 0; }
  long long euler() const;
  friend bool operator==(const BettiVector& a, const BettiVector& b) {
    return a.ranks == b.ranks && a.field == b.field;
  }
};

std::string to_string(const BettiVector& b);

/// Elementary cubical cells of a grid in doubled coordinates: coordinate 2i is the vertex
/// hyperplane i, coordinate 2i+1 the open interval of box i. The dimension of a cell is its
/// number of odd coordinates.
class CellSpace {
 public:
  explicit CellSpace(const CubicalGrid& grid);

  const CubicalGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return total_; }
  std::size_t dim(std::size_t cell) const;
  BoxCoords coords(std::size_t cell) const;
  std::size_t index(const BoxCoords& c) const;
  std::size_t cell_of_box(BoxId b) const;

  /// Facets with cubical signs (-1)^(j) * (+1 upper, -1 lower), j = number of interval axes before.
  void boundary(std::size_t cell, std::vector<std::pair<std::size_t, int>>& out) const;

  using Mask = std::vector<char>;
  /// All faces of all boxes of s.
  Mask closure(const CubicalSet& s) const;
  /// Cells of closure(s) lying on the topological boundary of |s| (domain exterior counts as outside).
  Mask frontier(const CubicalSet& s) const;

 private:
  CubicalGrid grid_;
  std::array<std::size_t, kMaxDim> extent_{};
  std::size_t total_ = 0;
};

/// Relative chain complex of a pair of cell masks, optionally with collapsed subcomplexes.
///
/// Cells of x not in a form the chains. For each collapse group (a cell mask), cells of
/// dimension >= 1 inside the group are dropped and its vertices become one new vertex. Every
/// group must lie inside a or be disjoint from it.
struct ChainComplex {
  std::vector<std::vector<std::size_t>> cells;  // per degree, cell ids; collapsed vertices use ids >= space size
  /// boundary[q][j]: facets of cells[q][j] as (row index into cells[q-1], coefficient).
  std::vector<std::vector<std::vector<std::pair<std::size_t, int>>>> boundary;
};

ChainComplex build_complex(const CellSpace& space, const CellSpace::Mask& x, const CellSpace::Mask& a,
                           const std::vector<CellSpace::Mask>& collapse = {});

/// Rank of each boundary map over the field; rank[q] is rank of d_q : C_q -> C_{q-1}.
std::vector<std::size_t> boundary_ranks(const ChainComplex& c, Field field);

/// Asserts d_{q-1} d_q = 0 over the field; throws ConsistencyError otherwise.
void check_boundary_squared(const ChainComplex& c, Field field);

BettiVector betti_of_complex(const ChainComplex& c, Field field, std::size_t top_degree);

/// Ranks of H_*(X, A). Throws PreconditionError unless A is within X.
BettiVector betti(const CubicalSet& X, const CubicalSet& A, Field field = Field::Z2);
/// Same with collapse groups (each a box set; its closure is collapsed to a point).
BettiVector betti_collapsed(const CubicalSet& X, const CubicalSet& A, const std::vector<CubicalSet>& groups,
                            Field field = Field::Z2);
/// Pair given directly as cell masks.
BettiVector betti_cells(const CellSpace& space, const CellSpace::Mask& x, const CellSpace::Mask& a,
                        Field field = Field::Z2);

/// Alternating sum of betti, cross-checked against the alternating count of relative cells.
long long euler(const CubicalSet& X, const CubicalSet& A, Field field = Field::Z2);
long long cell_euler(const ChainComplex& c);

/// Phi_q = R_q - R_{q-1} + ... +- R_0.
long long phi_q(const BettiVector& b, std::size_t q);

struct CriticalGroupEntry {
  BettiVector ordinary;   // H(W_k, W_{k-1})
  BettiVector quotient;   // same pair with every Morse set collapsed to a point
};

struct CriticalGroupTable {
  std::vector<CriticalGroupEntry> entries;  // k = 1..l
  Field field = Field::Z2;
};

/// Which admissible neighborhoods to use.
enum class Neighborhoods { trimmed, shrunk };

/// H(W_k, W_{k-1}); checks forward invariance and nesting.
BettiVector critical_groups(const MorseFiltration& filt, const OuterMap& f, std::size_t k,
                            Field field = Field::Z2, Neighborhoods which = Neighborhoods::trimmed);
/// H(W_k, W_{k-1}) with every Morse set collapsed; needs collar(M_k, 1) disjoint from W_{k-1}.
BettiVector quotient_critical_groups(const MorseFiltration& filt, const OuterMap& f, std::size_t k,
                                     Field field = Field::Z2, Neighborhoods which = Neighborhoods::trimmed);
CriticalGroupTable critical_group_table(const MorseFiltration& filt, const OuterMap& f,
                                        Field field = Field::Z2,
                                        Neighborhoods which = Neighborhoods::trimmed);

/// Critical groups from sublevel covers: C(M_k) = H(V_{b_k}, V_{a_k}) with the thresholds halfway
/// between consecutive critical values.
std::vector<BettiVector> sublevel_critical_groups(const std::vector<CubicalSet>& sublevels, Field field);

/// H(V_c, V_c \ M_k) for a Morse set that is one equilibrium; V_c is the cover sublevel set at c.
BettiVector equilibrium_critical_groups(const CubicalSet& sublevel_c, const CubicalSet& morse_set,
                                        Field field = Field::Z2);

std::vector<long long> morse_numbers(const std::vector<BettiVector>& groups, std::size_t top_degree);
BettiVector basin_betti(const MorseFiltration& filt, Field field = Field::Z2);
/// H(W_l) with every Morse set collapsed.
BettiVector quotient_basin_betti(const MorseFiltration& filt, Field field = Field::Z2);

struct MorseReport {
  std::vector<long long> m;
  std::vector<long long> beta;
  std::vector<long long> lhs;    // m_q - m_{q-1} + ... +- m_0
  std::vector<long long> rhs;    // same for beta
  std::vector<bool> inequality;  // lhs >= rhs
  long long morse_sum = 0;       // sum (-1)^q m_q
  long long euler = 0;           // sum (-1)^q beta_q
  bool equation = false;
  std::vector<long long> gamma;  // sum_{j<=q} (-1)^(q-j) (m_j - beta_j)
  std::vector<bool> gamma_nonnegative;
  bool gamma_top_zero = false;
  bool all_pass() const;
};

MorseReport verify_inequalities(const std::vector<long long>& m, const std::vector<long long>& beta);

}  // namespace morsecube
