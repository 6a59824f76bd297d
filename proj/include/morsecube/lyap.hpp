#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "morsecube/cubgrid.hpp"
#include "morsecube/flowsim.hpp"
#include "morsecube/morsegraph.hpp"

namespace morsecube {

/// Exact Euclidean distance from a point to a union of closed grid boxes.
class BoxUnionDistance {
 public:
  BoxUnionDistance() = default;
  explicit BoxUnionDistance(const CubicalSet& s);

  /// +inf for an empty set.
  double operator()(const Vec& p) const;
  bool contains(const Vec& p) const { return (*this)(p) == 0.0; }

 private:
  CubicalSet set_;
  std::vector<BoxId> boundary_;
  // Per grid box, the boundary boxes that can be nearest to a point of that box.
  std::vector<std::uint32_t> offsets_;
  std::vector<BoxId> candidates_;
};

/// alpha(x) = scale * d(x,K) * (1 + 1/max(d(x, X\Omega), eps)), infinite off the Omega cover.
/// X\Omega is the closure of the grid boxes outside Omega together with the domain exterior.
class AlphaFunction {
 public:
  const CubicalSet& K() const noexcept { return K_; }
  const CubicalSet& omega() const noexcept { return omega_; }
  double scale() const noexcept { return scale_; }

  double distance_to_K(const Vec& x) const { return dK_(x); }
  /// d(x, X\Omega); 0 when x is outside the Omega cover.
  double gap(const Vec& x) const;
  bool in_omega(const Vec& x) const { return gap(x) > 0.0; }
  double operator()(const Vec& x) const;

  friend AlphaFunction make_alpha(const CubicalSet& K, const CubicalSet& omega, double scale);

 private:
  CubicalSet K_;
  CubicalSet omega_;
  double scale_ = 1.0;
  BoxUnionDistance dK_;
  BoxUnionDistance dOut_;
};

/// Requires K nonempty, K within Omega, and two boxes of room between K and X\Omega.
AlphaFunction make_alpha(const CubicalSet& K, const CubicalSet& omega, double scale = 1.0);

struct LyapunovParams {
  double lambda = 1.0;
  double t_max = 100.0;
  double h = 1e-3;
  double alpha_scale = 1.0;
  /// A trajectory counts as captured by K once it has stayed in K this long.
  double settle = 2.0;
};

/// Values of one attractor function at a point.
struct AttractorValues {
  double phi = 0.0;
  double psi = 0.0;
  double V = 0.0;
  double v = 0.0;
  bool in_basin = false;
  /// exp(-(phi + psi)), kept apart from V so that tiny changes near V = 1 stay resolvable.
  double slack = 1.0;
};

struct PointValues {
  double V = 0.0;
  double v = 0.0;
  std::vector<AttractorValues> parts;  // per k = 1..l
};

/// A Lyapunov-type function evaluated along trajectories of a field.
class LyapunovFunction {
 public:
  virtual ~LyapunovFunction() = default;
  virtual PointValues evaluate(const Vec& x) const = 0;
  double value(const Vec& x) const { return evaluate(x).V; }
  virtual const VectorField& field() const = 0;
  virtual const LyapunovParams& params() const = 0;
};

/// Strict Morse-Lyapunov function V = sum_k V_k with V_k = 1 - exp(-(phi_k + psi_k)) on the
/// basin cover of A_k and 1 outside. One trajectory serves all k; it is followed until it has
/// been captured by every A_k whose basin contains the start. A single attractor is the case l = 1.
class StrictMorseLyapunov : public LyapunovFunction {
 public:
  StrictMorseLyapunov(VectorField field, std::vector<AlphaFunction> alphas, LyapunovParams params);

  /// Builds alpha_k for (A_k, Omega(A_k)) from the filtration.
  static StrictMorseLyapunov from_filtration(const VectorField& field, const MorseFiltration& filt,
                                             const LyapunovParams& params);
  /// One attractor K with basin cover omega.
  static StrictMorseLyapunov single(const VectorField& field, const CubicalSet& K,
                                    const CubicalSet& omega, const LyapunovParams& params);

  /// Throws TruncationError when some required A_k does not capture the trajectory by t_max.
  PointValues evaluate(const Vec& x) const override;
  const VectorField& field() const override { return field_; }
  const LyapunovParams& params() const override { return params_; }
  std::size_t size() const noexcept { return alphas_.size(); }
  const AlphaFunction& alpha(std::size_t k) const { return alphas_.at(k - 1); }

 private:
  VectorField field_;
  std::vector<AlphaFunction> alphas_;
  LyapunovParams params_;
};

/// Sup of alpha over samples until the trajectory has stayed in K for `settle` time units.
double eval_phi(const VectorField& field, const AlphaFunction& alpha, const Vec& x, double t_max, double h,
                double settle = 0.0);
/// Composite trapezoid of exp(lambda t) alpha(S(t)x) over the same stretch.
double eval_psi(const VectorField& field, const AlphaFunction& alpha, const Vec& x, double lambda,
                double t_max, double h, double settle = 0.0);

/// L = -ln(1 - V); throws PreconditionError when V >= 1.
double radially_unbounded_L(double V);

struct DiniViolation {
  Vec x;
  double rate = 0.0;  // (V(S(h')x) - V(x)) / h'
  double v = 0.0;
  std::string reason;
};

struct DiniReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  /// min over samples of -rate - v/2; nonnegative when every sample passes.
  double worst_margin = 0.0;
  std::vector<DiniViolation> offending;
  bool passed() const noexcept { return violations == 0; }
};

/// V(y) - V(x) summed part by part, each part differenced through its slack when both points lie
/// in its basin.
double value_difference(const PointValues& y, const PointValues& x);

/// Checks (V(S(h')x) - V(x))/h' <= -v(x)/2 and v(x) > 0 at each sample.
DiniReport dini_certificate(const LyapunovFunction& V, const std::vector<Vec>& samples, double h_prime);

/// Boxes at least `rings` boxes away from every Morse set, from every basin boundary and from
/// the domain edge.
CubicalSet dini_region(const MorseGraph& g, const MorseFiltration& filt, std::size_t rings = 2);
/// Uniform random points in the union of the boxes of s (box chosen uniformly, then a point in it).
std::vector<Vec> sample_points(const CubicalSet& s, std::size_t n, std::mt19937_64& rng);

/// Range of V over the box centers of each Morse set.
struct CriticalRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// First time t with V(S(t)x) <= a, located on the sample grid and refined inside the last step.
struct ExitTime {
  std::size_t steps = 0;     // whole steps of length h
  double remainder = 0.0;    // partial final step in [0, h]
  double time(double h) const { return static_cast<double>(steps) * h + remainder; }
};

/// Throws PreconditionError if V(x) > b, a >= b, or a critical range meets [a, b].
ExitTime exit_time(const LyapunovFunction& V, const Vec& x, double a, double b,
                   const std::vector<CriticalRange>& critical);
/// H(sigma, x) = S(sigma t(x)) x; identity on V_a.
Vec retract(const LyapunovFunction& V, double sigma, const Vec& x, double a, double b,
            const std::vector<CriticalRange>& critical);

/// Follows x until it is within two box widths of the component with V <= c, or until the state
/// stops moving. The component must contain the mean of its box centers and the field must be
/// small there.
Vec equilibrium_limit(const LyapunovFunction& V, const CubicalSet& component, const Vec& x, double c,
                      double b, const std::vector<CriticalRange>& critical);

/// Per-box table at box centers; NaN marks truncated evaluations.
struct LyapunovField {
  CubicalGrid grid;
  std::vector<double> phi;  // phi and psi of the top attractor function
  std::vector<double> psi;
  std::vector<double> V;
  std::vector<double> v;
  std::vector<std::vector<double>> V_k;  // [k-1][box]
  LyapunovParams params;
  std::size_t truncated = 0;

  CubicalSet sublevel(double a) const;
  /// Per Morse set, range of V over its box centers.
  std::vector<CriticalRange> critical_ranges(const MorseFiltration& filt) const;
  void write_csv(std::ostream& out) const;
};

LyapunovField tabulate(const StrictMorseLyapunov& V, const CubicalGrid& grid);

}  // namespace morsecube
