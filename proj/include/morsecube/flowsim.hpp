#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "morsecube/vec.hpp"

namespace morsecube {

enum class Builtin { circle_attractor, double_well, linear_sink, zero_field, polynomial };

/// One monomial coef * x0^e0 * x1^e1 * ... of a polynomial field component.
struct Monomial {
  double coef = 0.0;
  std::vector<unsigned> exponents;
};

/// A vector field on R^m: a named builtin or a user polynomial.
class VectorField {
 public:
  /// Builtin by registry name; circle-attractor and double-well are planar.
  static VectorField builtin(const std::string& name, std::size_t dim = 2);
  static VectorField polynomial(std::size_t dim, std::vector<std::vector<Monomial>> components);

  /// Text format:
  ///   dim <m>
  ///   component <i>
  ///   <coef> <e1> ... <em>
  /// Blank lines and `#` comments are ignored; missing components are zero.
  static VectorField parse_polynomial(const std::string& text);
  static VectorField load_polynomial(const std::string& path);

  static const std::vector<std::string>& builtin_names();

  Builtin kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::vector<Monomial>>& components() const noexcept { return terms_; }

  Vec operator()(const Vec& x) const;

 private:
  Builtin kind_ = Builtin::zero_field;
  std::string name_;
  std::size_t dim_ = 0;
  std::vector<std::vector<Monomial>> terms_;
};

inline Vec evaluate_field(const VectorField& f, const Vec& x) { return f(x); }

/// Samples at t = 0, h, 2h, ...; the last step is shortened so the final time is exactly T.
struct Trajectory {
  Vec x0;
  double h = 0.0;
  std::vector<double> times;
  std::vector<Vec> samples;
};

/// Number of steps for horizon T; ties within 1e-9 h of a multiple of h round to it.
std::size_t step_count(double h, double T);

Vec rk4_step(const VectorField& f, const Vec& x, double h);

/// Classical RK4. Throws IntegrationBlowupError naming the failing step.
Trajectory integrate(const VectorField& f, const Vec& x0, double h, double T);

/// Last sample of integrate(f, x, h, tau) without storing the path.
Vec flow_map(const VectorField& f, const Vec& x, double tau, double h);

}  // namespace morsecube
