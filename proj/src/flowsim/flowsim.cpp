#include "morsecube/flowsim.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "morsecube/cubgrid.hpp"
#include "morsecube/errors.hpp"

namespace morsecube {

const std::vector<std::string>& VectorField::builtin_names() {
  static const std::vector<std::string> names = {"circle-attractor", "double-well", "linear-sink",
                                                 "zero-field"};
  return names;
}

VectorField VectorField::builtin(const std::string& name, std::size_t dim) {
  VectorField f;
  f.name_ = name;
  f.dim_ = dim;
  if (name == "circle-attractor") f.kind_ = Builtin::circle_attractor;
  else if (name == "double-well") f.kind_ = Builtin::double_well;
  else if (name == "linear-sink") f.kind_ = Builtin::linear_sink;
  else if (name == "zero-field") f.kind_ = Builtin::zero_field;
  else throw Error("unknown builtin system '" + name + "'");
  if ((f.kind_ == Builtin::circle_attractor || f.kind_ == Builtin::double_well) && dim != 2)
    throw Error(name + " is planar (dimension 2)");
  if (dim == 0 || dim > kMaxDim) throw Error("unsupported dimension " + std::to_string(dim));
  return f;
}

VectorField VectorField::polynomial(std::size_t dim, std::vector<std::vector<Monomial>> components) {
  if (dim == 0 || dim > kMaxDim) throw Error("unsupported dimension " + std::to_string(dim));
  if (components.size() != dim) throw Error("polynomial field needs one component per axis");
  for (const auto& comp : components)
    for (const auto& t : comp)
      if (t.exponents.size() != dim) throw Error("monomial exponent count must equal dimension");
  VectorField f;
  f.kind_ = Builtin::polynomial;
  f.name_ = "polynomial";
  f.dim_ = dim;
  f.terms_ = std::move(components);
  return f;
}

VectorField VectorField::parse_polynomial(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  long current = -1;
  std::vector<std::vector<Monomial>> comps;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok[0] == "dim") {
      if (dim != 0 || tok.size() != 2) throw ParseError(lineno, "expected a single 'dim <m>' line");
      const double d = parse_double(tok[1], lineno);
      if (d < 1 || d > static_cast<double>(kMaxDim) || d != std::floor(d))
        throw ParseError(lineno, "dimension must be an integer in 1.." + std::to_string(kMaxDim));
      dim = static_cast<std::size_t>(d);
      comps.assign(dim, {});
      continue;
    }
    if (dim == 0) throw ParseError(lineno, "'dim <m>' must come first");
    if (tok[0] == "component") {
      if (tok.size() != 2) throw ParseError(lineno, "expected 'component <i>'");
      const double c = parse_double(tok[1], lineno);
      if (c < 0 || c >= static_cast<double>(dim) || c != std::floor(c))
        throw ParseError(lineno, "component index out of range");
      current = static_cast<long>(c);
      continue;
    }
    if (current < 0) throw ParseError(lineno, "monomial before any 'component' line");
    if (tok.size() != dim + 1)
      throw ParseError(lineno, "monomial needs a coefficient and " + std::to_string(dim) + " exponents");
    Monomial mono;
    mono.coef = parse_double(tok[0], lineno);
    for (std::size_t i = 1; i < tok.size(); ++i) {
      const double e = parse_double(tok[i], lineno);
      if (e < 0 || e != std::floor(e) || e > 64)
        throw ParseError(lineno, "exponents must be nonnegative integers");
      mono.exponents.push_back(static_cast<unsigned>(e));
    }
    comps[static_cast<std::size_t>(current)].push_back(std::move(mono));
  }
  if (dim == 0) throw ParseError(lineno + 1, "missing 'dim <m>' line");
  return polynomial(dim, std::move(comps));
}

VectorField VectorField::load_polynomial(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open polynomial field file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_polynomial(buf.str());
}

Vec VectorField::operator()(const Vec& x) const {
  Vec out(dim_);
  switch (kind_) {
    case Builtin::circle_attractor: {
      const double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
      const double s = (r - 1.0) * (r - 1.0);
      out[0] = -s * x[0] - x[1];
      out[1] = -s * x[1] + x[0];
      break;
    }
    case Builtin::double_well:
      out[0] = x[0] - x[0] * x[0] * x[0];
      out[1] = -x[1];
      break;
    case Builtin::linear_sink:
      for (std::size_t i = 0; i < dim_; ++i) out[i] = -x[i];
      break;
    case Builtin::zero_field:
      break;
    case Builtin::polynomial:
      for (std::size_t i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (const auto& t : terms_[i]) {
          double v = t.coef;
          for (std::size_t j = 0; j < dim_; ++j)
            for (unsigned e = 0; e < t.exponents[j]; ++e) v *= x[j];
          acc += v;
        }
        out[i] = acc;
      }
      break;
  }
  return out;
}

std::size_t step_count(double h, double T) {
  if (!(h > 0.0) || !(T >= h * (1.0 - 1e-9)))
    throw Error("integration needs 0 < h <= T");
  const double ratio = T / h;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(ratio));
}

Vec rk4_step(const VectorField& f, const Vec& x, double h) {
  const Vec k1 = f(x);
  const Vec k2 = f(x + (0.5 * h) * k1);
  const Vec k3 = f(x + (0.5 * h) * k2);
  const Vec k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

template <class Visit>
Vec run(const VectorField& f, const Vec& x0, double h, double T, Visit&& visit) {
  if (x0.size() != f.dim()) throw Error("start point dimension does not match the field");
  if (!x0.finite()) throw IntegrationBlowupError(0, "non-finite start point");
  const std::size_t n = step_count(h, T);
  // Full steps are exactly h so that restarting from a sample reproduces the remaining samples.
  const double last = std::abs(T / h - static_cast<double>(n)) <= 1e-9
                          ? h
                          : T - static_cast<double>(n - 1) * h;
  Vec x = x0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = i == n ? T : static_cast<double>(i) * h;
    x = rk4_step(f, x, i == n ? last : h);
    if (!x.finite())
      throw IntegrationBlowupError(i, "integration blew up at step " + std::to_string(i));
    visit(t, x);
  }
  return x;
}

}  // namespace

Trajectory integrate(const VectorField& f, const Vec& x0, double h, double T) {
  Trajectory tr;
  tr.x0 = x0;
  tr.h = h;
  tr.times.push_back(0.0);
  tr.samples.push_back(x0);
  run(f, x0, h, T, [&](double t, const Vec& x) {
    tr.times.push_back(t);
    tr.samples.push_back(x);
  });
  return tr;
}

Vec flow_map(const VectorField& f, const Vec& x, double tau, double h) {
  return run(f, x, h, tau, [](double, const Vec&) {});
}

}  // namespace morsecube
