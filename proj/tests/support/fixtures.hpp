#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "morsecube/combdyn.hpp"
#include "morsecube/cubgrid.hpp"
#include "morsecube/flowsim.hpp"
#include "morsecube/lyap.hpp"
#include "morsecube/morsegraph.hpp"

#ifndef MORSECUBE_FIXTURE_DIR
#define MORSECUBE_FIXTURE_DIR "."
#endif

namespace fixture {

struct System {
  morsecube::VectorField field;
  morsecube::CubicalGrid grid;
  morsecube::OuterMap map;
  morsecube::MorseGraph graph;
  morsecube::MorseFiltration filt;
  double tau = 2.0;
};

inline morsecube::CubicalGrid square_grid(std::size_t depth, double half = 2.0) {
  const std::size_t d[2] = {depth, depth};
  return morsecube::build_grid(morsecube::Vec{-half, -half}, morsecube::Vec{half, half}, d);
}

/// Outer map of a planar builtin on [-2,2]^2, cached on disk across test binaries.
inline morsecube::OuterMap cached_map(const std::string& name, std::size_t depth, double tau) {
  namespace fs = std::filesystem;
  const fs::path dir = MORSECUBE_FIXTURE_DIR;
  const fs::path file = dir / (name + "-" + std::to_string(depth) + "-" + morsecube::format_double(tau) + ".map");
  if (fs::exists(file)) return morsecube::load_map(file.string());
  morsecube::OuterMapParams p;
  p.tau = tau;
  auto f = morsecube::build_outer_map(square_grid(depth), morsecube::VectorField::builtin(name), p);
  fs::create_directories(dir);
  const fs::path tmp = file.string() + ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&f));
  morsecube::save_map(f, tmp.string());
  fs::rename(tmp, file);
  return f;
}

/// Builtin system at depth 64 and tau 2 with its Morse graph and filtration.
inline const System& builtin(const std::string& name, std::size_t depth = 64, double tau = 2.0) {
  static std::map<std::string, std::unique_ptr<System>> cache;
  const std::string key = name + "/" + std::to_string(depth) + "/" + morsecube::format_double(tau);
  auto& slot = cache[key];
  if (!slot) {
    auto s = std::make_unique<System>();
    s->field = morsecube::VectorField::builtin(name);
    s->grid = square_grid(depth);
    s->map = cached_map(name, depth, tau);
    s->graph = morsecube::condense(s->map);
    s->filt = morsecube::filtration(s->graph, s->map);
    s->tau = tau;
    slot = std::move(s);
  }
  return *slot;
}

/// Boxes whose closure meets the circle of radius r about the origin (r = 0: boxes touching the origin).
inline morsecube::CubicalSet circle_cover(const morsecube::CubicalGrid& g, double r) {
  morsecube::CubicalSet out(g);
  for (std::uint32_t b = 0; b < g.box_count(); ++b) {
    const auto lo = g.box_lower(morsecube::BoxId{b}), hi = g.box_upper(morsecube::BoxId{b});
    double near = 0, far = 0;
    for (std::size_t i = 0; i < g.dim(); ++i) {
      const double a = std::abs(lo[i]), c = std::abs(hi[i]);
      const double m = (lo[i] <= 0 && hi[i] >= 0) ? 0.0 : std::min(a, c);
      near += m * m;
      far += std::max(a, c) * std::max(a, c);
    }
    if (near <= r * r && far >= r * r) out.insert(morsecube::BoxId{b});
  }
  return out;
}

inline morsecube::LyapunovParams lyap_params(double tau = 2.0, double lambda = 1.0, double scale = 1.0) {
  morsecube::LyapunovParams p;
  p.lambda = lambda;
  p.t_max = 50.0 * tau;
  p.settle = tau;
  p.h = 1e-3;
  p.alpha_scale = scale;
  return p;
}

}  // namespace fixture
