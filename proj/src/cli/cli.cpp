#include "morsecube/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "morsecube/errors.hpp"

namespace morsecube {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::map: return "map";
    case Stage::morse: return "morse";
    case Stage::lyapunov: return "lyapunov";
    case Stage::homology: return "homology";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  if (name == "map") return Stage::map;
  if (name == "morse") return Stage::morse;
  if (name == "lyapunov") return Stage::lyapunov;
  if (name == "homology") return Stage::homology;
  throw Error("unknown stage '" + name + "' (expected map, morse, lyapunov or homology)");
}

bool RunConfig::runs(Stage s) const {
  // Later stages pull in the ones they depend on.
  auto has = [&](Stage x) { return std::find(stages.begin(), stages.end(), x) != stages.end(); };
  switch (s) {
    case Stage::map: return !stages.empty();
    case Stage::morse: return has(Stage::morse) || has(Stage::lyapunov) || has(Stage::homology);
    case Stage::lyapunov: return has(Stage::lyapunov);
    case Stage::homology: return has(Stage::homology);
  }
  return false;
}

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string(name) + " must be positive");
  };
  if (system.empty()) throw Error("system must be set");
  if (dim == 0 || dim > kMaxDim) throw Error("dim must be in 1.." + std::to_string(kMaxDim));
  if (depth.empty()) throw Error("depth must be set");
  for (std::size_t d : depth)
    if (d == 0) throw Error("depth must be positive");
  positive(tau, "tau");
  positive(h, "h");
  positive(lambda, "lambda");
  positive(horizon(), "t_max");
  if (h > tau) throw Error("h must not exceed tau");
  if (samples_per_axis < 2) throw Error("samples_per_axis must be at least 2");
  if (!lower.empty() && lower.size() != upper.size()) throw Error("lower and upper need equal lengths");
  if (output_dir.empty()) throw Error("output_dir must be set");
  if (stages.empty()) throw Error("stages must not be empty");
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error("config key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw Error("config key '" + key + "' must be an integer");
  const auto v = j.get<long long>();
  if (v < 0) throw Error("config key '" + key + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

double get_number(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) throw Error("config key '" + key + "' must be a number");
  return j.get<double>();
}

std::vector<double> get_numbers(const nlohmann::json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw Error("config key '" + key + "' must be a number or an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(get_number(e, key));
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text, RunConfig cfg) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("config must be a JSON object");
  for (const auto& [key, val] : j.items()) {
    if (key == "system") cfg.system = get_as<std::string>(val, key);
    else if (key == "dim") cfg.dim = get_count(val, key);
    else if (key == "lower") cfg.lower = get_numbers(val, key);
    else if (key == "upper") cfg.upper = get_numbers(val, key);
    else if (key == "depth") {
      cfg.depth.clear();
      if (val.is_array())
        for (const auto& e : val) cfg.depth.push_back(get_count(e, key));
      else
        cfg.depth.push_back(get_count(val, key));
    } else if (key == "tau") cfg.tau = get_number(val, key);
    else if (key == "h") cfg.h = get_number(val, key);
    else if (key == "samples_per_axis") cfg.samples_per_axis = get_count(val, key);
    else if (key == "bloat_rings") cfg.bloat_rings = get_count(val, key);
    else if (key == "lambda") cfg.lambda = get_number(val, key);
    else if (key == "t_max") cfg.t_max = get_number(val, key);
    else if (key == "field") cfg.field = parse_field(get_as<std::string>(val, key));
    else if (key == "output_dir") cfg.output_dir = get_as<std::string>(val, key);
    else if (key == "stages") {
      cfg.stages.clear();
      for (const auto& s : get_as<std::vector<std::string>>(val, key)) cfg.stages.push_back(parse_stage(s));
    } else if (key == "dini_samples") cfg.dini_samples = get_count(val, key);
    else if (key == "seed") cfg.seed = get_count(val, key);
    else throw Error("unknown config key '" + key + "'");
  }
  return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), std::move(base));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

VectorField load_system(const RunConfig& cfg) {
  const auto& names = VectorField::builtin_names();
  if (std::find(names.begin(), names.end(), cfg.system) != names.end())
    return VectorField::builtin(cfg.system, cfg.dim);
  if (!fs::exists(cfg.system))
    throw Error("system '" + cfg.system + "' is neither a builtin nor an existing polynomial file");
  return VectorField::load_polynomial(cfg.system);
}

CubicalGrid make_grid(const RunConfig& cfg, std::size_t m) {
  auto axis_values = [&](const std::vector<double>& v, double fallback, const char* name) {
    Vec out(m);
    if (v.empty()) {
      for (std::size_t i = 0; i < m; ++i) out[i] = fallback;
    } else if (v.size() == 1) {
      for (std::size_t i = 0; i < m; ++i) out[i] = v[0];
    } else if (v.size() == m) {
      for (std::size_t i = 0; i < m; ++i) out[i] = v[i];
    } else {
      throw Error(std::string(name) + " needs 1 or " + std::to_string(m) + " entries");
    }
    return out;
  };
  std::vector<std::size_t> depth;
  if (cfg.depth.size() == 1) depth.assign(m, cfg.depth[0]);
  else if (cfg.depth.size() == m) depth = cfg.depth;
  else throw Error("depth needs 1 or " + std::to_string(m) + " entries");
  return build_grid(axis_values(cfg.lower, -2.0, "lower"), axis_values(cfg.upper, 2.0, "upper"), depth);
}

bool PipelineResult::certificates_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

// ---------------------------------------------------------------------------

namespace {

template <class F>
void stage(Stage s, std::ostream* log, F&& body) {
  if (log) *log << "[" << stage_name(s) << "]\n";
  try {
    body();
  } catch (const Error& e) {
    throw Error("stage " + stage_name(s) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error("stage " + stage_name(s) + ": " + e.what());
  }
}

std::vector<long long> as_long(const BettiVector& b) {
  return {b.ranks.begin(), b.ranks.end()};
}

}  // namespace

PipelineResult compute(const RunConfig& cfg, std::ostream* log) {
  cfg.validate();
  PipelineResult r;
  r.config = cfg;
  r.field = load_system(cfg);
  r.grid = make_grid(cfg, r.field->dim());
  const CubicalGrid& grid = *r.grid;

  if (cfg.runs(Stage::map))
    stage(Stage::map, log, [&] {
      OuterMapParams p;
      p.tau = cfg.tau;
      p.h = cfg.h;
      p.samples_per_axis = cfg.samples_per_axis;
      p.bloat_rings = cfg.bloat_rings;
      r.map = build_outer_map(grid, *r.field, p);
      if (log) *log << "  " << grid.box_count() << " boxes, " << r.map->flagged().count() << " flagged\n";
    });

  if (cfg.runs(Stage::morse))
    stage(Stage::morse, log, [&] {
      r.graph = condense(*r.map);
      r.filtration = filtration(*r.graph, *r.map);
      if (log) *log << "  " << r.graph->size() << " recurrent components\n";
    });

  if (cfg.runs(Stage::lyapunov))
    stage(Stage::lyapunov, log, [&] {
      LyapunovParams p;
      p.lambda = cfg.lambda;
      p.t_max = cfg.horizon();
      p.settle = cfg.tau;
      p.h = cfg.h;
      r.lyapunov = std::make_shared<StrictMorseLyapunov>(
          StrictMorseLyapunov::from_filtration(*r.field, *r.filtration, p));
      r.values = tabulate(*r.lyapunov, grid);

      double worst = 0.0;
      bool ok = true;
      for (std::size_t k = 1; k <= r.filtration->size(); ++k)
        for (BoxId b : r.filtration->morse_set(k).boxes()) {
          const double dev = std::abs(r.values->V[b.value] - static_cast<double>(k - 1));
          if (!(dev <= 0.05)) ok = false;
          if (!std::isnan(dev)) worst = std::max(worst, dev);
        }
      std::ostringstream d;
      d << "max |V - (k-1)| on Morse sets = " << worst;
      r.verdicts.push_back({"critical values", ok, d.str()});

      if (cfg.dini_samples > 0) {
        const CubicalSet region = dini_region(*r.graph, *r.filtration, 2);
        std::mt19937_64 rng(cfg.seed);
        if (region.empty()) {
          r.verdicts.push_back({"dini", false, "no boxes left outside the excluded collars"});
        } else {
          r.dini = dini_certificate(*r.lyapunov, sample_points(region, cfg.dini_samples, rng), cfg.h);
          std::ostringstream dd;
          dd << r.dini->violations << " of " << r.dini->samples << " samples violate, worst margin "
             << r.dini->worst_margin;
          r.verdicts.push_back({"dini", r.dini->passed(), dd.str()});
        }
      }
      if (log) *log << "  " << r.values->truncated << " truncated evaluations\n";
    });

  if (cfg.runs(Stage::homology))
    stage(Stage::homology, log, [&] {
      const std::size_t top = grid.dim();
      r.critical = critical_group_table(*r.filtration, *r.map, cfg.field);
      std::vector<BettiVector> ord, quo;
      for (const auto& e : r.critical->entries) {
        ord.push_back(e.ordinary);
        quo.push_back(e.quotient);
      }
      r.basin_betti = basin_betti(*r.filtration, cfg.field);
      r.quotient_basin_betti = quotient_basin_betti(*r.filtration, cfg.field);
      r.report = verify_inequalities(morse_numbers(ord, top), as_long(*r.basin_betti));
      r.quotient_report = verify_inequalities(morse_numbers(quo, top), as_long(*r.quotient_basin_betti));
      r.verdicts.push_back({"morse inequalities", r.report->all_pass(), ""});
      r.verdicts.push_back({"quotient morse inequalities", r.quotient_report->all_pass(), "derived identity"});
    });
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

void require(bool ok, const char* stage) {
  if (!ok) throw Error(std::string("stage ") + stage + " has not run");
}

ojson json_report(const MorseReport& m) {
  ojson j;
  j["morse_numbers"] = m.m;
  j["betti_numbers"] = m.beta;
  j["lhs"] = m.lhs;
  j["rhs"] = m.rhs;
  j["gamma"] = m.gamma;
  j["euler"] = {{"morse_sum", m.morse_sum}, {"betti", m.euler}};
  ojson v;
  v["inequalities"] = m.inequality;
  v["equation"] = m.equation;
  v["gamma_nonnegative"] = m.gamma_nonnegative;
  v["gamma_top_zero"] = m.gamma_top_zero;
  v["all_pass"] = m.all_pass();
  j["verdicts"] = v;
  return j;
}

}  // namespace

void export_map(const PipelineResult& r, const std::string& path) {
  require(r.map.has_value(), "map");
  auto out = open_out(path);
  write_map(*r.map, out);
}

void export_dot(const PipelineResult& r, const std::string& path) {
  require(r.graph.has_value(), "morse");
  auto out = open_out(path);
  out << to_dot(*r.graph);
}

void export_sets(const PipelineResult& r, const std::string& dir) {
  require(r.filtration.has_value(), "morse");
  const MorseFiltration& f = *r.filtration;
  for (std::size_t k = 1; k <= f.size(); ++k) {
    const std::string n = std::to_string(k);
    open_out(dir + "/M" + n + ".txt") << f.morse_set(k).to_text();
    open_out(dir + "/A" + n + ".txt") << f.attractor(k).to_text();
    open_out(dir + "/Omega" + n + ".txt") << f.basin(k).to_text();
    if (f.has_neighborhood(k)) open_out(dir + "/W" + n + ".txt") << f.neighborhood(k).to_text();
  }
}

void export_csv(const PipelineResult& r, const std::string& path) {
  require(r.values.has_value(), "lyapunov");
  auto out = open_out(path);
  r.values->write_csv(out);
}

std::string svg_heatmap(const PipelineResult& r) {
  require(r.values.has_value(), "lyapunov");
  const CubicalGrid& g = r.values->grid;
  if (g.dim() != 2) throw Error("SVG heatmap needs a planar grid");
  const std::size_t nx = g.subdivisions(0), ny = g.subdivisions(1);
  if (nx > 64 || ny > 64) throw Error("SVG heatmap is limited to depth 64 per axis");
  const std::size_t cell = std::max<std::size_t>(4, 512 / std::max(nx, ny));
  const double vmax = std::max<double>(1.0, static_cast<double>(r.filtration ? r.filtration->size() : 1));
  std::vector<int> morse(g.box_count(), 0);
  if (r.filtration)
    for (std::size_t k = 1; k <= r.filtration->size(); ++k)
      for (BoxId b : r.filtration->morse_set(k).boxes()) morse[b.value] = static_cast<int>(k);

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << nx * cell << "\" height=\"" << ny * cell
    << "\" viewBox=\"0 0 " << nx * cell << ' ' << ny * cell << "\">\n";
  s << "<style>.m{stroke:#000;stroke-width:1}</style>\n";
  for (std::uint32_t b = 0; b < g.box_count(); ++b) {
    const BoxCoords c = g.coords(BoxId{b});
    const double V = r.values->V[b];
    std::string fill = "#808080";
    if (std::isfinite(V)) {
      const double t = std::clamp(V / vmax, 0.0, 1.0);
      const int red = static_cast<int>(std::lround(255 * t));
      const int blue = static_cast<int>(std::lround(255 * (1 - t)));
      std::ostringstream col;
      col << '#' << std::hex << std::setfill('0') << std::setw(2) << red << "40" << std::setw(2) << blue;
      fill = col.str();
    }
    s << "<rect x=\"" << c[0] * static_cast<std::int64_t>(cell) << "\" y=\""
      << (static_cast<std::int64_t>(ny) - 1 - c[1]) * static_cast<std::int64_t>(cell) << "\" width=\"" << cell
      << "\" height=\"" << cell << "\" fill=\"" << fill << '"';
    if (morse[b]) s << " class=\"m\" data-morse=\"" << morse[b] << '"';
    s << "/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void export_svg(const PipelineResult& r, const std::string& path) {
  const std::string text = svg_heatmap(r);
  open_out(path) << text;
}

std::string report_json(const PipelineResult& r) {
  const RunConfig& c = r.config;
  ojson j;
  j["system"] = c.system;
  j["field"] = field_name(c.field);
  if (r.grid) j["grid"] = r.grid->describe();
  j["parameters"] = {{"tau", c.tau},
                     {"h", c.h},
                     {"samples_per_axis", c.samples_per_axis},
                     {"bloat_rings", c.bloat_rings},
                     {"lambda", c.lambda},
                     {"t_max", c.horizon()}};
  ojson stages = ojson::array();
  for (Stage s : {Stage::map, Stage::morse, Stage::lyapunov, Stage::homology})
    if (c.runs(s)) stages.push_back(stage_name(s));
  j["stages"] = stages;
  if (r.graph) {
    ojson sizes = ojson::array(), edges = ojson::array();
    for (const auto& m : r.graph->components) sizes.push_back(m.count());
    for (auto [from, to] : r.graph->edges) edges.push_back({from + 1, to + 1});
    j["morse_graph"] = {{"components", r.graph->size()}, {"sizes", sizes}, {"edges", edges}};
  }
  if (r.values) j["lyapunov"] = {{"truncated", r.values->truncated}};
  if (r.critical) {
    ojson cg = ojson::array();
    for (std::size_t k = 0; k < r.critical->entries.size(); ++k)
      cg.push_back({{"k", k + 1},
                    {"ordinary", r.critical->entries[k].ordinary.ranks},
                    {"quotient", r.critical->entries[k].quotient.ranks}});
    j["critical_groups"] = cg;
  }
  if (r.report) {
    const ojson rep = json_report(*r.report);
    for (const auto& [k, v] : rep.items()) j[k] = v;
  }
  if (r.quotient_report) {
    ojson q = json_report(*r.quotient_report);
    q["identity"] = "derived identity";
    q["field"] = field_name(c.field);
    j["quotient"] = q;
  }
  ojson verdicts = ojson::array();
  for (const auto& v : r.verdicts) verdicts.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  j["certificates"] = verdicts;
  j["all_pass"] = r.certificates_pass();
  return j.dump(2) + "\n";
}

void export_report(const PipelineResult& r, const std::string& path) { open_out(path) << report_json(r); }

void print_table(const PipelineResult& r, std::ostream& out) {
  auto vec = [](const auto& v) {
    std::ostringstream s;
    s << '(';
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    s << ')';
    return s.str();
  };
  out << "system " << r.config.system << ", " << (r.grid ? r.grid->describe() : std::string()) << "\n";
  if (r.graph) {
    out << "recurrent components: " << r.graph->size() << "\n";
    for (std::size_t k = 1; k <= r.graph->size(); ++k)
      out << "  M" << k << ": " << r.graph->morse_set(k).count() << " boxes\n";
  }
  if (r.critical) {
    out << "critical groups over " << field_name(r.config.field) << ":\n";
    out << "  k  C_*(M_k)  quotient\n";
    for (std::size_t k = 0; k < r.critical->entries.size(); ++k)
      out << "  " << k + 1 << "  " << to_string(r.critical->entries[k].ordinary) << "  "
          << to_string(r.critical->entries[k].quotient) << "\n";
  }
  if (r.report) {
    const auto& m = *r.report;
    out << "m = " << vec(m.m) << ", beta = " << vec(m.beta) << ", gamma = " << vec(m.gamma) << "\n";
    out << "Morse equation: " << m.morse_sum << " = " << m.euler << (m.equation ? "" : " (fails)") << "\n";
  }
  if (r.quotient_report) {
    const auto& m = *r.quotient_report;
    out << "quotient (derived identity): m = " << vec(m.m) << ", beta = " << vec(m.beta) << ", equation "
        << m.morse_sum << " = " << m.euler << "\n";
  }
  for (const auto& v : r.verdicts)
    out << (v.passed ? "PASS " : "FAIL ") << v.name << (v.detail.empty() ? "" : ": " + v.detail) << "\n";
}

int run_pipeline(const RunConfig& cfg, std::ostream& out, PipelineResult* result) {
  PipelineResult r = compute(cfg, &out);
  const std::string dir = cfg.output_dir;
  fs::create_directories(dir);
  if (r.map) export_map(r, dir + "/outer_map.txt");
  if (r.graph) {
    export_dot(r, dir + "/morse_graph.dot");
    export_sets(r, dir + "/sets");
  }
  if (r.values) {
    export_csv(r, dir + "/lyapunov.csv");
    const CubicalGrid& g = r.values->grid;
    if (g.dim() == 2 && g.subdivisions(0) <= 64 && g.subdivisions(1) <= 64) export_svg(r, dir + "/heatmap.svg");
    else out << "heatmap skipped: needs a planar grid of depth at most 64\n";
  }
  export_report(r, dir + "/report.json");
  print_table(r, out);
  const int status = r.certificates_pass() ? 0 : 2;
  if (result) *result = std::move(r);
  return status;
}

// ---------------------------------------------------------------------------

DepthComparison compare_depths(const RunConfig& cfg, std::size_t depth_a, std::size_t depth_b) {
  if (depth_a >= depth_b) throw Error("compare-depths needs depth_a < depth_b");
  auto one = [&](std::size_t depth) {
    RunConfig c = cfg;
    c.depth = {depth};
    c.stages = {Stage::map, Stage::morse};
    PipelineResult r = compute(c);
    DepthSummary s;
    s.depth = depth;
    s.components = r.graph->size();
    try {
      std::vector<BettiVector> ord;
      for (const auto& e : critical_group_table(*r.filtration, *r.map, cfg.field).entries) ord.push_back(e.ordinary);
      s.morse_numbers = morse_numbers(ord, r.grid->dim());
      s.betti_numbers = basin_betti(*r.filtration, cfg.field).ranks;
    } catch (const Error& e) {
      s.error = e.what();
    }
    return s;
  };
  DepthComparison c;
  c.a = one(depth_a);
  c.b = one(depth_b);
  c.agree = c.a.error.empty() && c.b.error.empty() && c.a.components == c.b.components &&
            c.a.morse_numbers == c.b.morse_numbers && c.a.betti_numbers == c.b.betti_numbers;
  return c;
}

std::string comparison_json(const DepthComparison& c) {
  auto one = [](const DepthSummary& s) {
    ojson j;
    j["depth"] = s.depth;
    j["components"] = s.components;
    j["morse_numbers"] = s.morse_numbers;
    j["betti_numbers"] = s.betti_numbers;
    if (!s.error.empty()) j["error"] = s.error;
    return j;
  };
  ojson j;
  j["a"] = one(c.a);
  j["b"] = one(c.b);
  j["agree"] = c.agree;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

struct Overrides {
  std::string config;
  std::string system, field, output, stages;
  std::size_t dim = 0, samples = 0, bloat = 0, dini = 0;
  std::uint64_t seed = 0;
  std::vector<double> lower, upper;
  std::vector<std::size_t> depth;
  double tau = 0, h = 0, lambda = 0, t_max = 0;
  CLI::App* app = nullptr;

  void attach(CLI::App* a) {
    app = a;
    app->add_option("--config", config, "JSON config file");
    auto add = [&](const char* name, auto& var, const char* help) { app->add_option(name, var, help); };
    add("--system", system, "builtin name or polynomial field file");
    add("--dim", dim, "dimension of a builtin system");
    add("--lower", lower, "lower domain corner (one value or one per axis)");
    add("--upper", upper, "upper domain corner (one value or one per axis)");
    add("--depth", depth, "subdivisions (one value or one per axis)");
    add("--tau", tau, "flow time of the outer map");
    add("--step", h, "RK4 step h");
    add("--samples", samples, "samples per box axis");
    add("--bloat", bloat, "bloat rings");
    add("--lambda", lambda, "decay rate of the Lyapunov integral");
    add("--t-max", t_max, "trajectory horizon (default 50 tau)");
    add("--field", field, "coefficient field: Z2 or Q");
    add("--output", output, "output directory");
    add("--stages", stages, "comma-separated stages: map,morse,lyapunov,homology");
    add("--dini-samples", dini, "sample count of the Dini certificate");
    add("--seed", seed, "random seed");
  }

  bool given(const char* name) const { return app->get_option(name)->count() > 0; }

  RunConfig build() const {
    RunConfig c;
    if (!config.empty()) c = load_config(config);
    if (given("--system")) c.system = system;
    if (given("--dim")) c.dim = dim;
    if (given("--lower")) c.lower = lower;
    if (given("--upper")) c.upper = upper;
    if (given("--depth")) c.depth = depth;
    if (given("--tau")) c.tau = tau;
    if (given("--step")) c.h = h;
    if (given("--samples")) c.samples_per_axis = samples;
    if (given("--bloat")) c.bloat_rings = bloat;
    if (given("--lambda")) c.lambda = lambda;
    if (given("--t-max")) c.t_max = t_max;
    if (given("--field")) c.field = parse_field(field);
    if (given("--output")) c.output_dir = output;
    if (given("--stages")) {
      c.stages.clear();
      std::stringstream ss(stages);
      for (std::string s; std::getline(ss, s, ',');)
        if (!s.empty()) c.stages.push_back(parse_stage(s));
    }
    if (given("--dini-samples")) c.dini_samples = dini;
    if (given("--seed")) c.seed = seed;
    c.validate();
    return c;
  }
};

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Morse decompositions, Lyapunov functions and critical groups of planar and low-dimensional flows"};
  app.require_subcommand(1);

  Overrides analyze_o, graph_o, lyap_o, homol_o, verify_o, compare_o, export_o;
  auto* analyze = app.add_subcommand("analyze", "run every stage and write all artifacts");
  analyze_o.attach(analyze);
  auto* graph = app.add_subcommand("morse-graph", "outer map and Morse graph only");
  graph_o.attach(graph);
  auto* lyap = app.add_subcommand("lyapunov", "Morse graph plus the Lyapunov table");
  lyap_o.attach(lyap);
  auto* homol = app.add_subcommand("homology", "Morse graph plus critical groups and the Morse report");
  homol_o.attach(homol);
  auto* verify = app.add_subcommand("verify", "run every stage and print the certificate verdicts");
  verify_o.attach(verify);
  auto* compare = app.add_subcommand("compare-depths", "compare Morse data at two depths");
  compare_o.attach(compare);
  std::size_t depth_a = 64, depth_b = 128;
  compare->add_option("--depth-a", depth_a, "coarser depth")->capture_default_str();
  compare->add_option("--depth-b", depth_b, "finer depth")->capture_default_str();
  auto* exp = app.add_subcommand("export", "write one artifact");
  export_o.attach(exp);
  std::string format, out_path;
  exp->add_option("--format", format, "dot, csv, svg, map, sets or report")
      ->required()
      ->check(CLI::IsMember({"dot", "csv", "svg", "map", "sets", "report"}));
  exp->add_option("--out", out_path, "output file (directory for sets)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    auto with = [](RunConfig c, std::initializer_list<Stage> s) {
      c.stages.assign(s);
      return c;
    };
    if (analyze->parsed()) return run_pipeline(analyze_o.build(), std::cout);
    if (graph->parsed()) return run_pipeline(with(graph_o.build(), {Stage::map, Stage::morse}), std::cout);
    if (lyap->parsed())
      return run_pipeline(with(lyap_o.build(), {Stage::map, Stage::morse, Stage::lyapunov}), std::cout);
    if (homol->parsed())
      return run_pipeline(with(homol_o.build(), {Stage::map, Stage::morse, Stage::homology}), std::cout);
    if (verify->parsed()) {
      const RunConfig c = verify_o.build();
      PipelineResult r = compute(c);
      for (const auto& v : r.verdicts)
        std::cout << (v.passed ? "PASS " : "FAIL ") << v.name << (v.detail.empty() ? "" : ": " + v.detail) << "\n";
      fs::create_directories(c.output_dir);
      export_report(r, c.output_dir + "/report.json");
      return r.certificates_pass() ? 0 : 2;
    }
    if (compare->parsed()) {
      const RunConfig c = compare_o.build();
      const DepthComparison cmp = compare_depths(c, depth_a, depth_b);
      const std::string text = comparison_json(cmp);
      fs::create_directories(c.output_dir);
      std::ofstream(c.output_dir + "/compare_depths.json", std::ios::binary) << text;
      std::cout << text << (cmp.agree ? "depths agree\n" : "depths disagree\n");
      return 0;
    }
    if (exp->parsed()) {
      RunConfig c = export_o.build();
      if (format == "map") c.stages = {Stage::map};
      else if (format == "dot" || format == "sets") c.stages = {Stage::map, Stage::morse};
      else if (format == "csv" || format == "svg") c.stages = {Stage::map, Stage::morse, Stage::lyapunov};
      const PipelineResult r = compute(c);
      if (format == "map") export_map(r, out_path);
      else if (format == "dot") export_dot(r, out_path);
      else if (format == "sets") export_sets(r, out_path);
      else if (format == "csv") export_csv(r, out_path);
      else if (format == "svg") export_svg(r, out_path);
      else export_report(r, out_path);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace morsecube
