#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "morsecube/combdyn.hpp"
#include "morsecube/cubgrid.hpp"
#include "morsecube/flowsim.hpp"
#include "morsecube/homol.hpp"
#include "morsecube/lyap.hpp"
#include "morsecube/morsegraph.hpp"

namespace morsecube {

enum class Stage { map, morse, lyapunov, homology };

std::string stage_name(Stage s);
Stage parse_stage(const std::string& name);

struct RunConfig {
  std::string system = "circle-attractor";  // builtin name or polynomial field file
  std::size_t dim = 2;                       // builtins only; a polynomial file sets its own
  std::vector<double> lower;                 // empty: -2 on every axis
  std::vector<double> upper;                 // empty: +2 on every axis
  std::vector<std::size_t> depth = {64};     // one entry for all axes, or one per axis
  double tau = 2.0;
  double h = 1e-3;
  std::size_t samples_per_axis = 3;
  std::size_t bloat_rings = 1;
  double lambda = 1.0;
  std::optional<double> t_max;  // default 50 tau
  Field field = Field::Z2;
  std::string output_dir = "morsecube-out";
  std::vector<Stage> stages = {Stage::map, Stage::morse, Stage::lyapunov, Stage::homology};
  std::size_t dini_samples = 200;
  std::uint64_t seed = 1;

  double horizon() const { return t_max.value_or(50.0 * tau); }
  bool runs(Stage s) const;
  /// Throws Error naming the offending field.
  void validate() const;
};

/// Reads a JSON object; unknown keys and ill-typed values are errors.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

VectorField load_system(const RunConfig& cfg);
CubicalGrid make_grid(const RunConfig& cfg, std::size_t field_dim);

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Everything the pipeline computed; absent members belong to stages that did not run.
struct PipelineResult {
  RunConfig config;
  std::optional<VectorField> field;
  std::optional<CubicalGrid> grid;
  std::optional<OuterMap> map;
  std::optional<MorseGraph> graph;
  std::optional<MorseFiltration> filtration;
  std::shared_ptr<StrictMorseLyapunov> lyapunov;
  std::optional<LyapunovField> values;
  std::optional<DiniReport> dini;
  std::optional<CriticalGroupTable> critical;
  std::optional<MorseReport> report;
  std::optional<MorseReport> quotient_report;
  std::optional<BettiVector> basin_betti;
  std::optional<BettiVector> quotient_basin_betti;
  std::vector<Verdict> verdicts;

  bool certificates_pass() const;
};

/// Runs the enabled stages in order. Stage errors are rethrown as Error prefixed with the stage name.
PipelineResult compute(const RunConfig& cfg, std::ostream* log = nullptr);

/// compute() plus every artifact of the completed stages in cfg.output_dir.
/// Returns 0 when all certificates pass and 2 otherwise.
int run_pipeline(const RunConfig& cfg, std::ostream& out, PipelineResult* result = nullptr);

void export_map(const PipelineResult& r, const std::string& path);
void export_dot(const PipelineResult& r, const std::string& path);
void export_sets(const PipelineResult& r, const std::string& dir);
void export_csv(const PipelineResult& r, const std::string& path);
/// Planar grids of depth at most 64 per axis.
void export_svg(const PipelineResult& r, const std::string& path);
void export_report(const PipelineResult& r, const std::string& path);

std::string report_json(const PipelineResult& r);
std::string svg_heatmap(const PipelineResult& r);
void print_table(const PipelineResult& r, std::ostream& out);

struct DepthSummary {
  std::size_t depth = 0;
  std::size_t components = 0;
  std::vector<long long> morse_numbers;
  std::vector<std::size_t> betti_numbers;
  std::string error;  // homology failure at this depth, if any
};

struct DepthComparison {
  DepthSummary a;
  DepthSummary b;
  bool agree = false;
};

/// Map, Morse graph and homology at two depths. Disagreement is reported, not raised.
DepthComparison compare_depths(const RunConfig& cfg, std::size_t depth_a, std::size_t depth_b);
std::string comparison_json(const DepthComparison& c);

/// Entry point of the command-line tool; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace morsecube
