#pragma once

#include <string>
#include <vector>

#include "bqd/analysis.h"
#include "bqd/model.h"

namespace bqd {

enum class Backend { meanfield, fewbody, ci };
enum class RunMode { groundstate, evolve, sweep, fit, converge };

std::string_view to_string(Backend b);
std::string_view to_string(RunMode m);
Backend parse_backend(std::string_view name);
RunMode parse_mode(std::string_view name);

struct TimeSettings {
  double t_end = 100.0;
  /// 0 selects the backend default (1e-3 mean field and CI, 5e-3 few-body).
  double dt = 0.0;
  /// Steps between series rows.
  int stride = 100;
  /// Every k-th series row also stores a density snapshot; 0 disables snapshots.
  int snapshot_stride = 0;
};

struct BasisSettings {
  int d_bath = 3;
  int d_impurity = 6;
  /// (d_B, d_I) pairs for converge mode, smallest first.
  std::vector<std::pair<int, int>> ladder{{3, 4}, {3, 6}, {3, 8}};
};

struct FewBodySettings {
  std::size_t n = 255;
  /// Walls at +-half_width; 0 keeps the model grid's walls.
  double half_width = 0.0;
  bool double_trap = false;
};

struct SolverSettings {
  /// 0 selects the backend default (1e-10 mean field, 1e-9 Lanczos).
  double tolerance = 0.0;
  int max_iterations = 500000;
};

struct FitSettings {
  DampedParams initial{0.05, 0.3, 0.0};
  bool textbook = false;
  /// Negative: one drive period.
  double skip = -1.0;
  /// Series file used by fit mode.
  std::string series;
};

struct RunConfig {
  MixtureModel model;
  Backend backend = Backend::meanfield;
  RunMode mode = RunMode::groundstate;
  TimeSettings time;
  BasisSettings basis;
  FewBodySettings fewbody;
  SolverSettings solver;
  FitSettings fit;
  /// Density fraction defining the Thomas-Fermi edge.
  double tf_threshold = 1e-2;
  std::vector<double> sweep_omega_d{0.075, 0.3, 1.15, 1.5};
  /// 0: one worker per sweep point (subject to the thread cap).
  int jobs = 0;
  /// Reject negative couplings when set.
  bool repulsion_guard = false;
  std::string output_dir = "out";
  /// Original configuration text, echoed into manifests.
  std::string source;
  /// Whether [bath] count was given; otherwise it follows the backend (100 mean field, 10 CI).
  bool bath_count_set = false;

  /// Applies backend-dependent defaults and validates; call after command-line overrides.
  void finalize();
  double effective_dt() const;
  double effective_tolerance() const;
};

/// Parses the key = value grammar with [section] headers ('#' starts a comment). Dotted keys at top level
/// (driving.mode = pulse) are equivalent to the sectioned form. Throws ConfigError with line and column.
RunConfig parse_config(const std::string& text);
/// Same grammar without finalize(), for callers that apply overrides first.
RunConfig parse_config_unvalidated(const std::string& text);

/// Resolved configuration as text in the same grammar (round-trips through parse_config).
std::string format_config(const RunConfig& config);

} // namespace bqd
