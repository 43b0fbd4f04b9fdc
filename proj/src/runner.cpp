#include "bqd/runner.h"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "bqd/error.h"
#include "bqd/io.h"

namespace bqd {

namespace {

using nlohmann::json;

/// Collects records and snapshots while tracking norm drift and post-pulse energy drift.
class Recorder {
public:
  Recorder(const RunConfig& config, double bath_reference) : config_(config), reference_(bath_reference) {
    const auto& d = config.model.driving;
    if (d.mode == DriveMode::pulse) conserved_after_ = pulse_end(d);
    else if (d.mode == DriveMode::none) conserved_after_ = 0.0;
  }

  void add(const ObservableRecord& r, double norm_drift, const std::function<DensitySnapshot()>& snapshot) {
    const int k = config_.time.snapshot_stride;
    if (k > 0 && rows_ % static_cast<std::size_t>(k) == 0) series_.append_snapshot(snapshot());
    series_.append(r);
    ++rows_;
    norm_drift_ = std::max(norm_drift_, norm_drift);
    if (conserved_after_ && r.time >= *conserved_after_ - 1e-12) {
      const double e = reference_ + r.e_bath.value_or(0.0) + r.e_impurity.value_or(0.0) + r.e_interspecies.value_or(0.0);
      if (!energy_start_) energy_start_ = e;
      energy_drift_ = std::max(energy_drift_, std::abs(e - *energy_start_) / std::max(std::abs(*energy_start_), 1e-300));
    }
  }

  void summarize(json& results) const {
    results["max_norm_drift"] = norm_drift_;
    if (conserved_after_ && energy_start_) {
      results["energy_drift_window_start"] = *conserved_after_;
      results["max_energy_drift"] = energy_drift_;
    } else {
      results["max_energy_drift"] = nullptr;
    }
  }

  ObservableSeries take() { return std::move(series_); }

private:
  const RunConfig& config_;
  double reference_;
  ObservableSeries series_;
  std::size_t rows_ = 0;
  double norm_drift_ = 0.0;
  std::optional<double> conserved_after_;
  std::optional<double> energy_start_;
  double energy_drift_ = 0.0;
};

Simulation simulate_meanfield(const RunConfig& config, bool evolve) {
  const MixtureModel& model = config.model;
  MFGroundStateOptions options;
  options.tolerance = config.effective_tolerance();
  options.max_iterations = config.solver.max_iterations;
  MFGroundStateInfo info;
  MFState state = mf_ground_state(model.undriven(), options, &info);
  const CIEnergyParts parts = energy_parts(state, model, 0.0);

  Simulation sim;
  sim.nodes = model.grid.nodes();
  const Eigen::VectorXd bath_density =
      static_cast<double>(model.bath.count) * state.bath.cwiseAbs2();
  json& res = sim.results;
  res["ground_energy"] = parts.total();
  res["chemical_potential_bath"] = info.chemical_potential_bath;
  res["chemical_potential_impurity"] = info.chemical_potential_impurity;
  res["ground_iterations"] = info.iterations;
  res["ground_residual"] = info.residual;
  res["tf_radius"] = tf_radius(bath_density, sim.nodes, config.tf_threshold);
  res["tf_threshold"] = config.tf_threshold;
  res["miscibility"] = std::string(to_string(miscibility_check(model.bath.g_intra, model.impurity.g_intra, model.g_bi)));

  const double dx = model.grid.spacing();
  Recorder rec(config, parts.bath);
  auto sample = [&](const MFState& s) {
    const double drift = std::max(std::abs(s.bath.squaredNorm() * dx - 1.0), std::abs(s.impurity.squaredNorm() * dx - 1.0));
    rec.add(observe(s, model, parts.bath), drift, [&] {
      return DensitySnapshot{s.time,
                             {static_cast<double>(model.bath.count) * s.bath.cwiseAbs2(),
                              static_cast<double>(model.impurity.count) * s.impurity.cwiseAbs2()}};
    });
  };
  if (evolve) mf_propagate(state, model, config.time.t_end, config.effective_dt(), config.time.stride, sample);
  else sample(state);
  rec.summarize(res);
  sim.series = rec.take();
  return sim;
}

FewBodyParams fewbody_setup(const RunConfig& config) {
  FewBodyParams p = fewbody_params(config.model, config.fewbody.n);
  if (config.fewbody.half_width > 0.0) p.grid = GridSpec{-config.fewbody.half_width, config.fewbody.half_width, config.fewbody.n};
  p.double_trap = config.fewbody.double_trap;
  p.validate();
  return p;
}

Simulation simulate_fewbody(const RunConfig& config, bool evolve) {
  const FewBodyParams params = fewbody_setup(config);
  FewBodyGroundStateInfo info;
  TwoBodyState state = fb_ground_state(params, config.effective_tolerance(), &info);

  Simulation sim;
  sim.nodes = params.grid.nodes();
  json& res = sim.results;
  res["ground_energy"] = info.energy;
  res["ground_residual"] = info.residual;
  res["ground_matvecs"] = info.matvecs;

  Recorder rec(config, 0.0);
  auto sample = [&](const TwoBodyState& s) {
    rec.add(observe(s, params), std::abs(s.norm() - 1.0), [&] { return DensitySnapshot{s.time, {fb_density(s)}}; });
  };
  if (evolve) fb_propagate(state, params, config.time.t_end, config.effective_dt(), config.time.stride, sample);
  else sample(state);
  rec.summarize(res);
  sim.series = rec.take();
  return sim;
}

Simulation simulate_ci(const RunConfig& config, bool evolve) {
  const MixtureModel& model = config.model;
  const OrbitalBasis basis = trap_orbitals(model, config.basis.d_bath, config.basis.d_impurity);
  const CIHamiltonian hamiltonian(model, basis);
  CIGroundStateInfo info;
  CIState state = ci_ground_state(hamiltonian, config.effective_tolerance(), &info);
  const CIEnergyParts parts = hamiltonian.energy_parts(state.coeffs, 0.0);

  Simulation sim;
  sim.nodes = model.grid.nodes();
  json& res = sim.results;
  res["ground_energy"] = info.energy;
  res["ground_residual"] = info.residual;
  res["ground_matvecs"] = info.matvecs;
  res["dimension_bath"] = hamiltonian.dim(Species::bath);
  res["dimension_impurity"] = hamiltonian.dim(Species::impurity);
  res["orbital_gram_error"] = std::max(basis.gram_error(Species::bath), basis.gram_error(Species::impurity));

  Recorder rec(config, parts.bath);
  auto sample = [&](const CIState& s) {
    rec.add(observe(s, hamiltonian, parts.bath), std::abs(s.norm() - 1.0), [&] {
      return DensitySnapshot{s.time,
                             {density_matrix(s, hamiltonian, Species::bath).density(),
                              density_matrix(s, hamiltonian, Species::impurity).density()}};
    });
  };
  if (evolve) ci_propagate(state, hamiltonian, config.time.t_end, config.effective_dt(), config.time.stride, sample);
  else sample(state);
  rec.summarize(res);
  sim.series = rec.take();
  return sim;
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
}

json manifest_base(const RunConfig& config) {
  json m;
  m["code_version"] = std::string(code_version());
  m["backend"] = std::string(to_string(config.backend));
  m["mode"] = std::string(to_string(config.mode));
  m["config"] = format_config(config);
  m["source"] = config.source;
  const auto& d = config.model.driving;
  if (d.mode == DriveMode::pulse) m["pulse_end"] = pulse_end(d);
  return m;
}

void write_manifest(const std::filesystem::path& dir, const json& manifest) {
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

/// Writes series.csv (+ densities.bqd) and a manifest for one simulation.
json write_run(const std::filesystem::path& dir, const RunConfig& config, const Simulation& sim) {
  ensure_directory(dir);
  json m = manifest_base(config);
  json artifacts = json::array({"series.csv"});
  write_series_csv(dir / "series.csv", sim.series);
  if (!sim.series.snapshots().empty()) {
    write_bqd1(dir / "densities.bqd", make_archive(sim.series, sim.nodes));
    artifacts.push_back("densities.bqd");
  }
  m["artifacts"] = artifacts;
  m["results"] = sim.results;
  write_manifest(dir, m);
  return m;
}

std::string frequency_label(double w) { return fmt::format("omega_d_{:g}", w); }

Eigen::VectorXd column(const ObservableSeries& s, std::optional<double> ObservableRecord::*field,
                       const char* name) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& x = s.records()[i].*field;
    if (!x) throw DomainError(fmt::format("series has no {} values", name));
    v(static_cast<Eigen::Index>(i)) = *x;
  }
  return v;
}

Eigen::VectorXd times(const ObservableSeries& s) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) t(static_cast<Eigen::Index>(i)) = s.records()[i].time;
  return t;
}

std::string fit_row(double omega_d, const FitResult& f) {
  return fmt::format("{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{}\tok\n", omega_d, f.params.lambda,
                     f.params.omega_eff, f.params.phase, f.residual_norm, f.conditioning, f.rank_deficient ? 1 : 0);
}

constexpr const char* kFitHeader = "omega_d\tlambda\tomega_eff\tphase\tresidual_norm\tconditioning\trank_deficient\tstatus\n";

json fit_json(const FitResult& f) {
  return {{"lambda", f.params.lambda},         {"omega_eff", f.params.omega_eff},
          {"phase", f.params.phase},           {"residual_norm", f.residual_norm},
          {"conditioning", f.conditioning},    {"rank_deficient", f.rank_deficient},
          {"iterations", f.iterations},        {"samples", f.samples}};
}

void say(std::ostream* log, const std::string& text) {
  static std::mutex m;
  if (!log) return;
  std::lock_guard lock(m);
  *log << text << std::endl;
}

json run_sweep(const RunConfig& config, std::ostream* log) {
  const std::filesystem::path root = config.output_dir;
  ensure_directory(root);
  const auto& omegas = config.sweep_omega_d;
  std::vector<std::optional<FitResult>> fits(omegas.size());
  std::vector<std::string> failures(omegas.size());
  const int workers = worker_count(config.jobs, omegas.size());
  say(log, fmt::format("sweep: {} points on {} worker(s)", omegas.size(), workers));

  parallel_for(omegas.size(), workers, [&](std::size_t i) {
    RunConfig point = config;
    point.mode = RunMode::evolve;
    point.model.driving.omega_d = omegas[i];
    if (point.model.driving.mode == DriveMode::none) point.model.driving.mode = DriveMode::continuous;
    point.output_dir = (root / frequency_label(omegas[i])).string();
    Simulation sim = simulate(point, true);
    try {
      fits[i] = fit_series(sim.series, point);
      sim.results["fit"] = fit_json(*fits[i]);
    } catch (const Error& e) {
      failures[i] = e.what();
      sim.results["fit"] = {{"error", e.what()}};
    }
    write_run(point.output_dir, point, sim);
    say(log, fmt::format("sweep: omega_d = {:g} done", omegas[i]));
  });

  std::string table = kFitHeader;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (fits[i]) table += fit_row(omegas[i], *fits[i]);
    else table += fmt::format("{:.17g}\t\t\t\t\t\t\tfailed\n", omegas[i]);
  }
  write_text(root / "fits.tsv", table);

  json m = manifest_base(config);
  json runs = json::array();
  for (double w : omegas) runs.push_back(frequency_label(w));
  m["runs"] = runs;
  m["artifacts"] = json::array({"fits.tsv"});
  return m;
}

json run_converge(const RunConfig& config, std::ostream* log) {
  if (config.backend != Backend::ci) throw ConfigError("converge mode requires backend = ci");
  const std::filesystem::path root = config.output_dir;
  ensure_directory(root);
  const auto& ladder = config.basis.ladder;
  std::vector<ObservableSeries> series(ladder.size());
  const int workers = worker_count(config.jobs, ladder.size());
  say(log, fmt::format("converge: {} bases on {} worker(s)", ladder.size(), workers));

  auto label = [&](std::size_t i) { return fmt::format("basis_{}x{}", ladder[i].first, ladder[i].second); };
  parallel_for(ladder.size(), workers, [&](std::size_t i) {
    RunConfig point = config;
    point.mode = RunMode::evolve;
    point.basis.d_bath = ladder[i].first;
    point.basis.d_impurity = ladder[i].second;
    point.output_dir = (root / label(i)).string();
    Simulation sim = simulate(point, true);
    write_run(point.output_dir, point, sim);
    series[i] = std::move(sim.series);
    say(log, fmt::format("converge: {} done", label(i)));
  });

  // Each pair compares a basis against the next larger one, which serves as the reference.
  std::string table = "smaller\tlarger\tmax_delta_s\tvalid_points\n";
  json pairs = json::array();
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
    const ConvergenceDelta d = convergence_delta(column(series[i + 1], &ObservableRecord::entropy, "S_VN"),
                                                 column(series[i], &ObservableRecord::entropy, "S_VN"));
    const auto valid = static_cast<std::size_t>(std::count(d.valid.begin(), d.valid.end(), true));
    table += fmt::format("{}:{}\t{}:{}\t{:.17g}\t{}\n", ladder[i].first, ladder[i].second, ladder[i + 1].first,
                         ladder[i + 1].second, d.max, valid);
    pairs.push_back({{"smaller", label(i)}, {"larger", label(i + 1)}, {"max_delta_s", d.max}});
  }
  write_text(root / "converge.tsv", table);

  json m = manifest_base(config);
  json runs = json::array();
  for (std::size_t i = 0; i < ladder.size(); ++i) runs.push_back(label(i));
  m["runs"] = runs;
  m["results"] = {{"pairs", pairs}};
  m["artifacts"] = json::array({"converge.tsv"});
  return m;
}

json run_fit(const RunConfig& config) {
  if (config.fit.series.empty()) throw ConfigError("fit.series: fit mode needs a series file");
  if (!(config.model.driving.omega_d > 0.0)) throw ConfigError("driving.omega_d: fit mode needs the drive frequency");
  const ObservableSeries series = read_series_csv(config.fit.series);
  const FitResult f = fit_series(series, config);
  const std::filesystem::path root = config.output_dir;
  ensure_directory(root);
  write_text(root / "fits.tsv", std::string(kFitHeader) + fit_row(config.model.driving.omega_d, f));
  json m = manifest_base(config);
  m["results"] = {{"fit", fit_json(f)}};
  m["artifacts"] = json::array({"fits.tsv"});
  return m;
}

} // namespace

Simulation simulate(const RunConfig& config, bool evolve) {
  switch (config.backend) {
  case Backend::meanfield: return simulate_meanfield(config, evolve);
  case Backend::fewbody: return simulate_fewbody(config, evolve);
  case Backend::ci: return simulate_ci(config, evolve);
  }
  throw DomainError("unknown backend");
}

int worker_count(int requested, std::size_t tasks) {
  long cap = requested > 0 ? requested : static_cast<long>(tasks);
  if (const char* env = std::getenv("BQD_MAX_THREADS")) {
    char* end = nullptr;
    const long limit = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && limit > 0) cap = std::min(cap, limit);
  }
  cap = std::min<long>(cap, static_cast<long>(std::max<std::size_t>(tasks, 1)));
  return static_cast<int>(std::max(cap, 1L));
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

int exit_status(const std::exception& error) {
  if (dynamic_cast<const ConvergenceError*>(&error)) return 2;
  if (dynamic_cast<const IoError*>(&error) || dynamic_cast<const std::filesystem::filesystem_error*>(&error)) return 3;
  return 1;
}

FitResult fit_series(const ObservableSeries& series, const RunConfig& config) {
  const Eigen::VectorXd t = times(series);
  const Eigen::VectorXd x = column(series, &ObservableRecord::x_impurity, "X_I");
  if (t.size() == 0) throw DomainError("empty series");
  DampedDrive drive{config.model.driving.amplitude, config.model.driving.omega_d, x(0)};
  FitOptions options;
  options.initial = config.fit.initial;
  options.textbook = config.fit.textbook;
  options.skip = config.fit.skip;
  return fit_damped(t, x, drive, options);
}

json run(const RunConfig& config, std::ostream* log) {
  const std::filesystem::path root = config.output_dir;
  json manifest;
  switch (config.mode) {
  case RunMode::groundstate:
  case RunMode::evolve: {
    const bool evolve = config.mode == RunMode::evolve;
    say(log, fmt::format("{} {}", to_string(config.backend), to_string(config.mode)));
    manifest = write_run(root, config, simulate(config, evolve));
    return manifest;
  }
  case RunMode::sweep: manifest = run_sweep(config, log); break;
  case RunMode::converge: manifest = run_converge(config, log); break;
  case RunMode::fit: manifest = run_fit(config); break;
  }
  write_manifest(root, manifest);
  return manifest;
}

} // namespace bqd
