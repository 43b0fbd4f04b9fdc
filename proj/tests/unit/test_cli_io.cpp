#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <algorithm>
#include <fstream>

#include "bqd/config.h"
#include "bqd/error.h"
#include "bqd/io.h"
#include "bqd/runner.h"

using namespace bqd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bqd_test_" + name);
  fs::remove_all(p);
  return p;
}

ObservableRecord record_at(double t) {
  ObservableRecord r;
  r.time = t;
  return r;
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

const char* kTinyFewBody = R"(backend = fewbody
[grid]
x_min = -10
x_max = 10
n = 63
[fewbody]
n = 31
[driving]
mode = continuous
omega_d = 1.5
amplitude = 2
[time]
t_end = 20
dt = 0.01
stride = 20
)";

} // namespace

TEST_CASE("empty configuration yields the documented defaults") {
  const RunConfig c = parse_config("");
  CHECK(c.backend == Backend::meanfield);
  CHECK(c.mode == RunMode::groundstate);
  CHECK(c.model.bath.omega == 0.3);
  CHECK(c.model.impurity.omega == 0.3);
  CHECK(c.model.driving.amplitude == 20.0);
  CHECK(c.model.bath.g_intra == 0.5);
  CHECK(c.model.impurity.g_intra == 0.4);
  CHECK(c.model.g_bi == 0.2);
  CHECK(c.model.bath.count == 100);
  CHECK(c.model.impurity.count == 2);
  CHECK(c.model.grid.n == 500);
  CHECK(c.effective_dt() == 1e-3);

  const RunConfig ci = parse_config("backend = ci\n");
  CHECK(ci.model.bath.count == 10);
  const RunConfig explicit_count = parse_config("backend = ci\n[bath]\ncount = 4\n");
  CHECK(explicit_count.model.bath.count == 4);
}

TEST_CASE("dotted and sectioned keys are equivalent") {
  const RunConfig dotted = parse_config("driving.mode = pulse\ndriving.omega_d = 0.3\n");
  const RunConfig sectioned = parse_config("[driving]\nmode = pulse\nomega_d = 0.3\n");
  CHECK(dotted.model.driving.mode == DriveMode::pulse);
  CHECK(pulse_end(dotted.model.driving) == doctest::Approx(41.89).epsilon(1e-4));
  CHECK(format_config(dotted) == format_config(sectioned));
  CHECK(parse_config("g_bb = 0.7\n").model.bath.g_intra == 0.7);
  CHECK(parse_config("g_ii = 0.1\n").model.impurity.g_intra == 0.1);
}

TEST_CASE("repulsion guard") {
  CHECK(parse_config("g_bi = -0.1\n").model.g_bi == -0.1);
  CHECK_THROWS_WITH_AS(parse_config("g_bi = -0.1\nrepulsion_guard = true\n"), doctest::Contains("g_bi"), ConfigError);
}

TEST_CASE("parse and validation errors carry positions and key names") {
  CHECK(config_error_line("backend = ci\n\n[grid]\nwidth = 3\n") == 4);
  try {
    parse_config("[grid]\n  n = many\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 7);
    CHECK(std::string(e.what()).find("grid.n") != std::string::npos);
  }
  CHECK(config_error_line("[nowhere]\n") == 1);
  CHECK(config_error_line("# comment\nbackend\n") == 2);
  CHECK(config_error_line("mode = sideways\n") == 1);
  CHECK(config_error_line("[time]\ndt = 0.1\ndt = 0.2\n") == 3);
  CHECK(config_error_line("[grid\n") == 1);
  CHECK(config_error_line("[time]\ndriving.mode = pulse\n") == 2);
  CHECK(config_error_line("[bath]\ncount = 0\n") == 2);
  CHECK_THROWS_WITH_AS(parse_config("[grid]\nx_min = 5\nx_max = 1\n"), doctest::Contains("grid"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("driving.mode = continuous\n"), doctest::Contains("driving.omega_d"), ConfigError);
  CHECK_THROWS_AS(parse_config("mode = converge\nbackend = ci\n[basis]\nladder = 3:6\n"), ConfigError);
}

TEST_CASE("resolved configuration round-trips") {
  const RunConfig c = parse_config(
      "backend = ci\nmode = sweep\n[sweep]\nomega_d = 0.5, 1.25\n[basis]\nladder = 2:4, 3:6\n[time]\nt_end = 12.5\n"
      "[fit]\ntextbook = true\n# trailing comment\n");
  const RunConfig again = parse_config(format_config(c));
  CHECK(format_config(again) == format_config(c));
  CHECK(again.sweep_omega_d == std::vector<double>{0.5, 1.25});
  CHECK(again.basis.ladder.size() == 2);
  CHECK(again.fit.textbook);
  CHECK(again.time.t_end == 12.5);
}

TEST_CASE("series.csv layout") {
  ObservableSeries s;
  ObservableRecord r = record_at(0.0);
  r.x_impurity = 0.1;
  r.e_impurity = 1.0 / 3.0;
  s.append(r);
  ObservableRecord q = record_at(0.5);
  q.x_bath = -2.5e-17;
  q.entropy = 0.0;
  s.append(q);
  const std::string text = format_series_csv(s);
  CHECK(text ==
        "t,X_B,X_I,E_B,E_I,E_BI,S_VN,F_B,F_I\n"
        "0,,0.10000000000000001,,0.33333333333333331,,,,\n"
        "0.5,-2.4999999999999999e-17,,,,,0,,\n");
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  write_series_csv(dir / "series.csv", s);
  const ObservableSeries back = read_series_csv(dir / "series.csv");
  REQUIRE(back.size() == 2);
  CHECK(*back.records()[0].e_impurity == 1.0 / 3.0);
  CHECK_FALSE(back.records()[0].x_bath.has_value());
  CHECK(format_series_csv(back) == text);
  write_text(dir / "bad.csv", "t,X\n1,2\n");
  CHECK_THROWS_AS(read_series_csv(dir / "bad.csv"), IoError);
}

TEST_CASE("BQD1 byte layout") {
  SnapshotArchive a;
  a.times = {0.0, 1.5};
  a.nodes = {-1.0, 0.0, 1.0};
  a.n_species = 2;
  for (int i = 0; i < 12; ++i) a.densities.push_back(0.25 * i);
  const fs::path dir = scratch("bqd");
  fs::create_directories(dir);
  write_bqd1(dir / "d.bqd", a);

  std::ifstream in(dir / "d.bqd", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 4 + 3 * 8 + (2 + 3 + 12) * 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "BQD1");
  CHECK(bytes[4] == 2);
  for (int i = 5; i < 12; ++i) CHECK(bytes[static_cast<std::size_t>(i)] == 0);
  CHECK(bytes[12] == 3);
  CHECK(bytes[20] == 2);
  // 1.5 = 0x3FF8000000000000, little-endian.
  const std::size_t t1 = 28 + 8;
  CHECK(bytes[t1 + 7] == 0x3F);
  CHECK(bytes[t1 + 6] == 0xF8);
  CHECK(bytes[t1] == 0);

  const SnapshotArchive b = read_bqd1(dir / "d.bqd");
  CHECK(b.times == a.times);
  CHECK(b.nodes == a.nodes);
  CHECK(b.densities == a.densities);
  CHECK(b.at(1, 2, 1) == a.densities[(1 * 3 + 2) * 2 + 1]);

  write_text(dir / "junk.bqd", "BQD1");
  CHECK_THROWS_AS(read_bqd1(dir / "junk.bqd"), IoError);
  CHECK_THROWS_AS(read_bqd1(dir / "missing.bqd"), IoError);
}

TEST_CASE("worker count honours the thread cap") {
  unsetenv("BQD_MAX_THREADS");
  CHECK(worker_count(0, 4) == 4);
  CHECK(worker_count(2, 4) == 2);
  CHECK(worker_count(8, 3) == 3);
  setenv("BQD_MAX_THREADS", "1", 1);
  CHECK(worker_count(0, 4) == 1);
  setenv("BQD_MAX_THREADS", "junk", 1);
  CHECK(worker_count(0, 4) == 4);
  unsetenv("BQD_MAX_THREADS");
}

TEST_CASE("exit status mapping") {
  CHECK(exit_status(ConfigError("x")) == 1);
  CHECK(exit_status(DomainError("x")) == 1);
  CHECK(exit_status(ConvergenceError("x")) == 2);
  CHECK(exit_status(IoError("x")) == 3);
}

TEST_CASE("mean-field groundstate run records the Thomas-Fermi radius") {
  RunConfig c = parse_config("[grid]\nx_min = -25\nx_max = 25\nn = 250\n");
  c.output_dir = scratch("gs").string();
  const nlohmann::json m = run(c);
  CHECK(m["results"]["tf_radius"].get<double>() > 8.0);
  CHECK(m["results"]["tf_radius"].get<double>() < 11.0);
  CHECK(fs::exists(fs::path(c.output_dir) / "series.csv"));
  const nlohmann::json disk = nlohmann::json::parse(read_text(fs::path(c.output_dir) / "manifest.json"));
  CHECK(disk["code_version"] == std::string(code_version()));
  // The manifest alone re-creates the job.
  const RunConfig replay = parse_config(disk["config"].get<std::string>());
  CHECK(format_config(replay) == format_config(c));
}

TEST_CASE("evolve is byte-reproducible and writes snapshots") {
  RunConfig c = parse_config(std::string(kTinyFewBody) + "snapshot_stride = 5\n");
  c.mode = RunMode::evolve;
  const fs::path first = scratch("evolve_a"), second = scratch("evolve_b");
  c.output_dir = first.string();
  const nlohmann::json m = run(c);
  c.output_dir = second.string();
  run(c);
  CHECK(read_text(first / "series.csv") == read_text(second / "series.csv"));
  CHECK(read_text(first / "densities.bqd") == read_text(second / "densities.bqd"));
  CHECK(m["results"]["max_norm_drift"].get<double>() < 1e-8);

  const ObservableSeries s = read_series_csv(first / "series.csv");
  CHECK(s.size() == 101);
  CHECK(s.records().back().time == doctest::Approx(20.0));
  const SnapshotArchive a = read_bqd1(first / "densities.bqd");
  CHECK(a.times.size() == 21);
  CHECK(a.n_species == 1);
  CHECK(a.nodes.size() == 31);
  double integral = 0.0;
  for (std::size_t j = 0; j < a.nodes.size(); ++j) integral += a.at(20, j, 0) * (a.nodes[1] - a.nodes[0]);
  CHECK(integral == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("sweep writes one run per frequency and a fit table; fit mode reads a series") {
  RunConfig c = parse_config(std::string(kTinyFewBody) + "[sweep]\nomega_d = 0.075, 0.3, 1.15, 1.5\njobs = 2\n");
  c.mode = RunMode::sweep;
  const fs::path root = scratch("sweep");
  c.output_dir = root.string();
  const nlohmann::json m = run(c);
  for (const char* dir : {"omega_d_0.075", "omega_d_0.3", "omega_d_1.15", "omega_d_1.5"}) {
    CHECK(fs::exists(root / dir / "series.csv"));
    CHECK(fs::exists(root / dir / "manifest.json"));
  }
  CHECK(m["runs"].size() == 4);
  const std::string table = read_text(root / "fits.tsv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);
  CHECK(table.rfind("omega_d\tlambda", 0) == 0);

  RunConfig f = parse_config("mode = fit\ndriving.mode = continuous\ndriving.omega_d = 1.5\ndriving.amplitude = 2\n");
  f.fit.series = (root / "omega_d_1.5" / "series.csv").string();
  f.output_dir = scratch("fit").string();
  const nlohmann::json fm = run(f);
  CHECK(fm["results"]["fit"]["omega_eff"].get<double>() > 0.0);
  CHECK(fs::exists(fs::path(f.output_dir) / "fits.tsv"));

  f.fit.series = (root / "nothing.csv").string();
  CHECK_THROWS_AS(run(f), IoError);
}

TEST_CASE("converge writes the entropy deviation table") {
  RunConfig c = parse_config(
      "backend = ci\nmode = converge\n[grid]\nx_min = -16\nx_max = 16\nn = 127\n[bath]\ncount = 3\n"
      "[driving]\nmode = continuous\nomega_d = 1.0\namplitude = 2\n[time]\nt_end = 5\ndt = 0.01\nstride = 50\n"
      "[basis]\nladder = 2:3, 2:4, 2:5\n");
  const fs::path root = scratch("converge");
  c.output_dir = root.string();
  const nlohmann::json m = run(c);
  CHECK(m["results"]["pairs"].size() == 2);
  const std::string table = read_text(root / "converge.tsv");
  CHECK(table.rfind("smaller\tlarger\tmax_delta_s", 0) == 0);
  CHECK(fs::exists(root / "basis_2x5" / "series.csv"));
}

TEST_CASE("unwritable output directory is an I/O failure") {
  RunConfig c = parse_config(kTinyFewBody);
  const fs::path blocker = scratch("blocker");
  write_text(blocker, "a file, not a directory");
  c.output_dir = (blocker / "sub").string();
  c.mode = RunMode::groundstate;
  try {
    run(c);
    FAIL("expected an I/O failure");
  } catch (const std::exception& e) {
    CHECK(exit_status(e) == 3);
  }
}
