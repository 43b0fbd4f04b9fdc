#include <iostream>

#include <CLI11.hpp>

#include "bqd/config.h"
#include "bqd/error.h"
#include "bqd/io.h"
#include "bqd/runner.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string backend;
  std::string series;
  int jobs = -1;
  bool quiet = false;
};

int execute(bqd::RunMode mode, const Options& opt) {
  try {
    bqd::RunConfig config = bqd::parse_config_unvalidated(opt.config.empty() ? std::string() : bqd::read_text(opt.config));
    config.mode = mode;
    if (!opt.backend.empty()) config.backend = bqd::parse_backend(opt.backend);
    if (!opt.out.empty()) config.output_dir = opt.out;
    if (opt.jobs >= 0) config.jobs = opt.jobs;
    if (!opt.series.empty()) config.fit.series = opt.series;
    config.finalize();
    bqd::run(config, opt.quiet ? nullptr : &std::cerr);
    return 0;
  } catch (const bqd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return bqd::exit_status(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bqd::exit_status(e);
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driven impurities in a trapped Bose gas: mean-field, two-body and species-CI dynamics"};
  app.require_subcommand(1);
  Options opt;

  const std::pair<const char*, const char*> verbs[] = {
      {"groundstate", "Compute the ground state and write a one-row series"},
      {"evolve", "Ground state followed by driven time evolution"},
      {"sweep", "Evolve at every driving frequency of the sweep list and fit each trajectory"},
      {"fit", "Fit the damped-oscillator model to an existing series.csv"},
      {"converge", "Run the CI basis ladder and tabulate entropy deviations"},
  };
  for (const auto& [name, help] : verbs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "Configuration file (defaults apply when omitted)");
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--backend", opt.backend, "meanfield, fewbody or ci")->check(CLI::IsMember({"meanfield", "fewbody", "ci"}));
    sub->add_option("--jobs", opt.jobs, "Concurrent sweep workers (BQD_MAX_THREADS caps this)")->check(CLI::NonNegativeNumber);
    sub->add_option("--series", opt.series, "Series file for fit");
    sub->add_flag("--quiet", opt.quiet, "No progress messages");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string verb = app.get_subcommands().front()->get_name();
  return execute(bqd::parse_mode(verb), opt);
}
