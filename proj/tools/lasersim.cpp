// lasersim: batch front end for the laser master-equation lab.
//
//   lasersim <steady|evolve|sweep|stability|verify> --config FILE --out DIR
//            [--check] [--n-max N] [--dt X]
//
// Exit codes: 0 ok, 1 configuration error, 2 numerical abort,
// 3 verification failure. LASERSIM_THREADS caps the worker pool.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lasersim/experiment.hpp"
#include "lasersim/io.hpp"
#include "lasersim/kernels.hpp"

namespace {

int apply_thread_cap() {
  const char* env = std::getenv("LASERSIM_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    std::cerr << "lasersim: LASERSIM_THREADS must be a positive integer\n";
    return -1;
  }
  lasersim::kernels::set_thread_limit(static_cast<int>(n));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field laser master-equation lab"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  bool check = false;
  std::optional<int> n_max;
  std::optional<double> dt;

  for (const char* kind : {"steady", "evolve", "sweep", "stability", "verify"}) {
    CLI::App* sub = app.add_subcommand(kind, std::string("run a ") + kind + " experiment");
    sub->add_option("--config", config, "experiment JSON file")->required();
    sub->add_option("--out", out, "output directory")->required();
    sub->add_flag("--check", check, "run the invariant suite on the outputs");
    sub->add_option("--n-max", n_max, "override space.n_max");
    sub->add_option("--dt", dt, "override integrator.dt");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : lasersim::kExitConfig;
  }
  if (apply_thread_cap() != 0) return lasersim::kExitConfig;

  const std::string kind_name = app.get_subcommands().front()->get_name();
  lasersim::ExperimentConfig cfg;
  try {
    const auto kind = lasersim::experiment_kind_from_string(kind_name);
    cfg = lasersim::parse_config(lasersim::read_json_file(config), kind);
  } catch (const std::exception& e) {
    std::cerr << "lasersim: " << e.what() << "\n";
    return lasersim::exit_code_for(e);
  }

  lasersim::RunOptions opt;
  opt.check = check;
  opt.n_max = n_max;
  opt.dt = dt;
  try {
    const lasersim::RunOutcome res = lasersim::run_experiment(cfg, out, opt);
    for (const auto& m : res.messages) std::cerr << "lasersim: " << m << "\n";
    std::cout << "wrote " << res.files.size() + 1 << " files to " << out << " (exit "
              << res.exit_code << ")\n";
    return res.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "lasersim: " << e.what() << "\n";
    return lasersim::exit_code_for(e);
  }
}
