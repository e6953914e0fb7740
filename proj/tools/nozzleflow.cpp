// nozzleflow: solves and studies subsonic potential flow through a nozzle.
//
//   nozzleflow solve|sweep|decay-study|optimality-study|verify <config> [--sequential] [--out DIR]
//   nozzleflow diff <field A> <field B> [--window Z0 Z1]
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <CLI11.hpp>
#include <iostream>

#include "nozzleflow/field_io.hpp"
#include "nozzleflow/run.hpp"

namespace {

int exit_code(nozzle::Errc code) {
  using nozzle::Errc;
  switch (code) {
    case Errc::config_error:
    case Errc::invalid_argument:
    case Errc::negative_input:
    case Errc::inadmissible:
    case Errc::pinched_domain:
    case Errc::station_out_of_range:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subsonic potential flow through a nozzle with an obstacle"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool sequential = false;
  for (const char* mode : {"solve", "sweep", "decay-study", "optimality-study", "verify"}) {
    auto* sub = app.add_subcommand(mode, std::string("run the ") + mode + " pipeline");
    sub->add_option("config", config_path, "configuration file (section.key = value lines)")->required();
    sub->add_flag("--sequential", sequential, "single-threaded, bit-reproducible execution");
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
  }
  std::string field_a, field_b;
  auto* diff = app.add_subcommand("diff", "compare two field dumps on their shared lattice points");
  diff->add_option("a", field_a, "first field dump")->required();
  diff->add_option("b", field_b, "second field dump")->required();
  std::vector<double> window;
  diff->add_option("--window", window, "compare only points with Z0 <= x3 <= Z1")->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (diff->parsed()) {
      std::optional<std::pair<double, double>> w;
      if (window.size() == 2) w = std::pair{window[0], window[1]};
      const auto d = nozzle::diff_fields(nozzle::read_field_dump(field_a), nozzle::read_field_dump(field_b), w);
      std::cout.precision(17);
      std::cout << "[diff]\nshared_points = " << d.shared << "\nphi_max = " << d.phi_max
                << "\nphi_rms = " << d.phi_rms << "\ngrad_max = " << d.grad_max << "\ngrad_rms = " << d.grad_rms
                << '\n';
      return 0;
    }
    nozzle::RunConfig cfg = nozzle::load_config(config_path);
    for (auto* sub : app.get_subcommands()) cfg.mode = *nozzle::parse_mode(sub->get_name());
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (sequential) cfg.threads = 1;
    const nozzle::RunManifest m = nozzle::run(cfg);
    m.report.write(std::cout);
    std::cout << "\noutput written to " << cfg.output_dir.string() << '\n';
    return m.passed ? 0 : 1;
  } catch (const nozzle::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
