// cfcal: run the calibration pipeline stages from a scenario file.
//
//   cfcal all --config configs/default.cfg --out-dir out
//   cfcal bench --out-dir out --seed 3
//
// Exit codes: 0 success, 1 usage or configuration error, 2 missing upstream
// artifact, 3 numeric failure.

#include "cfcal/config.hpp"
#include "cfcal/errors.hpp"
#include "cfcal/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

enum Exit { kOk = 0, kUsage = 1, kMissing = 2, kNumeric = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine calibration workbench"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out_dir = "out";
  bool quiet = false;
  bool print_config = false;
  app.add_option("--config", config_path, "scenario file (defaults are used when omitted)");
  app.add_option("--seed", seed, "override the scenario seed");
  app.add_option("--threads", threads, "worker threads, 0 for all cores");
  app.add_option("--out-dir", out_dir, "directory for artifacts and the run manifest");
  app.add_flag("--quiet", quiet, "suppress progress output");

  for (const char* name : {"collect", "train", "fine", "bench", "debride", "all"}) app.add_subcommand(name);
  app.add_subcommand("config", "print the effective scenario file")->callback([&] { print_config = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    cfcal::ScenarioConfig cfg = config_path.empty() ? cfcal::ScenarioConfig{} : cfcal::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (print_config) {
      std::cout << cfcal::config_text(cfg);
      return kOk;
    }
    cfcal::pipeline::Runner runner(cfg, out_dir, quiet ? nullptr : &std::cout);
    const std::string stage = app.get_subcommands().front()->get_name();
    if (stage == "collect") runner.collect();
    else if (stage == "train") runner.train();
    else if (stage == "fine") runner.fine();
    else if (stage == "bench") runner.bench();
    else if (stage == "debride") runner.debride();
    else runner.all();
  } catch (const cfcal::ConfigError& e) {
    std::cerr << "config error: " << (config_path.empty() ? "" : config_path + ": ") << e.what() << '\n';
    return kUsage;
  } catch (const cfcal::MissingArtifact& e) {
    std::cerr << "missing artifact from stage '" << e.stage << "': " << e.what() << '\n';
    return kMissing;
  } catch (const cfcal::FormatError& e) {
    std::cerr << "unreadable artifact: " << e.what() << '\n';
    return kMissing;
  } catch (const cfcal::NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const cfcal::InvalidArgument& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kOk;
}
