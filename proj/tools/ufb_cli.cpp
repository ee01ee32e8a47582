#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <ufb/ufb.hpp>

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, numerical_failure = 3, structure_error = 4 };

struct Globals {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string log_level = "info";
};

ufb::RunConfig load(const Globals &g) {
  ufb::RunConfig c = g.config.empty() ? ufb::RunConfig{} : ufb::load_config(g.config);
  if (g.seed)
    c.seed = *g.seed;
  c.solver.threads = ufb::default_threads();
  return c;
}

void summarize(const ufb::json &r) {
  const std::string cmd = r.value("command", "");
  if (cmd == "solve")
    spdlog::info("solve: residual {:.3e}, {} stages", r["residual"].get<double>(),
                 r["stages"].size());
  else if (cmd == "classify")
    spdlog::info("classify: {} singular point(s)", r["points"].size());
  else if (cmd == "flatness")
    spdlog::info("flatness: {} radii", r["curve"].size());
  else if (cmd == "blowup")
    spdlog::info("blowup: kappa {:.6f} (harmonic {:.6f}), doubling {}",
                 r["blowup"]["kappa"].get<double>(),
                 r["sector"]["kappa_harmonic"].get<double>(),
                 r["doubling"]["pass"].get<bool>() ? "pass" : "fail");
  else if (cmd == "verify")
    spdlog::info("verify {}: {}", r["verifier"].get<std::string>(),
                 r["pass"].get<bool>() ? "pass" : "fail");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Free-boundary solver and analysis toolkit"};
  app.set_version_flag("--version", ufb::version_string);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "Random seed (overrides the config)");
  app.add_option("--threads", g.threads, "Worker threads (falls back to UFB_THREADS)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::string field;
  auto *solve = app.add_subcommand("solve", "Maximal-solution approximation on a grid");
  auto *classify = app.add_subcommand("classify", "Classify singular free-boundary points");
  classify->add_option("--field", field, "Input UFBG dump (overrides the config)");
  auto *flat = app.add_subcommand("flatness", "Flatness curve h(r, x0)");
  flat->add_option("--field", field, "Input UFBG dump (overrides the config)");
  auto *blow = app.add_subcommand("blowup", "Cone solution, doubling check and blow-up exponent");
  ufb::BlowupOverrides bo;
  blow->add_option("--aperture", bo.aperture, "Sector aperture in radians");
  blow->add_option("--lambda", bo.lambda, "Lower ellipticity constant");
  blow->add_option("--Lambda", bo.Lambda, "Upper ellipticity constant");
  blow->add_option("--controls", bo.controls, "JSON file with a list of control matrices");
  blow->add_option("--rk", bo.rk, "Rescaling radii, e.g. 2^-2..2^-8");
  std::string which;
  auto *verify = app.add_subcommand("verify", "Property verifiers");
  verify->add_option("which", which, "ellipticity | homogeneity | barrier-nondeg | barrier-doubling")
      ->required()
      ->check(CLI::IsMember(ufb::verifier_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return config_error;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("ufb"));
  spdlog::set_level(spdlog::level::from_str(g.log_level));
  if (g.threads > 0)
    ufb::set_default_threads(g.threads);

  try {
    const ufb::RunConfig c = load(g);
    spdlog::debug("threads {}, seed {}", ufb::default_threads(), c.seed);
    ufb::json report;
    if (*solve)
      report = ufb::cmd_solve(c, g.out);
    else if (*classify)
      report = ufb::cmd_classify(c, g.out, field);
    else if (*flat)
      report = ufb::cmd_flatness(c, g.out, field);
    else if (*blow) {
      ufb::RunConfig cb = c;
      ufb::apply_blowup_overrides(cb, bo);
      report = ufb::cmd_blowup(cb, g.out);
    }
    else if (*verify)
      report = ufb::cmd_verify(c, which, g.out);
    summarize(report);
    std::cout << report.dump(2) << '\n';
    return ok;
  } catch (const ufb::StructureError &e) {
    spdlog::error("structure error: {}", e.what());
    return structure_error;
  } catch (const ufb::IterationLimit &e) {
    spdlog::error("iteration limit: {}", e.what());
    return numerical_failure;
  } catch (const ufb::ConfigError &e) {
    spdlog::error("config error: {}", e.what());
    return config_error;
  } catch (const ufb::FormatError &e) {
    spdlog::error("format error: {}", e.what());
    return config_error;
  } catch (const ufb::InvalidInput &e) {
    spdlog::error("invalid input: {}", e.what());
    return config_error;
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return failure;
  }
}
