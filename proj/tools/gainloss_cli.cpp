// Command-line front end: run manifests, validate them, and reproduce the
// bundled figure scenarios.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gainloss/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int report_run(const gainloss::RunReport& report, const std::filesystem::path& out) {
  for (const auto& r : report.scenarios) {
    std::cout << (r.ok ? "ok     " : "FAILED ") << r.name;
    if (!r.ok) std::cout << ": " << r.error;
    std::cout << "\n";
  }
  std::cout << "report: " << (out / "report.json").string() << "\n";
  return report.ok() ? kExitOk : kExitFailure;
}

int print_problems(const std::vector<gainloss::ManifestProblem>& problems) {
  bool errors = false;
  for (const auto& p : problems) {
    std::cout << (p.is_error ? "error   " : "warning ") << p.scenario << " " << p.field << ": " << p.message << "\n";
    errors |= p.is_error;
  }
  if (!errors) std::cout << "manifest valid\n";
  return errors ? kExitFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled gain-loss optomechanical oscillators: simulations and figure data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gainloss::kToolVersion);

  std::string manifest_path, fig_name;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  unsigned workers = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--param", overrides, "Parameter override key=value (repeatable)");
    cmd->add_option("--workers", workers, "Worker threads (default: $GAINLOSS_WORKERS or all cores)");
  };

  auto* run_cmd = app.add_subcommand("run", "Run every scenario of a manifest");
  run_cmd->add_option("manifest", manifest_path, "Manifest JSON")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (overrides the manifest)");
  add_common(run_cmd);

  auto* validate_cmd = app.add_subcommand("validate", "Check a manifest without running it");
  validate_cmd->add_option("manifest", manifest_path, "Manifest JSON")->required();
  validate_cmd->add_option("--param", overrides, "Parameter override key=value (repeatable)");

  auto* list_cmd = app.add_subcommand("list-scenarios", "List the bundled figure scenarios");

  auto* fig_cmd = app.add_subcommand("fig", "Run a bundled figure scenario");
  fig_cmd->add_option("name", fig_name, "Bundled scenario (fig2 ... fig9)")->required();
  fig_cmd->add_option("--out", out_dir, "Output directory (default out/<name>)");
  add_common(fig_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*list_cmd) {
      for (const auto& name : gainloss::bundled_names()) {
        std::cout << name << "  " << gainloss::bundled_description(name) << "\n";
      }
      return kExitOk;
    }

    if (*validate_cmd) {
      const auto manifest = gainloss::load_manifest(manifest_path);
      return print_problems(gainloss::validate_manifest(manifest, overrides));
    }

    gainloss::RunManifest manifest;
    if (*run_cmd) {
      manifest = gainloss::load_manifest(manifest_path);
    } else {
      manifest = gainloss::bundled_manifest(fig_name);
    }
    gainloss::RunOptions options;
    if (out_dir) options.output_dir = *out_dir;
    options.overrides = overrides;
    options.workers = workers;
    for (const auto& o : overrides) {
      gainloss::SystemParams probe;
      gainloss::apply_override(probe, o);  // reject malformed overrides before running
    }
    const auto report = gainloss::run(manifest, options);
    return report_run(report, options.output_dir.value_or(manifest.output_dir));
  } catch (const gainloss::ManifestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
