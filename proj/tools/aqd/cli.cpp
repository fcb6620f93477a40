#include "cli.hpp"

#include <functional>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "aqd/errors.hpp"
#include "commands.hpp"
#include "log.hpp"
#include "service.hpp"

namespace aqd::cli {

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kInternalError = 3;

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Groundwater-level downscaling pipeline", "aqd"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string manifest_path;
  std::optional<int> year;
  std::string bind;

  std::function<void(const Manifest&)> action;
  auto add = [&](const char* name, const char* help, std::function<void(const Manifest&)> fn) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--manifest", manifest_path, "Pipeline manifest")->required();
    sub->callback([&action, fn] { action = fn; });
    return sub;
  };
  add("synth", "Generate a synthetic input bundle", cmd_synth);
  add("features", "Derive HGF rasters and sample them at fishnet and stations", cmd_features);
  add("pseudo-gt", "Train max/min models and build the pseudo-ground truth", cmd_pseudo_gt);
  add("train-upsampler", "Train the coarse-to-fine upsampler", cmd_train_upsampler);
  add("downscale", "Predict fine-scale levels for one or all years",
      [&year](const Manifest& m) { cmd_downscale(m, year); })
      ->add_option("--year", year, "Single year");
  add("recharge", "Recharge from downscaled levels", cmd_recharge);
  add("trends", "Mann-Kendall and Sen's slope of recharge", cmd_trends);
  add("eval", "Metrics, LOYO, baseline and ablations", cmd_eval);
  add("serve", "JSON prediction service", [&bind](const Manifest& m) {
    cmd_serve(m, bind.empty() ? m.opt("serve.bind").value_or("127.0.0.1:8080") : bind);
  })->add_option("--bind", bind, "host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    const auto manifest = Manifest::load(manifest_path);
    action(manifest);
    return kOk;
  } catch (const InputError& e) {
    log(LogLevel::error, e.what(), {{"kind", "input"}});
    return kInputError;
  } catch (const std::exception& e) {
    log(LogLevel::error, e.what(), {{"kind", "internal"}});
    return kInternalError;
  }
}

}  // namespace aqd::cli
