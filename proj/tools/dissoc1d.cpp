#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dissoc/config.hpp"
#include "dissoc/ensemble.hpp"
#include "dissoc/output.hpp"

namespace {

using namespace dissoc;

ValidatedConfig load(const std::string& path,
                     const std::vector<std::string>& sets,
                     const std::vector<std::string>& extra = {}) {
  ConfigSource src = parse_config_file(path);
  for (const std::string& s : sets) apply_override(src, s);
  for (const std::string& s : extra) apply_override(src, s);
  return finalize(src);
}

void emit_warnings(const char* label, const RunResult& result) {
  if (result.twa_band_warning)
    std::fprintf(stderr,
                 "warning: %s: %.3g real particles per mode over the resonant "
                 "band; classical-field results are unreliable this early\n",
                 label, result.band_occupation);
  if (result.total_divergence)
    std::fprintf(stderr,
                 "warning: %s: every trajectory diverged before t_final; "
                 "later rows are undefined\n",
                 label);
}

void write_run_outputs(const ValidatedConfig& cfg, const RunResult& result,
                       const std::string& suffix) {
  const std::filesystem::path dir = cfg.run.output_dir;
  const std::uint64_t hash = manifest_hash(cfg);
  write_file(dir / ("manifest" + suffix + ".json"), manifest_json(cfg));
  write_file(dir / ("fractions" + suffix + ".csv"),
             fractions_csv(result.series, hash));
  write_file(dir / ("summary" + suffix + ".json"), summary_json(cfg, result));
}

void write_snapshots(const ValidatedConfig& cfg, const RunResult& result) {
  const std::filesystem::path dir = cfg.run.output_dir;
  const std::uint64_t hash = manifest_hash(cfg);
  for (const auto& snap : result.series.snapshots)
    write_file(dir / spectra_filename(snap.t), spectra_csv(cfg, snap, hash));
}

int run_command(const std::string& config_path,
                const std::vector<std::string>& sets) {
  const ValidatedConfig cfg = load(config_path, sets);
  const RunResult result = run(cfg);
  write_run_outputs(cfg, result, "");
  write_snapshots(cfg, result);
  emit_warnings(method_name(cfg.run.method), result);
  return result.total_divergence ? 3 : 0;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> items;
  std::string item;
  for (char c : csv) {
    if (c == ',') {
      if (!item.empty()) items.push_back(item);
      item.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      item += c;
    }
  }
  if (!item.empty()) items.push_back(item);
  return items;
}

int compare_command(const std::string& config_path,
                    const std::vector<std::string>& sets,
                    const std::string& methods_csv) {
  const std::vector<std::string> methods = split_list(methods_csv);
  if (methods.empty())
    throw ValidationError({"methods list is empty"});

  std::vector<ValidatedConfig> cfgs;
  cfgs.reserve(methods.size());
  for (const std::string& name : methods) {
    std::vector<std::string> extra = {"method=" + name};
    // Deterministic methods are single runs regardless of the ensemble size
    // configured for the stochastic ones.
    if (name == "hfb" || name == "undepleted")
      extra.push_back("trajectories=1");
    cfgs.push_back(load(config_path, sets, extra));
  }

  std::vector<RunResult> results;
  std::vector<std::uint64_t> hashes;
  std::vector<const TimeSeries*> series;
  bool any_divergence = false;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    results.push_back(run(cfgs[i]));
    hashes.push_back(manifest_hash(cfgs[i]));
    write_run_outputs(cfgs[i], results.back(), "_" + methods[i]);
    emit_warnings(methods[i].c_str(), results.back());
    any_divergence = any_divergence || results.back().total_divergence;
  }
  for (const RunResult& r : results) series.push_back(&r.series);

  const std::filesystem::path dir = cfgs.front().run.output_dir;
  const ComparisonReport report = compare(series);
  write_file(dir / "comparison.csv", comparison_csv(report, methods, hashes));

  const int fig = fig_index_for(cfgs.front());
  write_file(dir / ("fig" + std::to_string(fig) + ".dat"),
             numbers_fig(series, methods, hashes));
  write_file(dir / "fig3.dat", correlations_fig(series, methods, hashes));
  write_file(dir / "fig5.dat",
             density_fig(cfgs.front(), series, methods, hashes));

  return any_divergence ? 3 : 0;
}

int spectra_command(const std::string& config_path,
                    const std::vector<std::string>& sets,
                    const std::string& times_csv) {
  if (split_list(times_csv).empty())
    throw ValidationError({"times list is empty"});
  const ValidatedConfig cfg =
      load(config_path, sets, {"snapshot_times=" + times_csv});
  const RunResult result = run(cfg);
  const std::filesystem::path dir = cfg.run.output_dir;
  write_file(dir / "manifest.json", manifest_json(cfg));
  write_file(dir / "summary.json", summary_json(cfg, result));
  write_snapshots(cfg, result);
  emit_warnings(method_name(cfg.run.method), result);
  return result.total_divergence ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase-space and pairing mean-field simulations of molecular "
               "dissociation into correlated atom pairs in one dimension"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string methods = "positive_p,twa,hfb";
  std::string times;

  CLI::App* cmd_run =
      app.add_subcommand("run", "run one method and write its observables");
  CLI::App* cmd_compare = app.add_subcommand(
      "compare", "run several methods on one configuration and cross-compare");
  CLI::App* cmd_spectra = app.add_subcommand(
      "spectra", "save densities and momentum spectra at chosen times");
  for (CLI::App* cmd : {cmd_run, cmd_compare, cmd_spectra}) {
    cmd->add_option("--config", config_path, "key = value configuration file")
        ->required();
    cmd->add_option("--set", sets,
                    "override one configuration key (repeatable)");
  }
  cmd_compare
      ->add_option("--methods", methods, "comma-separated method list")
      ->capture_default_str();
  cmd_spectra->add_option("--times", times, "comma-separated times [s]")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_run->parsed()) return run_command(config_path, sets);
    if (cmd_compare->parsed())
      return compare_command(config_path, sets, methods);
    return spectra_command(config_path, sets, times);
  } catch (const ValidationError& e) {
    for (const std::string& v : e.violations())
      std::fprintf(stderr, "error: %s\n", v.c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
