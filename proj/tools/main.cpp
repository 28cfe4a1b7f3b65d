#include <iostream>

#include <CLI11.hpp>

#include "pulsewave/cli/commands.hpp"

using namespace pulsewave::cli;

int main(int argc, char** argv) {
  CLI::App app{"pulsewave: smartphone PPG waveform analysis"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::string config;
  const auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--config", config, "config file (default: $" + std::string(kConfigEnv) + ")");
    sub->add_option("--set", g.sets, "override a config key, key=value")->take_all();
    sub->add_option("--threads", g.threads, "worker threads, 0 for all cores")->capture_default_str();
    sub->add_flag("--force", g.force, "overwrite existing outputs");
    sub->add_flag("--plots", g.plots, "also write SVG plots");
  };

  ExtractOptions ex;
  std::string ex_meta, ex_report, ex_details;
  auto* extract = app.add_subcommand("extract", "frames CSVs to a features CSV");
  extract->add_option("inputs", ex.inputs, "frame CSV files or directories")->required();
  extract->add_option("--meta", ex_meta, "sample metadata CSV");
  extract->add_option("--out,-o", ex.out, "features CSV")->capture_default_str();
  extract->add_option("--report", ex_report, "error and validity report JSON");
  extract->add_option("--details", ex_details, "directory for per-sample fiducials and spectra");
  extract->add_flag("--strict", ex.strict, "exit 3 when any input fails");
  add_globals(extract);

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "statistics, models, SHAP and agreement");
  analyze->add_option("features", an.features, "features CSV")->required();
  analyze->add_option("--out,-o", an.out, "output directory")->capture_default_str();
  analyze->add_option("--target", an.targets, "targets (SBP, DBP, PP); default from config");
  add_globals(analyze);

  ExplainOptions xp;
  auto* explain = app.add_subcommand("explain", "SHAP attributions for one model");
  explain->add_option("features", xp.features, "features CSV")->required();
  explain->add_option("--out,-o", xp.out, "output directory")->capture_default_str();
  explain->add_option("--target", xp.target, "SBP, DBP or PP")->capture_default_str();
  explain->add_option("--model", xp.model, "mlr, stepwise or rf")->capture_default_str();
  add_globals(explain);

  AgreementOptions ag;
  std::string ag_plot, ag_svg;
  auto* agreement = app.add_subcommand("agreement", "Bland-Altman and AAMI grading");
  agreement->add_option("input", ag.input, "CSV with predicted,reference columns")->required();
  agreement->add_option("--out,-o", ag.out, "report JSON")->capture_default_str();
  agreement->add_option("--plot-csv", ag_plot, "mean,difference rows");
  agreement->add_option("--svg", ag_svg, "Bland-Altman plot");
  add_globals(agreement);

  SynthOptions sy;
  std::string sy_spec;
  auto* synth = app.add_subcommand("synth", "synthetic sessions with ground truth");
  synth->add_option("--spec", sy_spec, "synthetic batch spec file");
  synth->add_option("--out,-o", sy.out, "output directory")->capture_default_str();
  add_globals(synth);

  bool dump_synth = false;
  auto* dump = app.add_subcommand("config-dump", "print the resolved configuration");
  dump->add_flag("--synth", dump_synth, "print the synthetic spec defaults instead");
  add_globals(dump);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (!config.empty()) g.config = config;

  if (extract->parsed()) {
    if (!ex_meta.empty()) ex.meta = ex_meta;
    if (!ex_report.empty()) ex.report = ex_report;
    if (!ex_details.empty()) ex.details = ex_details;
    return cmd_extract(ex, g, std::cerr);
  }
  if (analyze->parsed()) return cmd_analyze(an, g, std::cerr);
  if (explain->parsed()) return cmd_explain(xp, g, std::cerr);
  if (agreement->parsed()) {
    if (!ag_plot.empty()) ag.plot_csv = ag_plot;
    if (!ag_svg.empty()) ag.svg = ag_svg;
    return cmd_agreement(ag, g, std::cerr);
  }
  if (synth->parsed()) {
    if (!sy_spec.empty()) sy.spec = sy_spec;
    return cmd_synth(sy, g, std::cerr);
  }
  if (dump->parsed()) return cmd_config_dump(g, dump_synth, std::cout, std::cerr);
  return kExitUsage;
}
