// second: multi-stage selective decoding harness.
//
//   second run    [--config FILE] [overrides...]   decode a dataset, write reports
//   second ablate [--config FILE] [overrides...]   stage-list / CD ablation grid with timings
//   second export-dump [--config FILE] --dir DIR   write the synthetic fixture as SECD dumps
//
// Exit codes: 0 success, 2 configuration error, 3 backend or data error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "second/backend.hpp"
#include "second/config.hpp"
#include "second/error.hpp"
#include "second/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Overrides {
  std::string config;
  std::string backend;
  std::string stages;
  double lambda = 0.0;
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  std::string cd;
  std::string selection;
  std::uint64_t seed = 0;
  std::string out;
  bool heatmaps = false;
  bool serial = false;

  CLI::Option* o_lambda = nullptr;
  CLI::Option* o_alpha = nullptr;
  CLI::Option* o_beta = nullptr;
  CLI::Option* o_gamma = nullptr;
  CLI::Option* o_seed = nullptr;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run-config JSON file");
  cmd->add_option("--backend", o.backend, "synthetic | dump:<dir>");
  cmd->add_option("--stages", o.stages, "Comma-separated stage resolutions, e.g. 84,168,336,672");
  o.o_lambda = cmd->add_option("--lambda", o.lambda, "Patch selection lambda");
  o.o_alpha = cmd->add_option("--alpha", o.alpha, "CD alpha");
  o.o_beta = cmd->add_option("--beta", o.beta, "CD beta");
  o.o_gamma = cmd->add_option("--gamma", o.gamma, "CD gamma");
  cmd->add_option("--cd", o.cd, "none | single | multi");
  cmd->add_option("--selection", o.selection, "dynamic | fixed:F | reversed | all");
  o.o_seed = cmd->add_option("--seed", o.seed, "Dataset seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_flag("--heatmaps", o.heatmaps, "Write per-case PGM attention heatmaps");
  cmd->add_flag("--serial", o.serial, "Run cases on one thread");
}

second::RunSpec resolve_spec(const Overrides& o) {
  second::RunSpec spec = o.config.empty() ? second::RunSpec{} : second::load_run_spec(o.config);
  if (!o.backend.empty()) spec.backend = o.backend;
  if (!o.stages.empty()) spec.stages = second::parse_stage_list(o.stages);
  if (o.o_lambda->count()) spec.lambda = o.lambda;
  if (o.o_alpha->count()) spec.cd.alpha = o.alpha;
  if (o.o_beta->count()) spec.cd.beta = o.beta;
  if (o.o_gamma->count()) spec.cd.gamma = o.gamma;
  if (!o.cd.empty()) spec.cd_mode = second::parse_cd_mode(o.cd);
  if (!o.selection.empty()) second::parse_selection(o.selection, spec.selection, spec.fixed_fraction);
  if (o.o_seed->count()) {
    spec.seed = o.seed;
    spec.synthetic.seed = o.seed;
  }
  if (!o.out.empty()) spec.out = o.out;
  if (o.heatmaps) spec.heatmaps = true;
  return spec;
}

std::unique_ptr<second::Backend> make_backend(const second::RunSpec& spec) {
  if (spec.backend == "synthetic") {
    return std::make_unique<second::SyntheticBackend>(second::make_synthetic_fixture(spec.synthetic),
                                                      spec.synthetic.logits);
  }
  if (spec.backend.starts_with("dump:")) {
    return std::make_unique<second::DumpBackend>(second::load_tensor_dump(spec.backend.substr(5)));
  }
  throw second::Error(second::Errc::ConfigError, "unknown backend '" + spec.backend + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw second::Error(second::Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

json report_json(const second::ClassificationReport& r) {
  return json{{"tp", r.tp},         {"fp", r.fp},     {"tn", r.tn},           {"fn", r.fn},
              {"precision", r.precision}, {"recall", r.recall}, {"accuracy", r.accuracy}, {"f1", r.f1}};
}

int cmd_run(const Overrides& o) {
  const second::RunSpec spec = resolve_spec(o);
  const second::RunConfig cfg = spec.run_config();
  const auto backend = make_backend(spec);
  const second::DatasetResult result =
      o.serial ? second::run_dataset_serial(*backend, cfg) : second::run_dataset(*backend, cfg);

  ensure_dir(spec.out);
  second::emit_csv(result.cases, spec.out / "results.csv");
  {
    std::ofstream out(spec.out / "report.json", std::ios::trunc);
    if (!out) throw second::Error(second::Errc::IoError, "cannot write report.json");
    out << json{{"config", second::to_json(spec)}, {"report", report_json(result.report)}}.dump(2) << '\n';
  }
  if (spec.heatmaps) {
    ensure_dir(spec.out / "heatmaps");
    for (const auto& c : result.cases) {
      if (c.attention) second::emit_heatmap_pgm(*c.attention, spec.out / "heatmaps" / (c.case_id + ".pgm"));
    }
  }
  const auto& r = result.report;
  std::printf("cases=%zu accuracy=%.4f recall=%.4f f1=%.4f -> %s\n", result.cases.size(), r.accuracy, r.recall,
              r.f1, (spec.out / "results.csv").string().c_str());
  return 0;
}

int cmd_ablate(const Overrides& o) {
  const second::RunSpec base = resolve_spec(o);
  const auto backend = make_backend(base);
  const std::vector<std::vector<std::size_t>> stage_lists = {
      {42, 84, 168, 336, 672}, {84, 168, 336, 672}, {168, 336, 672}, {336, 672}};

  ensure_dir(base.out);
  std::ofstream csv(base.out / "ablation.csv", std::ios::trunc);
  if (!csv) throw second::Error(second::Errc::IoError, "cannot write ablation.csv");
  csv << "stages,selection,cd_mode,accuracy,recall,f1,wall_ms\n";
  std::printf("%-20s %-10s %-7s %9s %9s %9s\n", "stages", "selection", "cd", "accuracy", "f1", "wall_ms");
  for (const auto& stages : stage_lists) {
    const second::CdMode contrast = stages.size() >= 3 ? second::CdMode::Multi : second::CdMode::Single;
    for (const second::CdMode mode : {second::CdMode::None, contrast}) {
      second::RunSpec spec = base;
      spec.stages = stages;
      spec.cd_mode = mode;
      spec.heatmaps = false;
      const second::RunConfig cfg = spec.run_config();
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = o.serial ? second::run_dataset_serial(*backend, cfg) : second::run_dataset(*backend, cfg);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

      std::string label;
      for (std::size_t i = 0; i < stages.size(); ++i) label += (i ? "-" : "") + std::to_string(stages[i]);
      const std::string sel = second::selection_name(spec.selection, spec.fixed_fraction);
      const std::string cd = second::cd_mode_name(mode);
      const auto& r = result.report;
      std::printf("%-20s %-10s %-7s %9.4f %9.4f %9.1f\n", label.c_str(), sel.c_str(), cd.c_str(), r.accuracy, r.f1, ms);
      csv << label << ',' << sel << ',' << cd << ',' << r.accuracy << ',' << r.recall << ',' << r.f1 << ',' << ms << '\n';
    }
  }
  return 0;
}

int cmd_export_dump(const Overrides& o, const std::string& dir) {
  const second::RunSpec spec = resolve_spec(o);
  if (spec.backend != "synthetic") {
    throw second::Error(second::Errc::ConfigError, "export-dump only exports the synthetic backend");
  }
  const second::RunConfig cfg = spec.run_config();
  const auto backend = make_backend(spec);
  second::export_tensor_dump(*backend, cfg.plan, dir);
  std::printf("wrote %zu cases x %zu stages to %s\n", backend->cases().size(), cfg.plan.stage_count(), dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-stage selective decoding harness"};
  app.require_subcommand(1);

  Overrides run_o, ablate_o, export_o;
  std::string export_dir;
  CLI::App* run = app.add_subcommand("run", "Decode a dataset and write results.csv / report.json");
  add_common_flags(run, run_o);
  CLI::App* ablate = app.add_subcommand("ablate", "Run the stage-list ablation grid and report wall time");
  add_common_flags(ablate, ablate_o);
  CLI::App* exporter = app.add_subcommand("export-dump", "Write the synthetic fixture as a tensor dump");
  add_common_flags(exporter, export_o);
  exporter->add_option("--dir", export_dir, "Destination directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_o);
    if (*ablate) return cmd_ablate(ablate_o);
    if (*exporter) return cmd_export_dump(export_o, export_dir);
  } catch (const second::Error& e) {
    std::cerr << "second: " << e.what() << '\n';
    return e.code() == second::Errc::ConfigError ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "second: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
