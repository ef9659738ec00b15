#pragma once

// Run-config JSON. Every field is optional; omitted fields keep the defaults
// below.
//
//   {
//     "stages": [84, 168, 336, 672],    or "base_resolution" + "stage_count"
//     "patch_px": 14,
//     "lambda": 1.0,
//     "selection": "dynamic",           dynamic | fixed:F | reversed | all
//     "cumulative_union": false,
//     "cd_mode": "multi",               none | single | multi
//     "cd": {"alpha": 0.7, "beta": 0.7, "gamma": 1.0},
//     "backend": "synthetic",           synthetic | dump:<dir>
//     "seed": 42,
//     "synthetic": {"cases": 200, "noise_sigma": 0.016, "signal_gain": 1.0,
//                   "mask_resolution": 192, "yes_rate": 0.5,
//                   "min_area_fraction": 0.002, "max_area_fraction": 0.2,
//                   "logit_a": 4.0, "logit_b": -2.0},
//     "out": "out",
//     "heatmaps": false
//   }

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "second/backend.hpp"
#include "second/harness.hpp"

namespace second {

struct RunSpec {
  std::vector<std::size_t> stages{84, 168, 336, 672};
  std::size_t patch_px = 14;
  double lambda = 1.0;
  SelectionMode selection = SelectionMode::Dynamic;
  double fixed_fraction = 1.0;
  bool cumulative_union = false;
  CdMode cd_mode = CdMode::Multi;
  CDConfig cd;
  std::string backend = "synthetic";
  std::uint64_t seed = 42;
  SyntheticFixtureConfig synthetic;
  std::filesystem::path out = "out";
  bool heatmaps = false;

  // Assembles and validates the harness configuration. Throws ConfigError.
  RunConfig run_config() const;
};

RunSpec parse_run_spec(const nlohmann::json& j);
RunSpec load_run_spec(const std::filesystem::path& path);
nlohmann::json to_json(const RunSpec& spec);

// Flag-style parsers shared with the CLI; all throw ConfigError.
std::vector<std::size_t> parse_stage_list(std::string_view text);
void parse_selection(std::string_view text, SelectionMode& mode, double& fixed_fraction);
CdMode parse_cd_mode(std::string_view text);
std::string selection_name(SelectionMode mode, double fixed_fraction);
std::string cd_mode_name(CdMode mode);

}  // namespace second
