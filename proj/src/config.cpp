#include "second/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "second/error.hpp"

namespace second {

using nlohmann::json;

namespace {

double parse_double(std::string_view text, const char* what) {
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::ConfigError, std::string("bad ") + what + ": '" + std::string(text) + "'");
  }
}

}  // namespace

std::vector<std::size_t> parse_stage_list(std::string_view text) {
  std::vector<std::size_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || v == 0) {
      throw Error(Errc::ConfigError, "bad stage resolution '" + std::string(item) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error(Errc::ConfigError, "empty stage list");
  return out;
}

void parse_selection(std::string_view text, SelectionMode& mode, double& fixed_fraction) {
  if (text == "dynamic") mode = SelectionMode::Dynamic;
  else if (text == "reversed") mode = SelectionMode::Reversed;
  else if (text == "all") mode = SelectionMode::All;
  else if (text.starts_with("fixed:")) {
    mode = SelectionMode::Fixed;
    fixed_fraction = parse_double(text.substr(6), "fixed fraction");
  } else {
    throw Error(Errc::ConfigError, "unknown selection mode '" + std::string(text) + "'");
  }
}

CdMode parse_cd_mode(std::string_view text) {
  if (text == "none") return CdMode::None;
  if (text == "single") return CdMode::Single;
  if (text == "multi") return CdMode::Multi;
  throw Error(Errc::ConfigError, "unknown cd mode '" + std::string(text) + "'");
}

std::string selection_name(SelectionMode mode, double fixed_fraction) {
  switch (mode) {
    case SelectionMode::Dynamic: return "dynamic";
    case SelectionMode::Reversed: return "reversed";
    case SelectionMode::All: return "all";
    case SelectionMode::Fixed: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "fixed:%g", fixed_fraction);
      return buf;
    }
  }
  return "dynamic";
}

std::string cd_mode_name(CdMode mode) {
  switch (mode) {
    case CdMode::None: return "none";
    case CdMode::Single: return "single";
    case CdMode::Multi: return "multi";
  }
  return "multi";
}

RunConfig RunSpec::run_config() const {
  RunConfig cfg;
  try {
    cfg.plan = StagePlan::from_resolutions(stages, patch_px, lambda, cd);
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  cfg.selection = SelectionConfig{lambda, selection, fixed_fraction};
  cfg.cd_mode = cd_mode;
  cfg.cumulative_union = cumulative_union;
  cfg.keep_attention = heatmaps;
  cfg.validate();
  return cfg;
}

RunSpec parse_run_spec(const json& j) {
  RunSpec spec;
  try {
    if (!j.is_object()) throw Error(Errc::ConfigError, "run config must be a JSON object");
    spec.patch_px = j.value("patch_px", spec.patch_px);
    if (j.contains("stages")) {
      spec.stages = j.at("stages").get<std::vector<std::size_t>>();
    } else if (j.contains("base_resolution")) {
      const auto plan = build_stage_plan(j.at("base_resolution").get<std::size_t>(), spec.patch_px,
                                         j.value("stage_count", std::size_t{4}), 1.0);
      spec.stages.clear();
      for (const auto& g : plan.stages) spec.stages.push_back(g.height_px());
    }
    spec.lambda = j.value("lambda", spec.lambda);
    if (j.contains("selection")) parse_selection(j.at("selection").get<std::string>(), spec.selection, spec.fixed_fraction);
    spec.cumulative_union = j.value("cumulative_union", spec.cumulative_union);
    if (j.contains("cd_mode")) spec.cd_mode = parse_cd_mode(j.at("cd_mode").get<std::string>());
    if (j.contains("cd")) {
      const json& cd = j.at("cd");
      spec.cd.alpha = cd.value("alpha", spec.cd.alpha);
      spec.cd.beta = cd.value("beta", spec.cd.beta);
      spec.cd.gamma = cd.value("gamma", spec.cd.gamma);
    }
    spec.backend = j.value("backend", spec.backend);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("synthetic")) {
      const json& s = j.at("synthetic");
      auto& f = spec.synthetic;
      f.case_count = s.value("cases", f.case_count);
      f.noise_sigma = s.value("noise_sigma", f.noise_sigma);
      f.signal_gain = s.value("signal_gain", f.signal_gain);
      f.mask_resolution = s.value("mask_resolution", f.mask_resolution);
      f.yes_rate = s.value("yes_rate", f.yes_rate);
      f.min_area_fraction = s.value("min_area_fraction", f.min_area_fraction);
      f.max_area_fraction = s.value("max_area_fraction", f.max_area_fraction);
      f.logits.a = s.value("logit_a", f.logits.a);
      f.logits.b = s.value("logit_b", f.logits.b);
    }
    spec.out = j.value("out", spec.out.string());
    spec.heatmaps = j.value("heatmaps", spec.heatmaps);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    throw Error(Errc::ConfigError, e.what());
  }
  spec.synthetic.seed = spec.seed;
  return spec;
}

RunSpec load_run_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
  return parse_run_spec(j);
}

json to_json(const RunSpec& spec) {
  const auto& f = spec.synthetic;
  return json{{"stages", spec.stages},
              {"patch_px", spec.patch_px},
              {"lambda", spec.lambda},
              {"selection", selection_name(spec.selection, spec.fixed_fraction)},
              {"cumulative_union", spec.cumulative_union},
              {"cd_mode", cd_mode_name(spec.cd_mode)},
              {"cd", {{"alpha", spec.cd.alpha}, {"beta", spec.cd.beta}, {"gamma", spec.cd.gamma}}},
              {"backend", spec.backend},
              {"seed", spec.seed},
              {"synthetic",
               {{"cases", f.case_count},
                {"noise_sigma", f.noise_sigma},
                {"signal_gain", f.signal_gain},
                {"mask_resolution", f.mask_resolution},
                {"yes_rate", f.yes_rate},
                {"min_area_fraction", f.min_area_fraction},
                {"max_area_fraction", f.max_area_fraction},
                {"logit_a", f.logits.a},
                {"logit_b", f.logits.b}}},
              {"out", spec.out.string()},
              {"heatmaps", spec.heatmaps}};
}

}  // namespace second
