#include <fstream>
#include <string>

#include <json.hpp>

#include "second/backend.hpp"
#include "second/error.hpp"
#include "second/secd.hpp"

namespace second {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path existing(const fs::path& root, const std::string& rel) {
  fs::path p = root / rel;
  if (!fs::exists(p)) throw Error(Errc::IoError, "manifest references missing file " + p.string());
  return p;
}

bool parse_gold(const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "yes") return true;
    if (s == "no") return false;
  }
  throw Error(Errc::ConfigError, "gold must be \"yes\", \"no\" or a boolean");
}

std::vector<double> read_grid_values(const fs::path& path, const PatchGrid& grid, const char* what) {
  const secd::Tensor t = secd::read_tensor(path);
  const bool flat_ok = t.shape.size() == 1 && t.shape[0] == grid.patch_count();
  const bool grid_ok = t.shape.size() == 2 && t.shape[0] == grid.rows() && t.shape[1] == grid.cols();
  if (!flat_ok && !grid_ok) {
    throw Error(Errc::ShapeMismatch, std::string(what) + " in " + path.string() + " does not match a " +
                                         std::to_string(grid.rows()) + "x" + std::to_string(grid.cols()) + " grid");
  }
  return t.as_doubles();
}

}  // namespace

TensorDump load_tensor_dump(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error(Errc::IoError, "cannot open " + manifest_path.string());
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, manifest_path.string() + ": " + e.what());
  }

  TensorDump dump;
  dump.root = dir;
  try {
    const std::string style = m.value("cls_style", std::string("full_interp"));
    if (style == "cls_preserved") dump.cls_style = ClsStyle::ClsPreserved;
    else if (style == "full_interp") dump.cls_style = ClsStyle::FullInterp;
    else throw Error(Errc::ConfigError, "unknown cls_style " + style);
    if (m.contains("vocab")) dump.yes_token = m.at("vocab").at("yes").get<std::size_t>();

    for (const json& jc : m.at("cases")) {
      DumpCase c;
      c.info.id = jc.at("id").get<std::string>();
      c.info.gold_yes = parse_gold(jc.at("gold"));
      if (jc.contains("gt_mask_path") && !jc.at("gt_mask_path").is_null()) {
        const secd::Tensor t = secd::read_tensor(existing(dir, jc.at("gt_mask_path").get<std::string>()));
        if (t.shape.size() != 2) throw Error(Errc::ShapeMismatch, "ground-truth mask of case " + c.info.id + " is not 2-D");
        std::vector<std::uint8_t> px(t.data.size());
        for (std::size_t i = 0; i < px.size(); ++i) px[i] = t.data[i] != 0.0F ? 1 : 0;
        c.info.gt = GroundTruthMask(t.shape[0], t.shape[1], std::move(px));
      }
      for (const json& js : jc.at("stages")) {
        DumpStage s;
        s.resolution = js.at("resolution").get<std::size_t>();
        s.self_attn = existing(dir, js.at("self_attn").get<std::string>());
        s.cross_attn = existing(dir, js.at("cross_attn").get<std::string>());
        s.logits = existing(dir, js.at("logits").get<std::string>());
        c.stages.push_back(std::move(s));
      }
      dump.cases.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, manifest_path.string() + ": " + e.what());
  }

  // Vocabulary size comes from the first logits tensor and must be uniform.
  for (const auto& c : dump.cases) {
    for (const auto& s : c.stages) {
      const secd::Tensor t = secd::read_tensor(s.logits);
      if (t.shape.empty() || t.shape.size() > 2) throw Error(Errc::ShapeMismatch, "logits must be [V] or [T, V]");
      const std::size_t v = t.shape.back();
      if (dump.vocab_size == 0) dump.vocab_size = v;
      if (v != dump.vocab_size) throw Error(Errc::ShapeMismatch, "logits of case " + c.info.id + " change vocab size");
    }
  }
  if (dump.vocab_size != 0 && dump.yes_token >= dump.vocab_size) {
    throw Error(Errc::ConfigError, "yes token outside the vocabulary");
  }
  return dump;
}

StageOutput dump_run_stage(const TensorDump& dump, std::size_t case_index, const PatchGrid& grid,
                           const PatchMask& mask) {
  if (case_index >= dump.cases.size()) throw Error(Errc::MissingCase, "no case #" + std::to_string(case_index));
  const DumpCase& c = dump.cases[case_index];
  const DumpStage* stage = nullptr;
  for (const auto& s : c.stages) {
    if (s.resolution == grid.height_px()) stage = &s;
  }
  if (stage == nullptr) {
    throw Error(Errc::MissingCase, "case " + c.info.id + " has no stage at " + std::to_string(grid.height_px()) + "px");
  }
  if (!mask.grid().same_layout(grid)) throw Error(Errc::GridMismatch, "mask is not on the stage grid");

  std::vector<double> self = read_grid_values(stage->self_attn, grid, "self-attention");
  for (std::size_t i = 0; i < self.size(); ++i) {
    if (!mask.kept(i)) self[i] = 0.0;
  }

  const secd::Tensor cross = secd::read_tensor(stage->cross_attn);
  const std::size_t n = grid.patch_count();
  std::size_t rows = 0;
  if (cross.shape.size() == 1 && cross.shape[0] == n) rows = 1;
  else if (cross.shape.size() == 2 && cross.shape[1] == n) rows = cross.shape[0];
  else if (cross.shape.size() == 3 && cross.shape[1] == grid.rows() && cross.shape[2] == grid.cols()) rows = cross.shape[0];
  else throw Error(Errc::ShapeMismatch, "cross-attention in " + stage->cross_attn.string() + " does not match the grid");

  const secd::Tensor logits = secd::read_tensor(stage->logits);
  const std::size_t vocab = logits.shape.back();
  std::vector<double> answer(logits.data.begin(), logits.data.begin() + static_cast<std::ptrdiff_t>(vocab));

  return StageOutput{AttentionMap(grid, std::move(self)), CrossAttentionWeights(grid, rows, cross.as_doubles()),
                     LogitVector(std::move(answer))};
}

DumpBackend::DumpBackend(TensorDump dump) : dump_(std::move(dump)) {
  info_.reserve(dump_.cases.size());
  for (const auto& c : dump_.cases) info_.push_back(c.info);
}

StageOutput DumpBackend::run_stage(std::size_t case_index, [[maybe_unused]] std::size_t stage, const PatchGrid& grid,
                                   const PatchMask& mask) const {
  return dump_run_stage(dump_, case_index, grid, mask);
}

void export_tensor_dump(const Backend& backend, const StagePlan& plan, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());

  auto to_f32 = [](const std::vector<double>& v) { return std::vector<float>(v.begin(), v.end()); };
  const BackendCapabilities caps = backend.capabilities();
  json cases = json::array();
  const auto& infos = backend.cases();
  for (std::size_t ci = 0; ci < infos.size(); ++ci) {
    const CaseInfo& info = infos[ci];
    json jc{{"id", info.id}, {"gold", info.gold_yes ? "yes" : "no"}, {"gt_mask_path", nullptr}};
    if (info.gt) {
      const std::string name = info.id + "_gt.secd";
      secd::Tensor t;
      t.shape = {static_cast<std::uint32_t>(info.gt->height()), static_cast<std::uint32_t>(info.gt->width())};
      t.data.assign(info.gt->pixels().begin(), info.gt->pixels().end());
      secd::write_tensor(dir / name, t);
      jc["gt_mask_path"] = name;
    }
    json stages = json::array();
    for (std::size_t s = 0; s < plan.stage_count(); ++s) {
      const PatchGrid& grid = plan.stages[s];
      const StageOutput out = backend.run_stage(ci, s, grid, PatchMask::ones(grid));
      const std::string stem = info.id + "_s" + std::to_string(grid.height_px());
      const auto r = static_cast<std::uint32_t>(grid.rows()), c = static_cast<std::uint32_t>(grid.cols());
      secd::write_tensor(dir / (stem + "_self.secd"), {{r, c}, to_f32(out.self_attn.values)});
      secd::write_tensor(dir / (stem + "_cross.secd"),
                         {{static_cast<std::uint32_t>(out.cross.token_count()), r * c}, to_f32(out.cross.weights())});
      secd::write_tensor(dir / (stem + "_logits.secd"),
                         {{static_cast<std::uint32_t>(out.logits.vocab_size())}, to_f32(out.logits.values)});
      stages.push_back({{"resolution", grid.height_px()},
                        {"self_attn", stem + "_self.secd"},
                        {"cross_attn", stem + "_cross.secd"},
                        {"logits", stem + "_logits.secd"}});
    }
    jc["stages"] = std::move(stages);
    cases.push_back(std::move(jc));
  }
  json manifest{{"cls_style", caps.cls_style == ClsStyle::ClsPreserved ? "cls_preserved" : "full_interp"},
                {"vocab", {{"yes", caps.yes_token}, {"no", caps.yes_token == 0 ? 1 : 0}}},
                {"cases", std::move(cases)}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace second
