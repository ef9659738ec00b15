#include "second/scale_pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "second/error.hpp"

namespace second {

namespace {

struct BlockRatio {
  bool upscale;
  std::size_t kr;
  std::size_t kc;
};

BlockRatio block_ratio(const PatchGrid& from, const PatchGrid& to) {
  const std::size_t fr = from.rows(), fc = from.cols(), tr = to.rows(), tc = to.cols();
  if (tr >= fr && tc >= fc && tr % fr == 0 && tc % fc == 0) return {true, tr / fr, tc / fc};
  if (tr <= fr && tc <= fc && fr % tr == 0 && fc % tc == 0) return {false, fr / tr, fc / tc};
  throw Error(Errc::GridMismatch, std::to_string(fr) + "x" + std::to_string(fc) + " -> " + std::to_string(tr) +
                                      "x" + std::to_string(tc) + " is not an integer block mapping");
}

}  // namespace

StagePlan StagePlan::from_resolutions(std::span<const std::size_t> resolutions, std::size_t patch_px,
                                      double lambda, const CDConfig& cd) {
  if (resolutions.empty() || resolutions.size() > 5) {
    throw Error(Errc::InvalidArgument, "a stage plan has 1 to 5 stages");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(Errc::NonPositiveLambda, "lambda must be positive");
  cd.validate();
  StagePlan plan;
  plan.lambda = lambda;
  plan.cd = cd;
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    if (i > 0 && resolutions[i] != 2 * resolutions[i - 1]) {
      throw Error(Errc::InvalidArgument, "stage resolutions must double: " + std::to_string(resolutions[i - 1]) +
                                             " then " + std::to_string(resolutions[i]));
    }
    plan.stages.push_back(PatchGrid::square(resolutions[i], patch_px));
  }
  return plan;
}

StagePlan build_stage_plan(std::size_t base_resolution, std::size_t patch_px, std::size_t stage_count,
                           double lambda, const CDConfig& cd) {
  if (stage_count < 2 || stage_count > 5) throw Error(Errc::InvalidArgument, "stage_count must be in [2, 5]");
  const std::size_t top = 2 * base_resolution;
  const std::size_t step = std::size_t{1} << (stage_count - 1);
  if (top % step != 0) {
    throw Error(Errc::NonDivisibleResolution, std::to_string(top) + " cannot be halved " +
                                                  std::to_string(stage_count - 1) + " times");
  }
  std::vector<std::size_t> res;
  for (std::size_t r = top / step; r <= top; r *= 2) res.push_back(r);
  return StagePlan::from_resolutions(res, patch_px, lambda, cd);
}

PatchMask upsample_mask(const PatchMask& mask, const PatchGrid& from, const PatchGrid& to) {
  if (!mask.grid().same_layout(from)) throw Error(Errc::GridMismatch, "mask is not on the source grid");
  const BlockRatio r = block_ratio(from, to);
  if (!r.upscale) throw Error(Errc::GridMismatch, "upsample_mask target is coarser than source");
  const std::size_t tc = to.cols();
  std::vector<std::uint8_t> out(to.patch_count());
  for (std::size_t row = 0; row < to.rows(); ++row) {
    for (std::size_t col = 0; col < tc; ++col) {
      out[row * tc + col] = mask.bits()[(row / r.kr) * from.cols() + col / r.kc];
    }
  }
  return PatchMask(to, std::move(out));
}

AttentionMap pool_attention(const AttentionMap& attn, const PatchGrid& from, const PatchGrid& to, PoolMode mode) {
  if (!attn.grid.same_layout(from)) throw Error(Errc::GridMismatch, "attention is not on the source grid");
  const BlockRatio r = block_ratio(from, to);
  const double block = static_cast<double>(r.kr * r.kc);
  std::vector<double> out(to.patch_count(), 0.0);
  if (r.upscale) {
    const double scale = mode == PoolMode::MassConserving ? 1.0 / block : 1.0;
    for (std::size_t row = 0; row < to.rows(); ++row) {
      for (std::size_t col = 0; col < to.cols(); ++col) {
        out[row * to.cols() + col] = attn.values[(row / r.kr) * from.cols() + col / r.kc] * scale;
      }
    }
  } else {
    for (std::size_t row = 0; row < from.rows(); ++row) {
      for (std::size_t col = 0; col < from.cols(); ++col) {
        out[(row / r.kr) * to.cols() + col / r.kc] += attn.values[row * from.cols() + col];
      }
    }
    if (mode == PoolMode::Mean) {
      for (double& v : out) v /= block;
    }
  }
  return AttentionMap(to, std::move(out));
}

void PositionalEmbeddingGrid::validate() const {
  if (rows == 0 || cols == 0 || dim == 0) throw Error(Errc::EmptyGrid, "positional embedding grid is empty");
  if (values.size() != rows * cols * dim) {
    throw Error(Errc::ShapeMismatch, "positional embedding has " + std::to_string(values.size()) + " values, expected " +
                                         std::to_string(rows * cols * dim));
  }
  const bool has_cls = cls_embedding.has_value();
  if (has_cls != (style == ClsStyle::ClsPreserved)) {
    throw Error(Errc::InvalidArgument, "class embedding presence must match the encoder style");
  }
  if (has_cls && cls_embedding->size() != dim) throw Error(Errc::ShapeMismatch, "class embedding width");
}

PositionalEmbeddingGrid interpolate_positional_embeddings(const PositionalEmbeddingGrid& src, std::size_t target_rows,
                                                          std::size_t target_cols) {
  src.validate();
  if (target_rows == 0 || target_cols == 0) throw Error(Errc::EmptyGrid, "target grid is empty");

  // Source coordinate and the two neighbours blended for one output index.
  struct Tap {
    std::size_t lo, hi;
    double w_hi;
  };
  auto taps = [](std::size_t src_n, std::size_t dst_n) {
    std::vector<Tap> out(dst_n);
    const double scale = static_cast<double>(src_n) / static_cast<double>(dst_n);
    for (std::size_t i = 0; i < dst_n; ++i) {
      double x = (static_cast<double>(i) + 0.5) * scale - 0.5;
      x = std::clamp(x, 0.0, static_cast<double>(src_n - 1));
      const auto lo = static_cast<std::size_t>(std::floor(x));
      const std::size_t hi = std::min(lo + 1, src_n - 1);
      out[i] = {lo, hi, x - static_cast<double>(lo)};
    }
    return out;
  };
  const auto ty = taps(src.rows, target_rows);
  const auto tx = taps(src.cols, target_cols);

  PositionalEmbeddingGrid out;
  out.rows = target_rows;
  out.cols = target_cols;
  out.dim = src.dim;
  out.style = src.style;
  out.cls_embedding = src.cls_embedding;
  out.values.resize(target_rows * target_cols * src.dim);
  for (std::size_t r = 0; r < target_rows; ++r) {
    const Tap& y = ty[r];
    for (std::size_t c = 0; c < target_cols; ++c) {
      const Tap& x = tx[c];
      double* dst = &out.values[(r * target_cols + c) * src.dim];
      for (std::size_t d = 0; d < src.dim; ++d) {
        // Nested lerps reproduce equal neighbours exactly.
        const double a = src.at(y.lo, x.lo, d), b = src.at(y.lo, x.hi, d);
        const double e = src.at(y.hi, x.lo, d), f = src.at(y.hi, x.hi, d);
        const double top = a + x.w_hi * (b - a);
        const double bottom = e + x.w_hi * (f - e);
        dst[d] = top + y.w_hi * (bottom - top);
      }
    }
  }
  return out;
}

}  // namespace second
