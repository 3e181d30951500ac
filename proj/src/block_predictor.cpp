#include "msic/block_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msic/byte_io.hpp"
#include "msic/errors.hpp"
#include "msic/linalg.hpp"

namespace msic {

namespace {

constexpr double kDampingScale = 1e-8;
constexpr int kRefinementSteps = 8;
constexpr std::size_t kWeightHeaderBytes = 11;

}  // namespace

BlockGrid::BlockGrid(int plane_width, int plane_height, int block_size)
    : width_(plane_width), height_(plane_height), block_size_(block_size) {
  if (plane_width < 1 || plane_height < 1) throw SizeError("block grid needs a non-empty plane");
  if (block_size < 1) throw ParamError("block size must be positive");
  blocks_x_ = (plane_width + block_size - 1) / block_size;
  blocks_y_ = (plane_height + block_size - 1) / block_size;
}

BlockExtent BlockGrid::block(int index) const noexcept {
  const int bx = index % blocks_x_;
  const int by = index / blocks_x_;
  BlockExtent e;
  e.x0 = bx * block_size_;
  e.y0 = by * block_size_;
  e.width = std::min(block_size_, width_ - e.x0);
  e.height = std::min(block_size_, height_ - e.y0);
  return e;
}

std::vector<double> gather_block(PlaneView plane, int plane_width, const BlockExtent& block) {
  std::vector<double> out;
  out.reserve(block.pixels());
  for (int y = 0; y < block.height; ++y) {
    const auto row = plane.subspan(static_cast<std::size_t>(block.y0 + y) * plane_width + block.x0,
                                   static_cast<std::size_t>(block.width));
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

std::vector<double> fit_ls(std::span<const double> target, const std::vector<std::vector<double>>& regressors,
                           bool intercept) {
  const std::size_t n = target.size();
  for (const auto& r : regressors) {
    if (r.size() != n) throw DimensionError("regressor block size differs from target block");
  }
  const int dim = static_cast<int>(regressors.size()) + (intercept ? 1 : 0);
  if (dim == 0) return {};

  linalg::SquareMatrix a(dim);
  std::vector<double> b(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> row(static_cast<std::size_t>(dim), 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < regressors.size(); ++k) row[k] = regressors[k][i];
    for (int r = 0; r < dim; ++r) {
      b[static_cast<std::size_t>(r)] += row[static_cast<std::size_t>(r)] * target[i];
      for (int c = r; c < dim; ++c) a(r, c) += row[static_cast<std::size_t>(r)] * row[static_cast<std::size_t>(c)];
    }
  }
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < r; ++c) a(r, c) = a(c, r);
  }

  const double trace = a.trace();
  if (trace <= 0.0) return std::vector<double>(static_cast<std::size_t>(dim), 0.0);
  const double damping = kDampingScale * trace / dim;

  std::vector<double> w = linalg::cholesky_solve(a, b, damping);
  // Iterated Tikhonov: converges to the least-squares solution on the range of
  // A and leaves null-space components at their damped values.
  for (int step = 0; step < kRefinementSteps; ++step) {
    std::vector<double> r(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      double s = b[static_cast<std::size_t>(i)];
      for (int j = 0; j < dim; ++j) s -= a(i, j) * w[static_cast<std::size_t>(j)];
      r[static_cast<std::size_t>(i)] = s;
    }
    const auto dw = linalg::cholesky_solve(a, r, damping);
    for (int i = 0; i < dim; ++i) w[static_cast<std::size_t>(i)] += dw[static_cast<std::size_t>(i)];
  }
  return w;
}

QuantizedWeights quantize_weights(std::span<const double> weights, int weight_step_exp, bool intercept) {
  QuantizedWeights q;
  q.indices.reserve(weights.size());
  q.values.reserve(weights.size());
  constexpr double hi = std::numeric_limits<std::int16_t>::max();
  constexpr double lo = std::numeric_limits<std::int16_t>::min();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const bool is_intercept = intercept && i + 1 == weights.size();
    const int exp = weight_step_exp + (is_intercept ? kInterceptStepShift : 0);
    double idx = std::round(std::ldexp(weights[i], -exp));  // std::round: ties away from zero
    if (!std::isfinite(idx) || idx > hi || idx < lo) {
      ++q.saturated;
      idx = std::isnan(idx) ? 0.0 : std::clamp(idx, lo, hi);
    }
    q.indices.push_back(static_cast<std::int16_t>(idx));
    q.values.push_back(std::ldexp(idx, exp));
  }
  return q;
}

double WeightSet::weight(int target, int block, int k) const noexcept {
  const int exp = k == regressors ? intercept_step_exp : weight_step_exp;
  return std::ldexp(static_cast<double>(indices[offset(target, block) + static_cast<std::size_t>(k)]), exp);
}

std::vector<double> WeightSet::weights(int target, int block) const {
  std::vector<double> w(static_cast<std::size_t>(stride()));
  for (int k = 0; k < stride(); ++k) w[static_cast<std::size_t>(k)] = weight(target, block, k);
  return w;
}

std::vector<double> predict_plane(const std::vector<PlaneView>& regressors, const WeightSet& weights, int target,
                                  const BlockGrid& grid) {
  if (static_cast<int>(regressors.size()) != weights.regressors) {
    throw DimensionError("regressor count differs from weight set");
  }
  if (grid.blocks_x() != weights.blocks_x || grid.blocks_y() != weights.blocks_y ||
      grid.block_size() != weights.block_size) {
    throw DimensionError("block grid differs from weight set");
  }
  if (target < 0 || target >= weights.targets) throw DimensionError("target index out of range");
  const std::size_t plane_size = static_cast<std::size_t>(grid.plane_width()) * grid.plane_height();
  for (const auto& r : regressors) {
    if (r.size() != plane_size) throw DimensionError("regressor plane size differs from grid");
  }

  std::vector<double> out(plane_size, 0.0);
  const int w = grid.plane_width();
  for (int blk = 0; blk < grid.count(); ++blk) {
    const auto e = grid.block(blk);
    const auto wts = weights.weights(target, blk);
    for (int y = e.y0; y < e.y0 + e.height; ++y) {
      for (int x = e.x0; x < e.x0 + e.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        double v = wts.back();
        for (std::size_t k = 0; k < regressors.size(); ++k) v += wts[k] * regressors[k][i];
        out[i] = v;
      }
    }
  }
  return out;
}

TargetResidual closed_loop_residual(PlaneView original, const std::vector<PlaneView>& regressors, int weight_step_exp,
                                    const BlockGrid& grid, bool intercept) {
  const std::size_t plane_size = static_cast<std::size_t>(grid.plane_width()) * grid.plane_height();
  if (original.size() != plane_size) throw DimensionError("target plane size differs from grid");

  WeightSet ws;
  ws.block_size = grid.block_size();
  ws.blocks_x = grid.blocks_x();
  ws.blocks_y = grid.blocks_y();
  ws.targets = 1;
  ws.regressors = static_cast<int>(regressors.size());
  ws.weight_step_exp = weight_step_exp;
  ws.intercept_step_exp = weight_step_exp + kInterceptStepShift;

  TargetResidual out;
  for (int blk = 0; blk < grid.count(); ++blk) {
    const auto e = grid.block(blk);
    const auto target = gather_block(original, grid.plane_width(), e);
    std::vector<std::vector<double>> regs;
    regs.reserve(regressors.size());
    for (const auto& r : regressors) regs.push_back(gather_block(r, grid.plane_width(), e));
    auto w = fit_ls(target, regs, intercept);
    if (!intercept) w.push_back(0.0);
    const auto q = quantize_weights(w, weight_step_exp, true);
    out.saturated += q.saturated;
    out.indices.insert(out.indices.end(), q.indices.begin(), q.indices.end());
  }
  ws.indices = out.indices;
  ws.saturated = out.saturated;

  const auto prediction = predict_plane(regressors, ws, 0, grid);
  out.residual.resize(plane_size);
  for (std::size_t i = 0; i < plane_size; ++i) out.residual[i] = original[i] - prediction[i];
  return out;
}

std::vector<std::uint8_t> serialize_weights(const WeightSet& weights) {
  ByteWriter out;
  out.u16(static_cast<std::uint16_t>(weights.block_size));
  out.u16(static_cast<std::uint16_t>(weights.blocks_x));
  out.u16(static_cast<std::uint16_t>(weights.blocks_y));
  out.u16(static_cast<std::uint16_t>(weights.targets));
  out.u8(static_cast<std::uint8_t>(weights.regressors));
  out.i8(static_cast<std::int8_t>(weights.weight_step_exp));
  out.i8(static_cast<std::int8_t>(weights.intercept_step_exp));
  for (auto idx : weights.indices) out.i16(idx);
  return out.take();
}

WeightSet parse_weights(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  WeightSet ws;
  ws.block_size = in.u16();
  ws.blocks_x = in.u16();
  ws.blocks_y = in.u16();
  ws.targets = in.u16();
  ws.regressors = in.u8();
  ws.weight_step_exp = in.i8();
  ws.intercept_step_exp = in.i8();
  if (ws.block_size < 1 || ws.blocks_x < 1 || ws.blocks_y < 1 || ws.targets < 1) {
    throw FormatError("weight section has invalid dimensions");
  }
  const std::size_t count =
      static_cast<std::size_t>(ws.targets) * ws.blocks_x * ws.blocks_y * static_cast<std::size_t>(ws.stride());
  if (bytes.size() != kWeightHeaderBytes + 2 * count) throw LengthError("weight section length mismatch");
  ws.indices.resize(count);
  for (auto& idx : ws.indices) idx = in.i16();
  return ws;
}

}  // namespace msic
