#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace msic {

inline constexpr int kDefaultPredictionBlock = 64;
inline constexpr int kDefaultWeightStepExp = -12;
// Intercepts are quantized 2^7 times coarser than regressor weights so that
// 16-bit indices cover offsets of +/-1024 in the sample domain.
inline constexpr int kInterceptStepShift = 7;

struct BlockExtent {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
  [[nodiscard]] std::size_t pixels() const noexcept { return static_cast<std::size_t>(width) * height; }
};

// Non-overlapping square blocks tiling a plane; edge blocks are clipped.
class BlockGrid {
 public:
  BlockGrid(int plane_width, int plane_height, int block_size);

  [[nodiscard]] int block_size() const noexcept { return block_size_; }
  [[nodiscard]] int blocks_x() const noexcept { return blocks_x_; }
  [[nodiscard]] int blocks_y() const noexcept { return blocks_y_; }
  [[nodiscard]] int count() const noexcept { return blocks_x_ * blocks_y_; }
  [[nodiscard]] int plane_width() const noexcept { return width_; }
  [[nodiscard]] int plane_height() const noexcept { return height_; }
  [[nodiscard]] BlockExtent block(int index) const noexcept;

 private:
  int width_;
  int height_;
  int block_size_;
  int blocks_x_;
  int blocks_y_;
};

// Read-only view of a real-valued plane.
using PlaneView = std::span<const double>;

// Copies the samples of one block out of a plane, row-major.
std::vector<double> gather_block(PlaneView plane, int plane_width, const BlockExtent& block);

// Least-squares weights for target ~ [regressors, 1] w (intercept last when
// enabled). Normal equations with Tikhonov damping 1e-8 * trace / (R+1),
// followed by iterative refinement against the undamped system.
std::vector<double> fit_ls(std::span<const double> target, const std::vector<std::vector<double>>& regressors,
                           bool intercept = true);

struct QuantizedWeights {
  std::vector<std::int16_t> indices;
  std::vector<double> values;
  int saturated = 0;
};

// Round-to-nearest (ties away from zero) into i16 indices; regressor weights
// use 2^weight_step_exp, the intercept (last entry when present) a step
// 2^kInterceptStepShift coarser. Overflowing entries clamp and are counted.
QuantizedWeights quantize_weights(std::span<const double> weights, int weight_step_exp, bool intercept = true);

// Per (target, block) weights, quantized.
struct WeightSet {
  int block_size = kDefaultPredictionBlock;
  int blocks_x = 0;
  int blocks_y = 0;
  int targets = 0;
  int regressors = 0;
  int weight_step_exp = kDefaultWeightStepExp;
  int intercept_step_exp = kDefaultWeightStepExp + kInterceptStepShift;
  // target-major, then block row-major, then regressor index, intercept last
  std::vector<std::int16_t> indices;
  int saturated = 0;

  [[nodiscard]] int stride() const noexcept { return regressors + 1; }
  [[nodiscard]] std::size_t offset(int target, int block) const noexcept {
    return (static_cast<std::size_t>(target) * blocks_x * blocks_y + static_cast<std::size_t>(block)) * stride();
  }
  [[nodiscard]] double weight(int target, int block, int k) const noexcept;
  [[nodiscard]] std::vector<double> weights(int target, int block) const;
};

// Evaluates the quantized per-block model of one target plane.
std::vector<double> predict_plane(const std::vector<PlaneView>& regressors, const WeightSet& weights, int target,
                                  const BlockGrid& grid);

struct TargetResidual {
  std::vector<std::int16_t> indices;  // blocks * (R+1), in block order
  std::vector<double> residual;       // original - prediction with quantized weights
  int saturated = 0;
};

// Fits every block of one target plane, quantizes the weights and subtracts
// the prediction formed with the quantized weights.
TargetResidual closed_loop_residual(PlaneView original, const std::vector<PlaneView>& regressors, int weight_step_exp,
                                    const BlockGrid& grid, bool intercept = true);

// Weight section: u16 block size, u16 blocks_x, u16 blocks_y, u16 targets,
// u8 regressors, i8 weight step exponent, i8 intercept step exponent, then the
// i16 indices.
std::vector<std::uint8_t> serialize_weights(const WeightSet& weights);
WeightSet parse_weights(std::span<const std::uint8_t> bytes);

}  // namespace msic
