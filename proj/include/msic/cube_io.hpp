#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msic {

// Multispectral cube of integer samples, band-planar and row-major within a
// band: samples[(b * height + y) * width + x].
class SpectralCube {
 public:
  SpectralCube() = default;
  // Zero-filled cube. Throws SizeError for zero dimensions and RangeError for
  // bit depths outside [8, 16].
  SpectralCube(int width, int height, int bands, int bit_depth);
  // Adopts samples; validates count and range.
  SpectralCube(int width, int height, int bands, int bit_depth, std::vector<std::uint16_t> samples);

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int bands() const noexcept { return bands_; }
  [[nodiscard]] int bit_depth() const noexcept { return bit_depth_; }
  [[nodiscard]] std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  [[nodiscard]] std::size_t pixel_count() const noexcept { return plane_size(); }
  [[nodiscard]] std::uint16_t max_value() const noexcept {
    return static_cast<std::uint16_t>((1U << bit_depth_) - 1U);
  }

  std::uint16_t& at(int band, int y, int x) noexcept { return samples_[index(band, y, x)]; }
  [[nodiscard]] std::uint16_t at(int band, int y, int x) const noexcept { return samples_[index(band, y, x)]; }

  [[nodiscard]] std::span<const std::uint16_t> plane(int band) const noexcept {
    return {samples_.data() + static_cast<std::size_t>(band) * plane_size(), plane_size()};
  }
  std::span<std::uint16_t> plane(int band) noexcept {
    return {samples_.data() + static_cast<std::size_t>(band) * plane_size(), plane_size()};
  }
  [[nodiscard]] const std::vector<std::uint16_t>& samples() const noexcept { return samples_; }

  [[nodiscard]] const std::vector<double>& wavelengths() const noexcept { return wavelengths_; }
  void set_wavelengths(std::vector<double> nm);

  [[nodiscard]] bool same_shape(const SpectralCube& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && bands_ == other.bands_;
  }

  friend bool operator==(const SpectralCube& a, const SpectralCube& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.bands_ == b.bands_ &&
           a.bit_depth_ == b.bit_depth_ && a.samples_ == b.samples_;
  }

 private:
  [[nodiscard]] std::size_t index(int band, int y, int x) const noexcept {
    return (static_cast<std::size_t>(band) * static_cast<std::size_t>(height_) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  int bands_ = 0;
  int bit_depth_ = 0;
  std::vector<std::uint16_t> samples_;
  std::vector<double> wavelengths_;
};

// Stack of real-valued planes (PC images, residual images). Same layout as
// SpectralCube.
struct RealPlaneStack {
  int width = 0;
  int height = 0;
  int planes = 0;
  std::vector<double> values;

  RealPlaneStack() = default;
  RealPlaneStack(int w, int h, int p)
      : width(w), height(h), planes(p), values(static_cast<std::size_t>(w) * h * p, 0.0) {}

  [[nodiscard]] std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width) * height; }
  [[nodiscard]] std::span<const double> plane(int p) const noexcept {
    return {values.data() + static_cast<std::size_t>(p) * plane_size(), plane_size()};
  }
  std::span<double> plane(int p) noexcept {
    return {values.data() + static_cast<std::size_t>(p) * plane_size(), plane_size()};
  }
  // Throws RangeError if any value is NaN or infinite.
  void check_finite() const;
};

RealPlaneStack to_real(const SpectralCube& cube);
// Rounds to nearest and clamps into [0, 2^bit_depth - 1].
SpectralCube to_cube(const RealPlaneStack& stack, int bit_depth);

// Three 10-bit channels, channel-planar.
struct RgbImage {
  static constexpr int kBitDepth = 10;
  static constexpr std::uint16_t kMax = 1023;

  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> samples;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), samples(static_cast<std::size_t>(w) * h * 3, 0) {}

  [[nodiscard]] std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width) * height; }
  [[nodiscard]] std::span<const std::uint16_t> channel(int c) const noexcept {
    return {samples.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }
  std::span<std::uint16_t> channel(int c) noexcept {
    return {samples.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// 3 x B colour-matching weights, row-major.
struct CmfMatrix {
  int bands = 0;
  std::vector<double> weights;
  std::string source;

  [[nodiscard]] double at(int channel, int band) const noexcept {
    return weights[static_cast<std::size_t>(channel) * bands + band];
  }
};

// CIE 1931 2-degree standard observer, 400-700 nm in 10 nm steps (31 bands).
const CmfMatrix& cie1931_2deg_31();

// MSRC cube files.
SpectralCube load_cube(const std::string& path);
SpectralCube parse_cube(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_cube(const SpectralCube& cube);
std::size_t store_cube(const SpectralCube& cube, const std::string& path);

inline constexpr int kCropEdge = 256;

// Four corner-anchored kCropEdge x kCropEdge crops in the order top-left,
// top-right, bottom-left, bottom-right.
std::array<SpectralCube, 4> crop_quadrants(const SpectralCube& cube);
SpectralCube crop(const SpectralCube& cube, int row, int col, int height, int width);

SpectralCube requantize(const SpectralCube& cube, int target_depth);
std::uint16_t requantize_sample(std::uint32_t sample, int source_depth, int target_depth);

// Peak used for PSNR: the maximum of the original (default) or the nominal
// 2^depth - 1.
enum class PeakMode { image_max, nominal };

inline constexpr double kLosslessPsnr = std::numeric_limits<double>::infinity();
inline bool is_lossless(double psnr_db) { return psnr_db == kLosslessPsnr; }

double mse(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b);
double mse(const SpectralCube& a, const SpectralCube& b);
// Returns kLosslessPsnr when the inputs are identical.
double psnr(const SpectralCube& original, const SpectralCube& recon, PeakMode mode = PeakMode::image_max);
double psnr(const RgbImage& original, const RgbImage& recon, PeakMode mode = PeakMode::image_max);
double psnr_from_mse(double mse_value, double peak);

RgbImage render_rgb(const SpectralCube& cube, const CmfMatrix& cmf);

// Binary PPM (P6, maxval 65535) with 10-bit values scaled to 16 bits.
std::vector<std::uint8_t> encode_ppm16(const RgbImage& image);

}  // namespace msic
