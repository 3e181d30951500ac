#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace msic {

inline constexpr int kCodecBitDepth = 10;
inline constexpr std::uint16_t kCodecMax = 1023;
inline constexpr int kTransformSize = 8;
inline constexpr int kResidualOffset = 512;
inline constexpr int kMaxQp = 63;

// One 10-bit monochrome picture, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> samples;

  Plane() = default;
  Plane(int w, int h) : width(w), height(h), samples(static_cast<std::size_t>(w) * h, 0) {}
  Plane(int w, int h, std::vector<std::uint16_t> s) : width(w), height(h), samples(std::move(s)) {}

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
  friend bool operator==(const Plane&, const Plane&) = default;
};

// Quantizer step for a QP: one octave per 6 QP, step 1 at QP 4.
double qp_to_step(int qp);

enum class PlaneMode : std::uint8_t { intra = 0, bi = 1 };

struct CodedPlane {
  PlaneMode mode = PlaneMode::intra;
  int qp = 0;
  std::vector<std::uint8_t> payload;
  Plane reconstruction;
  // Residual samples clipped into [0, 1023] by the offset-512 convention.
  std::size_t clamped_samples = 0;

  [[nodiscard]] std::size_t bits() const noexcept { return payload.size() * 8; }
};

// 8x8 DCT-II, uniform quantization, adaptive binary range coding of
// (coded-block flag, last position, significance, magnitude, sign). The
// reconstruction stored in the result is exactly what decode_intra returns.
CodedPlane encode_intra(const Plane& plane, int qp);
Plane decode_intra(std::span<const std::uint8_t> payload);

// Codes plane - round((a + b) / 2) + 512, clipped to [0, 1023], with the
// intra machinery.
CodedPlane encode_inter_bi(const Plane& plane, const Plane& ref_a, const Plane& ref_b, int qp);
Plane decode_inter_bi(std::span<const std::uint8_t> payload, const Plane& ref_a, const Plane& ref_b);

// Mode stored in the first payload byte.
PlaneMode payload_mode(std::span<const std::uint8_t> payload);

Plane bi_prediction(const Plane& ref_a, const Plane& ref_b);

}  // namespace msic
