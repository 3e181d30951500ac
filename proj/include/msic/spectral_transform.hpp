#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msic/cube_io.hpp"

namespace msic {

// Default basis quantizer step exponent: basis entries and the mean are
// quantized with step 2^-13.
inline constexpr int kDefaultBasisStepExp = -13;

// Uniform power-of-two quantizer output with fixed-width indices.
struct QuantizedVectorBlock {
  int step_exp = 0;
  int width_bits = 16;
  std::vector<std::int32_t> indices;

  [[nodiscard]] double step() const noexcept;
  [[nodiscard]] double value(std::size_t i) const noexcept { return static_cast<double>(indices[i]) * step(); }
};

struct PcaBasis {
  int bands = 0;
  int n_components = 0;
  std::vector<double> mean;         // length bands
  std::vector<double> basis;        // bands x n_components, column-major
  std::vector<double> eigenvalues;  // length n_components; empty after parsing a section
  int step_exp = 0;
  bool quantized = false;

  [[nodiscard]] double at(int band, int component) const noexcept {
    return basis[static_cast<std::size_t>(component) * bands + band];
  }
  [[nodiscard]] std::span<const double> column(int component) const noexcept {
    return {basis.data() + static_cast<std::size_t>(component) * bands, static_cast<std::size_t>(bands)};
  }
};

struct PcaOptions {
  // Subtract (and transmit) the per-band mean before the eigen-analysis.
  bool center = true;
};

// Full-rank PCA over the spectral vectors of every pixel. Covariance uses the
// N-1 divisor; columns are sorted by non-increasing eigenvalue and signed so
// that each column's largest-magnitude entry is positive.
PcaBasis fit_pca(const RealPlaneStack& data, PcaOptions options = {});
PcaBasis fit_pca(const SpectralCube& cube, PcaOptions options = {});

PcaBasis truncate(const PcaBasis& basis, int n_components);

struct QuantizedBasis {
  PcaBasis basis;  // dequantized values, quantized == true
  QuantizedVectorBlock mean;   // 32-bit indices
  QuantizedVectorBlock vectors;  // 16-bit indices, column-major
};

// Rounds basis entries and the mean to multiples of 2^step_exp (ties away
// from zero). Throws RangeError if an index does not fit its width.
QuantizedBasis quantize_basis(const PcaBasis& basis, int step_exp = kDefaultBasisStepExp);

// Per-pixel coefficients V^T (s - mean), one plane per component.
RealPlaneStack forward(const RealPlaneStack& data, const PcaBasis& basis);
RealPlaneStack forward(const SpectralCube& cube, const PcaBasis& basis);

// Per-pixel V c + mean, one plane per band. Values are not clamped.
RealPlaneStack inverse(const RealPlaneStack& coefficients, const PcaBasis& basis);

// Basis section: u16 bands, u16 n_components, i8 step_exp, i32 mean indices,
// i16 basis indices (column-major).
std::vector<std::uint8_t> serialize_basis(const QuantizedBasis& q);
QuantizedBasis parse_basis(std::span<const std::uint8_t> bytes);

}  // namespace msic
