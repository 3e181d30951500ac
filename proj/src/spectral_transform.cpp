#include "msic/spectral_transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "msic/byte_io.hpp"
#include "msic/errors.hpp"
#include "msic/linalg.hpp"

namespace msic {

double QuantizedVectorBlock::step() const noexcept { return std::ldexp(1.0, step_exp); }

namespace {

constexpr double kEigenTolerance = 1e-12;

std::int64_t round_away(double x) { return static_cast<std::int64_t>(std::llround(x)); }

QuantizedVectorBlock quantize_values(std::span<const double> values, int step_exp, int width_bits) {
  QuantizedVectorBlock q;
  q.step_exp = step_exp;
  q.width_bits = width_bits;
  const std::int64_t hi = (std::int64_t{1} << (width_bits - 1)) - 1;
  const std::int64_t lo = -(std::int64_t{1} << (width_bits - 1));
  q.indices.reserve(values.size());
  for (double v : values) {
    const std::int64_t idx = round_away(std::ldexp(v, -step_exp));
    if (idx < lo || idx > hi) throw RangeError("quantizer index overflows " + std::to_string(width_bits) + " bits");
    q.indices.push_back(static_cast<std::int32_t>(idx));
  }
  return q;
}

}  // namespace

PcaBasis fit_pca(const RealPlaneStack& data, PcaOptions options) {
  const int bands = data.planes;
  const std::size_t n = data.plane_size();
  if (bands < 1) throw SizeError("PCA needs at least one band");
  if (n < 2) throw SizeError("PCA needs at least two pixels");
  data.check_finite();

  PcaBasis out;
  out.bands = bands;
  out.n_components = bands;
  out.mean.assign(static_cast<std::size_t>(bands), 0.0);
  if (options.center) {
    for (int b = 0; b < bands; ++b) {
      const auto p = data.plane(b);
      out.mean[static_cast<std::size_t>(b)] = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(n);
    }
  }

  linalg::SquareMatrix cov(bands);
  std::vector<double> centered(n * static_cast<std::size_t>(bands));
  for (int b = 0; b < bands; ++b) {
    const auto p = data.plane(b);
    const double m = out.mean[static_cast<std::size_t>(b)];
    for (std::size_t i = 0; i < n; ++i) centered[static_cast<std::size_t>(b) * n + i] = p[i] - m;
  }
  for (int r = 0; r < bands; ++r) {
    const double* pr = centered.data() + static_cast<std::size_t>(r) * n;
    for (int c = r; c < bands; ++c) {
      const double* pc = centered.data() + static_cast<std::size_t>(c) * n;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += pr[i] * pc[i];
      cov(r, c) = s / static_cast<double>(n - 1);
      cov(c, r) = cov(r, c);
    }
  }

  const auto eig = linalg::jacobi_eigen(cov, kEigenTolerance);

  std::vector<int> order(static_cast<std::size_t>(bands));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return eig.values[static_cast<std::size_t>(a)] > eig.values[static_cast<std::size_t>(b)];
  });

  out.basis.resize(static_cast<std::size_t>(bands) * bands);
  out.eigenvalues.resize(static_cast<std::size_t>(bands));
  for (int k = 0; k < bands; ++k) {
    const int src = order[static_cast<std::size_t>(k)];
    // a covariance is positive semi-definite; negative values are round-off
    out.eigenvalues[static_cast<std::size_t>(k)] = std::max(0.0, eig.values[static_cast<std::size_t>(src)]);

    int pivot = 0;
    for (int b = 1; b < bands; ++b) {
      if (std::abs(eig.vectors(b, src)) > std::abs(eig.vectors(pivot, src))) pivot = b;
    }
    const double sign = eig.vectors(pivot, src) < 0.0 ? -1.0 : 1.0;
    for (int b = 0; b < bands; ++b) {
      out.basis[static_cast<std::size_t>(k) * bands + b] = sign * eig.vectors(b, src);
    }
  }
  return out;
}

PcaBasis fit_pca(const SpectralCube& cube, PcaOptions options) { return fit_pca(to_real(cube), options); }

PcaBasis truncate(const PcaBasis& basis, int n_components) {
  if (n_components < 1 || n_components > basis.n_components) {
    throw ParamError("n_components must lie in [1, " + std::to_string(basis.n_components) + "]");
  }
  PcaBasis out = basis;
  out.n_components = n_components;
  out.basis.resize(static_cast<std::size_t>(n_components) * basis.bands);
  if (!out.eigenvalues.empty()) out.eigenvalues.resize(static_cast<std::size_t>(n_components));
  return out;
}

QuantizedBasis quantize_basis(const PcaBasis& basis, int step_exp) {
  if (basis.quantized) throw ParamError("basis is already quantized");
  QuantizedBasis q;
  q.mean = quantize_values(basis.mean, step_exp, 32);
  q.vectors = quantize_values(basis.basis, step_exp, 16);
  q.basis = basis;
  q.basis.step_exp = step_exp;
  q.basis.quantized = true;
  for (std::size_t i = 0; i < q.basis.mean.size(); ++i) q.basis.mean[i] = q.mean.value(i);
  for (std::size_t i = 0; i < q.basis.basis.size(); ++i) q.basis.basis[i] = q.vectors.value(i);
  return q;
}

RealPlaneStack forward(const RealPlaneStack& data, const PcaBasis& basis) {
  if (data.planes != basis.bands) throw DimensionError("basis band count does not match data");
  const std::size_t n = data.plane_size();
  RealPlaneStack out(data.width, data.height, basis.n_components);
  for (int b = 0; b < basis.bands; ++b) {
    const auto src = data.plane(b);
    const double m = basis.mean[static_cast<std::size_t>(b)];
    for (int k = 0; k < basis.n_components; ++k) {
      const double v = basis.at(b, k);
      auto dst = out.plane(k);
      for (std::size_t i = 0; i < n; ++i) dst[i] += v * (src[i] - m);
    }
  }
  return out;
}

RealPlaneStack forward(const SpectralCube& cube, const PcaBasis& basis) { return forward(to_real(cube), basis); }

RealPlaneStack inverse(const RealPlaneStack& coefficients, const PcaBasis& basis) {
  if (coefficients.planes != basis.n_components) {
    throw DimensionError("coefficient plane count does not match basis components");
  }
  const std::size_t n = coefficients.plane_size();
  RealPlaneStack out(coefficients.width, coefficients.height, basis.bands);
  for (int b = 0; b < basis.bands; ++b) {
    auto dst = out.plane(b);
    std::fill(dst.begin(), dst.end(), basis.mean[static_cast<std::size_t>(b)]);
    for (int k = 0; k < basis.n_components; ++k) {
      const double v = basis.at(b, k);
      const auto src = coefficients.plane(k);
      for (std::size_t i = 0; i < n; ++i) dst[i] += v * src[i];
    }
  }
  return out;
}

std::vector<std::uint8_t> serialize_basis(const QuantizedBasis& q) {
  ByteWriter out;
  out.u16(static_cast<std::uint16_t>(q.basis.bands));
  out.u16(static_cast<std::uint16_t>(q.basis.n_components));
  out.i8(static_cast<std::int8_t>(q.basis.step_exp));
  for (auto idx : q.mean.indices) out.i32(idx);
  for (auto idx : q.vectors.indices) out.i16(static_cast<std::int16_t>(idx));
  return out.take();
}

QuantizedBasis parse_basis(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  QuantizedBasis q;
  const int bands = in.u16();
  const int comps = in.u16();
  const int step_exp = in.i8();
  if (bands < 1 || comps < 1 || comps > bands) throw FormatError("basis section has invalid dimensions");
  const std::size_t expected = 5 + 4 * static_cast<std::size_t>(bands) + 2 * static_cast<std::size_t>(bands) * comps;
  if (bytes.size() != expected) throw LengthError("basis section length mismatch");

  q.mean.step_exp = step_exp;
  q.mean.width_bits = 32;
  q.mean.indices.resize(static_cast<std::size_t>(bands));
  for (auto& idx : q.mean.indices) idx = in.i32();
  q.vectors.step_exp = step_exp;
  q.vectors.width_bits = 16;
  q.vectors.indices.resize(static_cast<std::size_t>(bands) * comps);
  for (auto& idx : q.vectors.indices) idx = in.i16();

  PcaBasis& b = q.basis;
  b.bands = bands;
  b.n_components = comps;
  b.step_exp = step_exp;
  b.quantized = true;
  b.mean.resize(q.mean.indices.size());
  for (std::size_t i = 0; i < b.mean.size(); ++i) b.mean[i] = q.mean.value(i);
  b.basis.resize(q.vectors.indices.size());
  for (std::size_t i = 0; i < b.basis.size(); ++i) b.basis[i] = q.vectors.value(i);
  return q;
}

}  // namespace msic
