#include "msic/cube_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "msic/byte_io.hpp"
#include "msic/errors.hpp"

namespace msic {

namespace {

constexpr char kCubeMagic[5] = "MSRC";
constexpr std::uint8_t kCubeVersion = 1;
constexpr std::size_t kCubeHeaderBytes = 16;

void check_shape(int width, int height, int bands, int bit_depth) {
  if (width < 1 || height < 1 || bands < 1) throw SizeError("cube dimensions must be positive");
  if (width > 0xFFFF || height > 0xFFFF || bands > 0xFFFF) throw SizeError("cube dimension exceeds 65535");
  if (bit_depth < 8 || bit_depth > 16) throw RangeError("bit depth must lie in [8, 16]");
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

SpectralCube::SpectralCube(int width, int height, int bands, int bit_depth)
    : width_(width), height_(height), bands_(bands), bit_depth_(bit_depth) {
  check_shape(width, height, bands, bit_depth);
  samples_.assign(plane_size() * static_cast<std::size_t>(bands), 0);
}

SpectralCube::SpectralCube(int width, int height, int bands, int bit_depth, std::vector<std::uint16_t> samples)
    : width_(width), height_(height), bands_(bands), bit_depth_(bit_depth), samples_(std::move(samples)) {
  check_shape(width, height, bands, bit_depth);
  if (samples_.size() != plane_size() * static_cast<std::size_t>(bands)) {
    throw LengthError("sample count does not match cube dimensions");
  }
  const auto limit = max_value();
  if (std::any_of(samples_.begin(), samples_.end(), [limit](std::uint16_t s) { return s > limit; })) {
    throw RangeError("sample exceeds declared bit depth");
  }
}

void SpectralCube::set_wavelengths(std::vector<double> nm) {
  if (!nm.empty() && nm.size() != static_cast<std::size_t>(bands_)) {
    throw DimensionError("wavelength list length must equal band count");
  }
  wavelengths_ = std::move(nm);
}

void RealPlaneStack::check_finite() const {
  if (std::any_of(values.begin(), values.end(), [](double v) { return !std::isfinite(v); })) {
    throw RangeError("plane stack contains non-finite values");
  }
}

RealPlaneStack to_real(const SpectralCube& cube) {
  RealPlaneStack out(cube.width(), cube.height(), cube.bands());
  std::copy(cube.samples().begin(), cube.samples().end(), out.values.begin());
  return out;
}

SpectralCube to_cube(const RealPlaneStack& stack, int bit_depth) {
  SpectralCube cube(stack.width, stack.height, stack.planes, bit_depth);
  const double hi = cube.max_value();
  auto dst = cube.plane(0).data();
  for (std::size_t i = 0; i < stack.values.size(); ++i) {
    const double r = std::nearbyint(std::clamp(stack.values[i], 0.0, hi));
    dst[i] = static_cast<std::uint16_t>(r);
  }
  return cube;
}

SpectralCube parse_cube(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (bytes.size() < kCubeHeaderBytes) throw FormatError("MSRC header truncated");
  if (!in.tag_is(kCubeMagic)) throw FormatError("missing MSRC magic");
  const auto version = in.u8();
  if (version != kCubeVersion) throw FormatError("unsupported MSRC version " + std::to_string(version));
  const int bit_depth = in.u8();
  const int bands = in.u16();
  const int width = in.u16();
  const int height = in.u16();
  const auto reserved = in.u32();
  if (reserved != 0) throw FormatError("MSRC reserved field must be zero");
  if (bit_depth < 8 || bit_depth > 16) throw FormatError("MSRC bit depth outside [8, 16]");
  if (width == 0 || height == 0 || bands == 0) throw FormatError("MSRC dimensions must be positive");

  const std::size_t count = static_cast<std::size_t>(width) * height * bands;
  if (in.remaining() != count * 2) {
    throw LengthError("MSRC payload holds " + std::to_string(in.remaining() / 2) + " samples, header declares " +
                      std::to_string(count));
  }
  std::vector<std::uint16_t> samples(count);
  for (auto& s : samples) s = in.u16();
  return {width, height, bands, bit_depth, std::move(samples)};
}

SpectralCube load_cube(const std::string& path) { return parse_cube(read_file_bytes(path)); }

std::vector<std::uint8_t> serialize_cube(const SpectralCube& cube) {
  ByteWriter out;
  out.tag(kCubeMagic);
  out.u8(kCubeVersion);
  out.u8(static_cast<std::uint8_t>(cube.bit_depth()));
  out.u16(static_cast<std::uint16_t>(cube.bands()));
  out.u16(static_cast<std::uint16_t>(cube.width()));
  out.u16(static_cast<std::uint16_t>(cube.height()));
  out.u32(0);
  for (auto s : cube.samples()) out.u16(s);
  return out.take();
}

std::size_t store_cube(const SpectralCube& cube, const std::string& path) {
  const auto bytes = serialize_cube(cube);
  write_file_bytes(path, bytes);
  return bytes.size();
}

SpectralCube crop(const SpectralCube& cube, int row, int col, int height, int width) {
  if (row < 0 || col < 0 || height < 1 || width < 1 || row + height > cube.height() || col + width > cube.width()) {
    throw SizeError("crop window outside cube");
  }
  SpectralCube out(width, height, cube.bands(), cube.bit_depth());
  for (int b = 0; b < cube.bands(); ++b) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) out.at(b, y, x) = cube.at(b, row + y, col + x);
    }
  }
  out.set_wavelengths(cube.wavelengths());
  return out;
}

std::array<SpectralCube, 4> crop_quadrants(const SpectralCube& cube) {
  if (cube.width() < kCropEdge || cube.height() < kCropEdge) {
    throw SizeError("cube must be at least 256x256 to crop quadrants");
  }
  const int bottom = cube.height() - kCropEdge;
  const int right = cube.width() - kCropEdge;
  return {crop(cube, 0, 0, kCropEdge, kCropEdge), crop(cube, 0, right, kCropEdge, kCropEdge),
          crop(cube, bottom, 0, kCropEdge, kCropEdge), crop(cube, bottom, right, kCropEdge, kCropEdge)};
}

std::uint16_t requantize_sample(std::uint32_t sample, int source_depth, int target_depth) {
  const std::uint64_t src_max = (1ULL << source_depth) - 1;
  const std::uint64_t dst_max = (1ULL << target_depth) - 1;
  // round-half-up of sample * dst_max / src_max in integer arithmetic
  const std::uint64_t v = (2 * sample * dst_max + src_max) / (2 * src_max);
  return static_cast<std::uint16_t>(std::min(v, dst_max));
}

SpectralCube requantize(const SpectralCube& cube, int target_depth) {
  if (target_depth < 8 || target_depth > 16) throw RangeError("target bit depth must lie in [8, 16]");
  std::vector<std::uint16_t> out(cube.samples().size());
  std::transform(cube.samples().begin(), cube.samples().end(), out.begin(), [&](std::uint16_t s) {
    return requantize_sample(s, cube.bit_depth(), target_depth);
  });
  SpectralCube result(cube.width(), cube.height(), cube.bands(), target_depth, std::move(out));
  result.set_wavelengths(cube.wavelengths());
  return result;
}

double mse(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b) {
  if (a.size() != b.size()) throw DimensionError("mse operands differ in size");
  if (a.empty()) throw DimensionError("mse of empty data");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double mse(const SpectralCube& a, const SpectralCube& b) {
  if (!a.same_shape(b)) throw DimensionError("mse operands differ in shape");
  return mse(std::span(a.samples()), std::span(b.samples()));
}

double psnr_from_mse(double mse_value, double peak) {
  if (peak <= 0.0) throw UndefinedMetricError("PSNR undefined for an all-zero original");
  if (mse_value == 0.0) return kLosslessPsnr;
  return 10.0 * std::log10(peak * peak / mse_value);
}

double psnr(const SpectralCube& original, const SpectralCube& recon, PeakMode mode) {
  const double err = mse(original, recon);
  const double peak = mode == PeakMode::nominal
                          ? static_cast<double>(original.max_value())
                          : static_cast<double>(*std::max_element(original.samples().begin(), original.samples().end()));
  return psnr_from_mse(err, peak);
}

double psnr(const RgbImage& original, const RgbImage& recon, PeakMode mode) {
  if (original.width != recon.width || original.height != recon.height) {
    throw DimensionError("psnr operands differ in shape");
  }
  const double err = mse(std::span(original.samples), std::span(recon.samples));
  const double peak = mode == PeakMode::nominal
                          ? static_cast<double>(RgbImage::kMax)
                          : static_cast<double>(*std::max_element(original.samples.begin(), original.samples.end()));
  return psnr_from_mse(err, peak);
}

RgbImage render_rgb(const SpectralCube& cube, const CmfMatrix& cmf) {
  if (cmf.bands != cube.bands()) throw DimensionError("CMF band count does not match cube");
  const std::size_t n = cube.plane_size();
  std::vector<double> tristimulus(3 * n, 0.0);
  for (int c = 0; c < 3; ++c) {
    auto dst = std::span(tristimulus).subspan(static_cast<std::size_t>(c) * n, n);
    for (int b = 0; b < cube.bands(); ++b) {
      const double w = cmf.at(c, b);
      if (w == 0.0) continue;
      const auto src = cube.plane(b);
      for (std::size_t i = 0; i < n; ++i) dst[i] += w * src[i];
    }
  }
  RgbImage rgb(cube.width(), cube.height());
  const double peak = *std::max_element(tristimulus.begin(), tristimulus.end());
  if (peak <= 0.0) return rgb;
  const double gain = RgbImage::kMax / peak;
  for (std::size_t i = 0; i < tristimulus.size(); ++i) {
    const double v = std::nearbyint(gain * tristimulus[i]);
    rgb.samples[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, static_cast<double>(RgbImage::kMax)));
  }
  return rgb;
}

std::vector<std::uint8_t> encode_ppm16(const RgbImage& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::size_t n = image.plane_size();
  out.reserve(out.size() + n * 6);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const std::uint32_t v10 = image.samples[static_cast<std::size_t>(c) * n + i];
      const auto v16 = static_cast<std::uint16_t>((v10 * 65535U + 511U) / 1023U);
      out.push_back(static_cast<std::uint8_t>(v16 >> 8U));  // PPM is big-endian
      out.push_back(static_cast<std::uint8_t>(v16 & 0xFFU));
    }
  }
  return out;
}

const CmfMatrix& cie1931_2deg_31() {
  static const CmfMatrix table = [] {
    // x-bar, y-bar, z-bar at 400, 410, ..., 700 nm
    constexpr std::array<std::array<double, 3>, 31> rows{{
        {0.014310, 0.000396, 0.067850}, {0.043510, 0.001210, 0.207400}, {0.134380, 0.004000, 0.645600},
        {0.283900, 0.011600, 1.385600}, {0.348280, 0.023000, 1.747060}, {0.336200, 0.038000, 1.772110},
        {0.290800, 0.060000, 1.669200}, {0.195360, 0.090980, 1.287640}, {0.095640, 0.139020, 0.812950},
        {0.032010, 0.208020, 0.465180}, {0.004900, 0.323000, 0.272000}, {0.009300, 0.503000, 0.158200},
        {0.063270, 0.710000, 0.078250}, {0.165500, 0.862000, 0.042160}, {0.290400, 0.954000, 0.020300},
        {0.433450, 0.994950, 0.008750}, {0.594500, 0.995000, 0.003900}, {0.762100, 0.952000, 0.002100},
        {0.916300, 0.870000, 0.001650}, {1.026300, 0.757000, 0.001100}, {1.062200, 0.631000, 0.000800},
        {1.002600, 0.503000, 0.000340}, {0.854450, 0.381000, 0.000190}, {0.642400, 0.265000, 0.000050},
        {0.447900, 0.175000, 0.000020}, {0.283500, 0.107000, 0.000000}, {0.164900, 0.061000, 0.000000},
        {0.087400, 0.032000, 0.000000}, {0.046770, 0.017000, 0.000000}, {0.022700, 0.008210, 0.000000},
        {0.011359, 0.004102, 0.000000},
    }};
    CmfMatrix m;
    m.bands = 31;
    m.source = "CIE-1931-2deg-400-700-10nm";
    m.weights.resize(3 * 31);
    for (int b = 0; b < 31; ++b) {
      for (int c = 0; c < 3; ++c) m.weights[static_cast<std::size_t>(c) * 31 + b] = rows[b][c];
    }
    return m;
  }();
  return table;
}

}  // namespace msic
