#include "msic/spatial_codec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "msic/byte_io.hpp"
#include "msic/errors.hpp"
#include "msic/range_coder.hpp"

namespace msic {

namespace {

constexpr int kN = kTransformSize;
constexpr int kCoeffs = kN * kN;
constexpr int kLevelShift = 512;
constexpr std::size_t kHeaderBytes = 10;
constexpr int kMaxGolombPrefix = 30;

using Block = std::array<double, kCoeffs>;
using Levels = std::array<std::int32_t, kCoeffs>;

const std::array<double, kCoeffs>& dct_matrix() {
  static const auto m = [] {
    std::array<double, kCoeffs> c{};
    for (int k = 0; k < kN; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / kN) : std::sqrt(2.0 / kN);
      for (int n = 0; n < kN; ++n) {
        c[static_cast<std::size_t>(k * kN + n)] = scale * std::cos(std::numbers::pi * (2 * n + 1) * k / (2.0 * kN));
      }
    }
    return c;
  }();
  return m;
}

const std::array<int, kCoeffs>& zigzag() {
  static const auto order = [] {
    std::array<int, kCoeffs> z{};
    int i = 0;
    for (int s = 0; s < 2 * kN - 1; ++s) {
      for (int t = 0; t <= s; ++t) {
        // alternate direction on each anti-diagonal
        const int y = (s % 2 == 0) ? s - t : t;
        const int x = s - y;
        if (x < kN && y < kN) z[static_cast<std::size_t>(i++)] = y * kN + x;
      }
    }
    return z;
  }();
  return order;
}

Block forward_dct(const Block& in) {
  const auto& c = dct_matrix();
  Block tmp{};
  Block out{};
  for (int y = 0; y < kN; ++y) {
    for (int k = 0; k < kN; ++k) {
      double s = 0.0;
      for (int n = 0; n < kN; ++n) s += c[static_cast<std::size_t>(k * kN + n)] * in[static_cast<std::size_t>(y * kN + n)];
      tmp[static_cast<std::size_t>(y * kN + k)] = s;
    }
  }
  for (int x = 0; x < kN; ++x) {
    for (int k = 0; k < kN; ++k) {
      double s = 0.0;
      for (int n = 0; n < kN; ++n) s += c[static_cast<std::size_t>(k * kN + n)] * tmp[static_cast<std::size_t>(n * kN + x)];
      out[static_cast<std::size_t>(k * kN + x)] = s;
    }
  }
  return out;
}

Block inverse_dct(const Block& in) {
  const auto& c = dct_matrix();
  Block tmp{};
  Block out{};
  for (int x = 0; x < kN; ++x) {
    for (int n = 0; n < kN; ++n) {
      double s = 0.0;
      for (int k = 0; k < kN; ++k) s += c[static_cast<std::size_t>(k * kN + n)] * in[static_cast<std::size_t>(k * kN + x)];
      tmp[static_cast<std::size_t>(n * kN + x)] = s;
    }
  }
  for (int y = 0; y < kN; ++y) {
    for (int n = 0; n < kN; ++n) {
      double s = 0.0;
      for (int k = 0; k < kN; ++k) s += c[static_cast<std::size_t>(k * kN + n)] * tmp[static_cast<std::size_t>(y * kN + k)];
      out[static_cast<std::size_t>(y * kN + n)] = s;
    }
  }
  return out;
}

int position_class(int pos) { return pos == 0 ? 0 : (pos < 6 ? 1 : 2); }

struct CoefficientContexts {
  std::array<BitModel, 2> coded_block{};
  std::array<BitModel, kCoeffs> last_tree{};
  std::array<BitModel, kCoeffs> significant{};
  std::array<BitModel, 3> greater1{};
  std::array<BitModel, 3> greater2{};
  std::array<std::array<BitModel, kMaxGolombPrefix + 1>, 3> golomb_prefix{};
};

void write_remainder(RangeEncoder& enc, CoefficientContexts& ctx, int cls, std::uint32_t rem) {
  // Exp-Golomb order 0 with an adaptive unary prefix
  const std::uint32_t v = rem + 1;
  int k = 0;
  while ((v >> static_cast<unsigned>(k + 1)) != 0) ++k;
  for (int i = 0; i < k; ++i) enc.encode(ctx.golomb_prefix[cls][static_cast<std::size_t>(i)], 1);
  enc.encode(ctx.golomb_prefix[cls][static_cast<std::size_t>(k)], 0);
  enc.encode_bypass_bits(v - (1U << static_cast<unsigned>(k)), k);
}

std::uint32_t read_remainder(RangeDecoder& dec, CoefficientContexts& ctx, int cls) {
  int k = 0;
  while (dec.decode(ctx.golomb_prefix[cls][static_cast<std::size_t>(k)]) != 0) {
    if (++k >= kMaxGolombPrefix) throw DecodeError("coefficient magnitude prefix too long");
  }
  const std::uint32_t v = (1U << static_cast<unsigned>(k)) + dec.decode_bypass_bits(k);
  return v - 1;
}

void write_block(RangeEncoder& enc, CoefficientContexts& ctx, const Levels& zz, int& prev_coded) {
  int last = -1;
  for (int i = kCoeffs - 1; i >= 0; --i) {
    if (zz[static_cast<std::size_t>(i)] != 0) {
      last = i;
      break;
    }
  }
  const int coded = last >= 0 ? 1 : 0;
  enc.encode(ctx.coded_block[static_cast<std::size_t>(prev_coded)], coded);
  prev_coded = coded;
  if (!coded) return;

  int node = 1;
  for (int b = 5; b >= 0; --b) {
    const int bit = (last >> b) & 1;
    enc.encode(ctx.last_tree[static_cast<std::size_t>(node)], bit);
    node = node * 2 + bit;
  }

  for (int i = 0; i <= last; ++i) {
    const std::int32_t level = zz[static_cast<std::size_t>(i)];
    if (i < last) {
      enc.encode(ctx.significant[static_cast<std::size_t>(i)], level != 0 ? 1 : 0);
      if (level == 0) continue;
    }
    const int cls = position_class(i);
    const auto mag = static_cast<std::uint32_t>(std::abs(level));
    enc.encode(ctx.greater1[static_cast<std::size_t>(cls)], mag > 1 ? 1 : 0);
    if (mag > 1) {
      enc.encode(ctx.greater2[static_cast<std::size_t>(cls)], mag > 2 ? 1 : 0);
      if (mag > 2) write_remainder(enc, ctx, cls, mag - 3);
    }
    enc.encode_bypass(level < 0 ? 1 : 0);
  }
}

Levels read_block(RangeDecoder& dec, CoefficientContexts& ctx, int& prev_coded) {
  Levels zz{};
  const int coded = dec.decode(ctx.coded_block[static_cast<std::size_t>(prev_coded)]);
  prev_coded = coded;
  if (!coded) return zz;

  int node = 1;
  for (int b = 0; b < 6; ++b) node = node * 2 + dec.decode(ctx.last_tree[static_cast<std::size_t>(node)]);
  const int last = node - kCoeffs;

  for (int i = 0; i <= last; ++i) {
    if (i < last && dec.decode(ctx.significant[static_cast<std::size_t>(i)]) == 0) continue;
    const int cls = position_class(i);
    std::uint32_t mag = 1;
    if (dec.decode(ctx.greater1[static_cast<std::size_t>(cls)]) != 0) {
      mag = 2;
      if (dec.decode(ctx.greater2[static_cast<std::size_t>(cls)]) != 0) mag = 3 + read_remainder(dec, ctx, cls);
    }
    if (mag > (1U << 24U)) throw DecodeError("coefficient magnitude out of range");
    const auto v = static_cast<std::int32_t>(mag);
    zz[static_cast<std::size_t>(i)] = dec.decode_bypass() != 0 ? -v : v;
  }
  return zz;
}

std::int32_t quantize(double c, double step) {
  return static_cast<std::int32_t>(std::lround(c / step));
}

struct Geometry {
  int width;
  int height;
  int blocks_x;
  int blocks_y;
};

Geometry geometry(int width, int height) {
  return {width, height, (width + kN - 1) / kN, (height + kN - 1) / kN};
}

// Reconstructs one block from its dequantized coefficients into `out`.
void reconstruct_block(const Levels& raster, double step, const Geometry& g, int bx, int by, Plane& out) {
  Block coeffs{};
  for (int i = 0; i < kCoeffs; ++i) coeffs[static_cast<std::size_t>(i)] = raster[static_cast<std::size_t>(i)] * step;
  const Block pixels = inverse_dct(coeffs);
  for (int y = 0; y < kN; ++y) {
    const int py = by * kN + y;
    if (py >= g.height) break;
    for (int x = 0; x < kN; ++x) {
      const int px = bx * kN + x;
      if (px >= g.width) break;
      const double v = std::nearbyint(pixels[static_cast<std::size_t>(y * kN + x)] + kLevelShift);
      out.samples[static_cast<std::size_t>(py) * g.width + px] =
          static_cast<std::uint16_t>(std::clamp(v, 0.0, static_cast<double>(kCodecMax)));
    }
  }
}

void check_qp(int qp) {
  if (qp < 0 || qp > kMaxQp) throw ParamError("qp must lie in [0, 63]");
}

void check_plane(const Plane& plane) {
  if (plane.width < 1 || plane.height < 1 || plane.width > 0xFFFF || plane.height > 0xFFFF) {
    throw SizeError("plane dimensions out of range");
  }
  if (plane.samples.size() != static_cast<std::size_t>(plane.width) * plane.height) {
    throw LengthError("plane sample count does not match dimensions");
  }
  if (std::any_of(plane.samples.begin(), plane.samples.end(), [](std::uint16_t s) { return s > kCodecMax; })) {
    throw RangeError("plane sample exceeds 10 bits");
  }
}

// Core intra coder shared by both modes; writes the payload after the mode byte.
void encode_core(const Plane& plane, int qp, ByteWriter& out, Plane& recon) {
  const double step = qp_to_step(qp);
  const auto g = geometry(plane.width, plane.height);
  const auto& zz = zigzag();
  recon = Plane(plane.width, plane.height);

  RangeEncoder enc;
  CoefficientContexts ctx;
  int prev_coded = 0;
  std::int32_t prev_dc = 0;
  for (int by = 0; by < g.blocks_y; ++by) {
    for (int bx = 0; bx < g.blocks_x; ++bx) {
      Block pixels{};
      for (int y = 0; y < kN; ++y) {
        const int py = std::min(by * kN + y, plane.height - 1);
        for (int x = 0; x < kN; ++x) {
          const int px = std::min(bx * kN + x, plane.width - 1);
          pixels[static_cast<std::size_t>(y * kN + x)] =
              static_cast<double>(plane.samples[static_cast<std::size_t>(py) * plane.width + px]) - kLevelShift;
        }
      }
      const Block coeffs = forward_dct(pixels);
      Levels raster{};
      for (int i = 0; i < kCoeffs; ++i) raster[static_cast<std::size_t>(i)] = quantize(coeffs[static_cast<std::size_t>(i)], step);

      Levels scan{};
      for (int i = 0; i < kCoeffs; ++i) scan[static_cast<std::size_t>(i)] = raster[static_cast<std::size_t>(zz[static_cast<std::size_t>(i)])];
      const std::int32_t dc = scan[0];
      scan[0] = dc - prev_dc;
      prev_dc = dc;
      write_block(enc, ctx, scan, prev_coded);

      reconstruct_block(raster, step, g, bx, by, recon);
    }
  }
  const auto coded = enc.finish();
  out.u16(static_cast<std::uint16_t>(plane.width));
  out.u16(static_cast<std::uint16_t>(plane.height));
  out.u8(static_cast<std::uint8_t>(qp));
  out.u32(static_cast<std::uint32_t>(coded.size()));
  out.bytes(coded);
}

Plane decode_core(ByteReader& in) {
  const int width = in.u16();
  const int height = in.u16();
  const int qp = in.u8();
  const std::uint32_t length = in.u32();
  if (width == 0 || height == 0) throw DecodeError("plane payload has zero dimensions");
  if (qp > kMaxQp) throw DecodeError("plane payload has invalid qp");
  if (in.remaining() != length) throw DecodeError("plane payload length mismatch");
  const auto coded = in.bytes(length);

  const double step = qp_to_step(qp);
  const auto g = geometry(width, height);
  const auto& zz = zigzag();
  Plane out(width, height);

  RangeDecoder dec(coded);
  CoefficientContexts ctx;
  int prev_coded = 0;
  std::int32_t prev_dc = 0;
  for (int by = 0; by < g.blocks_y; ++by) {
    for (int bx = 0; bx < g.blocks_x; ++bx) {
      Levels scan = read_block(dec, ctx, prev_coded);
      scan[0] += prev_dc;
      prev_dc = scan[0];
      Levels raster{};
      for (int i = 0; i < kCoeffs; ++i) raster[static_cast<std::size_t>(zz[static_cast<std::size_t>(i)])] = scan[static_cast<std::size_t>(i)];
      reconstruct_block(raster, step, g, bx, by, out);
    }
  }
  return out;
}

ByteReader open_payload(std::span<const std::uint8_t> payload, PlaneMode expected) {
  if (payload.size() < kHeaderBytes) throw DecodeError("plane payload truncated");
  ByteReader in(payload);
  const auto mode = static_cast<PlaneMode>(in.u8());
  if (mode != expected) throw DecodeError("plane payload has unexpected coding mode");
  return in;
}

void check_refs(const Plane& plane, const Plane& a, const Plane& b) {
  if (a.width != plane.width || a.height != plane.height || b.width != plane.width || b.height != plane.height) {
    throw DimensionError("reference planes differ in size from the coded plane");
  }
}

}  // namespace

double qp_to_step(int qp) {
  check_qp(qp);
  return std::exp2((qp - 4) / 6.0);
}

PlaneMode payload_mode(std::span<const std::uint8_t> payload) {
  if (payload.empty()) throw DecodeError("empty plane payload");
  if (payload[0] > 1) throw DecodeError("unknown plane coding mode");
  return static_cast<PlaneMode>(payload[0]);
}

Plane bi_prediction(const Plane& ref_a, const Plane& ref_b) {
  check_refs(ref_a, ref_a, ref_b);
  Plane pred(ref_a.width, ref_a.height);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred.samples[i] = static_cast<std::uint16_t>((ref_a.samples[i] + ref_b.samples[i] + 1U) >> 1U);
  }
  return pred;
}

CodedPlane encode_intra(const Plane& plane, int qp) {
  check_qp(qp);
  check_plane(plane);
  CodedPlane result;
  result.mode = PlaneMode::intra;
  result.qp = qp;
  ByteWriter out;
  out.u8(static_cast<std::uint8_t>(PlaneMode::intra));
  encode_core(plane, qp, out, result.reconstruction);
  result.payload = out.take();
  return result;
}

Plane decode_intra(std::span<const std::uint8_t> payload) {
  auto in = open_payload(payload, PlaneMode::intra);
  return decode_core(in);
}

CodedPlane encode_inter_bi(const Plane& plane, const Plane& ref_a, const Plane& ref_b, int qp) {
  check_qp(qp);
  check_plane(plane);
  check_refs(plane, ref_a, ref_b);
  const Plane pred = bi_prediction(ref_a, ref_b);

  CodedPlane result;
  result.mode = PlaneMode::bi;
  result.qp = qp;
  Plane residual(plane.width, plane.height);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const int r = static_cast<int>(plane.samples[i]) - static_cast<int>(pred.samples[i]) + kResidualOffset;
    const int c = std::clamp(r, 0, static_cast<int>(kCodecMax));
    if (c != r) ++result.clamped_samples;
    residual.samples[i] = static_cast<std::uint16_t>(c);
  }

  ByteWriter out;
  out.u8(static_cast<std::uint8_t>(PlaneMode::bi));
  Plane residual_recon;
  encode_core(residual, qp, out, residual_recon);
  result.payload = out.take();

  result.reconstruction = Plane(plane.width, plane.height);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const int v = static_cast<int>(pred.samples[i]) + static_cast<int>(residual_recon.samples[i]) - kResidualOffset;
    result.reconstruction.samples[i] = static_cast<std::uint16_t>(std::clamp(v, 0, static_cast<int>(kCodecMax)));
  }
  return result;
}

Plane decode_inter_bi(std::span<const std::uint8_t> payload, const Plane& ref_a, const Plane& ref_b) {
  auto in = open_payload(payload, PlaneMode::bi);
  const Plane residual = decode_core(in);
  check_refs(residual, ref_a, ref_b);
  const Plane pred = bi_prediction(ref_a, ref_b);
  Plane out(residual.width, residual.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int v = static_cast<int>(pred.samples[i]) + static_cast<int>(residual.samples[i]) - kResidualOffset;
    out.samples[i] = static_cast<std::uint16_t>(std::clamp(v, 0, static_cast<int>(kCodecMax)));
  }
  return out;
}

}  // namespace msic
