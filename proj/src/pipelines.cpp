#include "msic/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "msic/byte_io.hpp"
#include "msic/errors.hpp"
#include "msic/gop.hpp"

namespace msic {

namespace {

enum ParamTag : std::uint8_t {
  kTagQp = 1,
  kTagNc = 2,
  kTagNref = 3,
  kTagQref = 4,
  kTagBlockSize = 5,
  kTagWeightExp = 6,
  kTagBasisExp = 7,
  kTagQpRgb = 8,
  kTagFlags = 9,
};

constexpr std::int32_t kFlagCenter = 1;
constexpr std::int32_t kFlagIntercept = 2;
constexpr std::int32_t kFlagRgbOnly = 4;

void require_ten_bit(const SpectralCube& cube) {
  if (cube.bit_depth() != kCodecBitDepth) {
    throw RangeError("coding schemes take 10-bit cubes; requantize first (got " + std::to_string(cube.bit_depth()) +
                     " bits)");
  }
}

void require_scheme(const CodedContainer& c, Scheme expected) {
  if (c.scheme != expected) {
    throw FormatError("container holds scheme " + scheme_name(c.scheme) + ", expected " + scheme_name(expected));
  }
  if (c.bit_depth != kCodecBitDepth) throw FormatError("container bit depth must be 10");
}

void check_range(const char* name, int value, int lo, int hi) {
  if (value < lo || value > hi) {
    throw ParamError(std::string(name) + " must be in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                     "], got " + std::to_string(value));
  }
}

// ---- per-plane payload lists: u16 count, then {u32 length, bytes} ----

std::vector<std::uint8_t> pack_payloads(const std::vector<std::vector<std::uint8_t>>& payloads) {
  ByteWriter out;
  out.u16(static_cast<std::uint16_t>(payloads.size()));
  for (const auto& p : payloads) {
    out.u32(static_cast<std::uint32_t>(p.size()));
    out.bytes(p);
  }
  return out.take();
}

std::vector<std::vector<std::uint8_t>> unpack_payloads(std::span<const std::uint8_t> bytes, int expected_count) {
  ByteReader in(bytes);
  const int count = in.u16();
  if (count != expected_count) {
    throw FormatError("plane section holds " + std::to_string(count) + " planes, expected " +
                      std::to_string(expected_count));
  }
  std::vector<std::vector<std::uint8_t>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto len = in.u32();
    const auto data = in.bytes(len);
    out.emplace_back(data.begin(), data.end());
  }
  if (!in.at_end()) throw LengthError("trailing bytes in plane section");
  return out;
}

void check_plane_shape(const Plane& p, int width, int height) {
  if (p.width != width || p.height != height) throw FormatError("coded plane dimensions differ from container");
}

// ---- affine normalization of real planes into the 10-bit codec domain ----

struct PlaneNorm {
  float offset = 0.0f;
  float scale = 1.0f;
};

PlaneNorm fit_norm(std::span<const double> values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  PlaneNorm n;
  n.offset = static_cast<float>(*lo);
  const auto scale = static_cast<float>((*hi - *lo) / kCodecMax);
  n.scale = scale > 0.0f && std::isfinite(scale) ? scale : 1.0f;
  return n;
}

Plane normalize(std::span<const double> values, PlaneNorm n, int width, int height) {
  Plane p(width, height);
  const double offset = n.offset;
  const double scale = n.scale;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double q = std::round((values[i] - offset) / scale);
    p.samples[i] = static_cast<std::uint16_t>(std::clamp(q, 0.0, static_cast<double>(kCodecMax)));
  }
  return p;
}

void denormalize(const Plane& p, PlaneNorm n, std::span<double> out) {
  const double offset = n.offset;
  const double scale = n.scale;
  for (std::size_t i = 0; i < p.samples.size(); ++i) out[i] = offset + scale * p.samples[i];
}

std::vector<std::uint8_t> serialize_norms(SectionId group, const std::vector<PlaneNorm>& norms) {
  ByteWriter out;
  out.u8(static_cast<std::uint8_t>(group));
  out.u16(static_cast<std::uint16_t>(norms.size()));
  for (const auto& n : norms) {
    out.f32(n.offset);
    out.f32(n.scale);
  }
  return out.take();
}

std::vector<PlaneNorm> parse_norms(std::span<const std::uint8_t> bytes, int expected_count) {
  ByteReader in(bytes);
  in.u8();
  const int count = in.u16();
  if (count != expected_count) throw FormatError("normalization count differs from plane count");
  std::vector<PlaneNorm> norms(static_cast<std::size_t>(count));
  for (auto& n : norms) {
    n.offset = in.f32();
    n.scale = in.f32();
    if (!std::isfinite(n.offset) || !std::isfinite(n.scale)) throw FormatError("non-finite normalization");
  }
  if (!in.at_end()) throw LengthError("trailing bytes in normalization section");
  return norms;
}

RealPlaneStack dequantize_group(const std::vector<Plane>& planes, const std::vector<PlaneNorm>& norms, int width,
                                int height) {
  RealPlaneStack out(width, height, static_cast<int>(planes.size()));
  for (std::size_t p = 0; p < planes.size(); ++p) denormalize(planes[p], norms[p], out.plane(static_cast<int>(p)));
  return out;
}

// ---- a group of real planes, each normalized and intra-coded ----

struct CodedGroup {
  std::vector<std::uint8_t> norm_section;
  std::vector<std::uint8_t> plane_section;
  RealPlaneStack decoded;
};

CodedGroup code_plane_group(const RealPlaneStack& stack, int qp, SectionId group) {
  stack.check_finite();
  std::vector<PlaneNorm> norms;
  std::vector<std::vector<std::uint8_t>> payloads;
  std::vector<Plane> recon;
  for (int p = 0; p < stack.planes; ++p) {
    const auto n = fit_norm(stack.plane(p));
    auto coded = encode_intra(normalize(stack.plane(p), n, stack.width, stack.height), qp);
    norms.push_back(n);
    payloads.push_back(std::move(coded.payload));
    recon.push_back(std::move(coded.reconstruction));
  }
  CodedGroup out;
  out.norm_section = serialize_norms(group, norms);
  out.plane_section = pack_payloads(payloads);
  out.decoded = dequantize_group(recon, norms, stack.width, stack.height);
  return out;
}

RealPlaneStack decode_plane_group(const CodedContainer& c, SectionId group, int count) {
  const auto norms = parse_norms(c.require_normalization(group).data, count);
  const auto payloads = unpack_payloads(c.require(group).data, count);
  std::vector<Plane> planes;
  planes.reserve(payloads.size());
  for (const auto& p : payloads) {
    planes.push_back(decode_intra(p));
    check_plane_shape(planes.back(), c.width, c.height);
  }
  return dequantize_group(planes, norms, c.width, c.height);
}

// ---- PCA layer: quantized basis plus normalized coefficient planes ----

struct CodedPcaLayer {
  QuantizedBasis basis;
  std::vector<std::uint8_t> basis_section;
  CodedGroup planes;
};

CodedPcaLayer code_pca_layer(const RealPlaneStack& data, int n_components, int qp, int step_exp, bool center,
                             SectionId plane_group) {
  CodedPcaLayer out;
  out.basis = quantize_basis(truncate(fit_pca(data, PcaOptions{center}), n_components), step_exp);
  out.basis_section = serialize_basis(out.basis);
  out.planes = code_plane_group(forward(data, out.basis.basis), qp, plane_group);
  return out;
}

QuantizedBasis decode_basis(const CodedContainer& c, SectionId id, int bands) {
  auto q = parse_basis(c.require(id).data);
  if (q.basis.bands != bands) throw FormatError("basis band count differs from container");
  return q;
}

// ---- GOP-ordered sequences of 10-bit planes ----

struct CodedSequence {
  std::vector<std::uint8_t> section;
  std::vector<Plane> reconstruction;  // display order
};

int entry_qp(const GopEntry& e, int qp) { return std::clamp(qp + e.qp_offset, 0, kMaxQp); }

CodedSequence code_sequence(const std::vector<Plane>& planes, GopKind kind, int qp) {
  const auto schedule = gop_schedule(static_cast<int>(planes.size()), kind);
  CodedSequence out;
  out.reconstruction.resize(planes.size());
  std::vector<std::vector<std::uint8_t>> payloads;
  for (const auto& e : schedule) {
    const auto& src = planes[static_cast<std::size_t>(e.plane_index)];
    auto coded = e.mode == GopMode::key
                     ? encode_intra(src, entry_qp(e, qp))
                     : encode_inter_bi(src, out.reconstruction[static_cast<std::size_t>(e.ref_a)],
                                       out.reconstruction[static_cast<std::size_t>(e.ref_b)], entry_qp(e, qp));
    payloads.push_back(std::move(coded.payload));
    out.reconstruction[static_cast<std::size_t>(e.plane_index)] = std::move(coded.reconstruction);
  }
  out.section = pack_payloads(payloads);
  return out;
}

std::vector<Plane> decode_sequence(std::span<const std::uint8_t> section, int count, GopKind kind, int width,
                                   int height) {
  const auto schedule = gop_schedule(count, kind);
  const auto payloads = unpack_payloads(section, count);
  std::vector<Plane> out(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& e = schedule[i];
    const auto& payload = payloads[i];
    const auto expected = e.mode == GopMode::key ? PlaneMode::intra : PlaneMode::bi;
    if (payload_mode(payload) != expected) throw DecodeError("plane coding mode differs from GOP schedule");
    auto plane = e.mode == GopMode::key ? decode_intra(payload)
                                        : decode_inter_bi(payload, out[static_cast<std::size_t>(e.ref_a)],
                                                          out[static_cast<std::size_t>(e.ref_b)]);
    check_plane_shape(plane, width, height);
    out[static_cast<std::size_t>(e.plane_index)] = std::move(plane);
  }
  return out;
}

Plane band_plane(const SpectralCube& cube, int band) {
  const auto src = cube.plane(band);
  return Plane(cube.width(), cube.height(), std::vector<std::uint16_t>(src.begin(), src.end()));
}

SpectralCube planes_to_cube(const std::vector<Plane>& planes, int width, int height) {
  std::vector<std::uint16_t> samples;
  samples.reserve(planes.size() * static_cast<std::size_t>(width) * height);
  for (const auto& p : planes) samples.insert(samples.end(), p.samples.begin(), p.samples.end());
  return SpectralCube(width, height, static_cast<int>(planes.size()), kCodecBitDepth, std::move(samples));
}

// ---- block prediction helpers shared by encoders and decoders ----

std::vector<PlaneView> views_of(const RealPlaneStack& stack) {
  std::vector<PlaneView> v;
  for (int p = 0; p < stack.planes; ++p) v.push_back(stack.plane(p));
  return v;
}

WeightSet empty_weight_set(const BlockGrid& grid, int targets, int regressors, int weight_step_exp) {
  WeightSet ws;
  ws.block_size = grid.block_size();
  ws.blocks_x = grid.blocks_x();
  ws.blocks_y = grid.blocks_y();
  ws.targets = targets;
  ws.regressors = regressors;
  ws.weight_step_exp = weight_step_exp;
  ws.intercept_step_exp = weight_step_exp + kInterceptStepShift;
  return ws;
}

struct FittedTargets {
  WeightSet weights;
  RealPlaneStack residual;
};

FittedTargets fit_targets(const RealPlaneStack& targets, const std::vector<PlaneView>& regressors,
                          const BlockGrid& grid, int weight_step_exp, bool intercept) {
  FittedTargets out{empty_weight_set(grid, targets.planes, static_cast<int>(regressors.size()), weight_step_exp),
                    RealPlaneStack(targets.width, targets.height, targets.planes)};
  for (int t = 0; t < targets.planes; ++t) {
    auto r = closed_loop_residual(targets.plane(t), regressors, weight_step_exp, grid, intercept);
    out.weights.indices.insert(out.weights.indices.end(), r.indices.begin(), r.indices.end());
    out.weights.saturated += r.saturated;
    std::copy(r.residual.begin(), r.residual.end(), out.residual.plane(t).begin());
  }
  return out;
}

WeightSet decode_weights(const CodedContainer& c, SectionId id, const BlockGrid& grid, int targets,
                         int regressors) {
  auto ws = parse_weights(c.require(id).data);
  if (ws.block_size != grid.block_size() || ws.blocks_x != grid.blocks_x() || ws.blocks_y != grid.blocks_y() ||
      ws.targets != targets || ws.regressors != regressors) {
    throw FormatError("weight section layout differs from container");
  }
  return ws;
}

// Band b = round(prediction_b + residual_b), clamped to 10 bits.
SpectralCube reconstruct_bands(const std::vector<PlaneView>& regressors, const WeightSet& ws, const BlockGrid& grid,
                               const RealPlaneStack& residual) {
  RealPlaneStack sum(residual.width, residual.height, residual.planes);
  for (int b = 0; b < residual.planes; ++b) {
    const auto pred = predict_plane(regressors, ws, b, grid);
    const auto res = residual.plane(b);
    auto dst = sum.plane(b);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = pred[i] + res[i];
  }
  return to_cube(sum, kCodecBitDepth);
}

std::vector<Plane> rgb_error_planes(const RgbImage& rgb, const std::vector<PlaneView>& regressors,
                                    const WeightSet& ws, const BlockGrid& grid) {
  std::vector<Plane> out;
  for (int c = 0; c < 3; ++c) {
    const auto pred = predict_plane(regressors, ws, c, grid);
    const auto src = rgb.channel(c);
    Plane e(rgb.width, rgb.height);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double v = static_cast<double>(src[i]) - std::round(pred[i]) + kResidualOffset;
      e.samples[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, static_cast<double>(kCodecMax)));
    }
    out.push_back(std::move(e));
  }
  return out;
}

RgbImage reconstruct_preview(const std::vector<PlaneView>& regressors, const WeightSet& ws, const BlockGrid& grid,
                             const std::vector<Plane>& errors) {
  RgbImage rgb(grid.plane_width(), grid.plane_height());
  for (int c = 0; c < 3; ++c) {
    const auto pred = predict_plane(regressors, ws, c, grid);
    auto dst = rgb.channel(c);
    const auto& e = errors[static_cast<std::size_t>(c)].samples;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double v = std::round(pred[i]) + e[i] - kResidualOffset;
      dst[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, static_cast<double>(RgbImage::kMax)));
    }
  }
  return rgb;
}

RealPlaneStack rgb_to_real(const RgbImage& rgb) {
  RealPlaneStack out(rgb.width, rgb.height, 3);
  std::transform(rgb.samples.begin(), rgb.samples.end(), out.values.begin(),
                 [](std::uint16_t v) { return static_cast<double>(v); });
  return out;
}

// Enhancement regressors of the scalable scheme: decoded RGB first, then the
// reference planes unless restricted.
std::vector<PlaneView> band_regressors(const RealPlaneStack& rgb, const RealPlaneStack& refs, RgbRegressors mode) {
  auto v = views_of(rgb);
  if (mode == RgbRegressors::rgb_and_references) {
    const auto r = views_of(refs);
    v.insert(v.end(), r.begin(), r.end());
  }
  return v;
}

CodedContainer make_container(const SpectralCube& cube, const SchemeParams& p) {
  CodedContainer c;
  c.scheme = p.scheme;
  c.width = cube.width();
  c.height = cube.height();
  c.bands = cube.bands();
  c.bit_depth = cube.bit_depth();
  c.params.emplace_back(kTagQp, p.qp);
  if (p.scheme == Scheme::plain) return c;
  c.params.emplace_back(kTagNc, p.n_c);
  c.params.emplace_back(kTagBasisExp, p.basis_step_exp);
  std::int32_t flags = (p.center ? kFlagCenter : 0) | (p.intercept ? kFlagIntercept : 0) |
                       (p.rgb_regressors == RgbRegressors::rgb_only ? kFlagRgbOnly : 0);
  if (p.scheme != Scheme::pca) {
    c.params.emplace_back(kTagNref, p.n_ref);
    c.params.emplace_back(kTagQref, p.q_ref);
    c.params.emplace_back(kTagBlockSize, p.block_size);
    c.params.emplace_back(kTagWeightExp, p.weight_step_exp);
  }
  if (p.scheme == Scheme::hpcls_rgb) c.params.emplace_back(kTagQpRgb, p.qp_rgb);
  c.params.emplace_back(kTagFlags, flags);
  return c;
}

void add_section(CodedContainer& c, Layer layer, SectionId id, std::vector<std::uint8_t> data) {
  c.sections.push_back(Section{layer, id, std::move(data), true});
}

void add_pca_layer(CodedContainer& c, Layer layer, SectionId basis_id, SectionId plane_id, CodedPcaLayer& pca) {
  add_section(c, layer, basis_id, std::move(pca.basis_section));
  add_section(c, layer, SectionId::normalization, std::move(pca.planes.norm_section));
  add_section(c, layer, plane_id, std::move(pca.planes.plane_section));
}

struct References {
  CodedPcaLayer layer;
  RealPlaneStack decoded;
};

References code_references(const RealPlaneStack& data, const SchemeParams& p) {
  References r;
  r.layer = code_pca_layer(data, p.n_ref, p.q_ref, p.basis_step_exp, p.center, SectionId::ref_planes);
  r.decoded = r.layer.planes.decoded;
  return r;
}

RealPlaneStack decode_references(const CodedContainer& c) {
  const auto q = decode_basis(c, SectionId::ref_basis, c.bands);
  return decode_plane_group(c, SectionId::ref_planes, q.basis.n_components);
}

RealPlaneStack decode_residual(const CodedContainer& c) {
  const auto q = decode_basis(c, SectionId::residual_basis, c.bands);
  return inverse(decode_plane_group(c, SectionId::residual_planes, q.basis.n_components), q.basis);
}

int container_block_size(const CodedContainer& c) {
  const int s = c.param(kTagBlockSize);
  if (s < 1) throw FormatError("invalid block size in container");
  return s;
}

}  // namespace

void validate_params(const SchemeParams& p, int bands) {
  if (bands < 1) throw ParamError("cube has no bands");
  check_range("qp", p.qp, kMinGridQp, kMaxGridQp);
  if (p.scheme == Scheme::plain) return;
  check_range("n_c", p.n_c, 1, std::min(kMaxComponents, bands));
  check_range("basis step exponent", p.basis_step_exp, -30, 0);
  if (p.scheme == Scheme::pca) return;
  check_range("n_ref", p.n_ref, 1, std::min(kMaxReferencePlanes, bands));
  check_range("q_ref", p.q_ref, kMinGridQp, kMaxGridQp);
  check_range("block size", p.block_size, 1, 65535);
  check_range("weight step exponent", p.weight_step_exp, -30, 0);
  if (p.scheme == Scheme::hpcls_rgb) check_range("qp_rgb", p.qp_rgb, kMinGridQp, kMaxGridQp);
}

std::string describe_params(const SchemeParams& p) {
  std::string s = "qp=" + std::to_string(p.qp);
  if (p.scheme == Scheme::plain) return s;
  s += ";n_c=" + std::to_string(p.n_c);
  if (p.scheme == Scheme::pca) return s;
  s += ";n_ref=" + std::to_string(p.n_ref) + ";q_ref=" + std::to_string(p.q_ref) +
       ";block_size=" + std::to_string(p.block_size);
  if (p.scheme == Scheme::hpcls_rgb) s += ";qp_rgb=" + std::to_string(p.qp_rgb);
  return s;
}

SchemeParams container_params(const CodedContainer& c) {
  SchemeParams p;
  p.scheme = c.scheme;
  auto read = [&c](std::uint8_t tag, int& field) {
    if (c.has_param(tag)) field = c.param(tag);
  };
  read(kTagQp, p.qp);
  read(kTagNc, p.n_c);
  read(kTagNref, p.n_ref);
  read(kTagQref, p.q_ref);
  read(kTagBlockSize, p.block_size);
  read(kTagWeightExp, p.weight_step_exp);
  read(kTagBasisExp, p.basis_step_exp);
  read(kTagQpRgb, p.qp_rgb);
  if (c.has_param(kTagFlags)) {
    const auto f = c.param(kTagFlags);
    p.center = (f & kFlagCenter) != 0;
    p.intercept = (f & kFlagIntercept) != 0;
    p.rgb_regressors = (f & kFlagRgbOnly) != 0 ? RgbRegressors::rgb_only : RgbRegressors::rgb_and_references;
  }
  return p;
}

EncodeResult encode_plain(const SpectralCube& cube, const SchemeParams& params) {
  require_ten_bit(cube);
  auto p = params;
  p.scheme = Scheme::plain;
  validate_params(p, cube.bands());
  std::vector<Plane> bands;
  for (int b = 0; b < cube.bands(); ++b) bands.push_back(band_plane(cube, b));
  auto seq = code_sequence(bands, GopKind::gop30, p.qp);

  EncodeResult out{make_container(cube, p), planes_to_cube(seq.reconstruction, cube.width(), cube.height()),
                   std::nullopt, std::nullopt, 0};
  add_section(out.container, Layer::single, SectionId::plain_gop, std::move(seq.section));
  return out;
}

SpectralCube decode_plain(const CodedContainer& c) {
  require_scheme(c, Scheme::plain);
  const auto planes = decode_sequence(c.require(SectionId::plain_gop).data, c.bands, GopKind::gop30, c.width, c.height);
  return planes_to_cube(planes, c.width, c.height);
}

EncodeResult encode_pca(const SpectralCube& cube, const SchemeParams& params) {
  require_ten_bit(cube);
  auto p = params;
  p.scheme = Scheme::pca;
  validate_params(p, cube.bands());
  auto layer = code_pca_layer(to_real(cube), p.n_c, p.qp, p.basis_step_exp, p.center, SectionId::ref_planes);
  EncodeResult out{make_container(cube, p), to_cube(inverse(layer.planes.decoded, layer.basis.basis), kCodecBitDepth),
                   std::nullopt, std::nullopt, 0};
  add_pca_layer(out.container, Layer::single, SectionId::ref_basis, SectionId::ref_planes, layer);
  return out;
}

SpectralCube decode_pca(const CodedContainer& c) {
  require_scheme(c, Scheme::pca);
  const auto q = decode_basis(c, SectionId::ref_basis, c.bands);
  const auto coeffs = decode_plane_group(c, SectionId::ref_planes, q.basis.n_components);
  return to_cube(inverse(coeffs, q.basis), kCodecBitDepth);
}

EncodeResult encode_hpcls(const SpectralCube& cube, const SchemeParams& params) {
  require_ten_bit(cube);
  auto p = params;
  p.scheme = Scheme::hpcls;
  validate_params(p, cube.bands());
  const auto data = to_real(cube);
  const BlockGrid grid(cube.width(), cube.height(), p.block_size);

  auto refs = code_references(data, p);
  const auto regressors = views_of(refs.decoded);
  auto fitted = fit_targets(data, regressors, grid, p.weight_step_exp, p.intercept);
  auto residual = code_pca_layer(fitted.residual, p.n_c, p.qp, p.basis_step_exp, p.center, SectionId::residual_planes);

  EncodeResult out{make_container(cube, p),
                   reconstruct_bands(regressors, fitted.weights, grid,
                                     inverse(residual.planes.decoded, residual.basis.basis)),
                   std::nullopt, std::nullopt, fitted.weights.saturated};
  auto& c = out.container;
  add_pca_layer(c, Layer::single, SectionId::ref_basis, SectionId::ref_planes, refs.layer);
  add_section(c, Layer::single, SectionId::weights, serialize_weights(fitted.weights));
  add_pca_layer(c, Layer::single, SectionId::residual_basis, SectionId::residual_planes, residual);
  return out;
}

SpectralCube decode_hpcls(const CodedContainer& c) {
  require_scheme(c, Scheme::hpcls);
  const BlockGrid grid(c.width, c.height, container_block_size(c));
  const auto refs = decode_references(c);
  const auto regressors = views_of(refs);
  const auto ws = decode_weights(c, SectionId::weights, grid, c.bands, refs.planes);
  return reconstruct_bands(regressors, ws, grid, decode_residual(c));
}

EncodeResult encode_hpcls_rgb(const SpectralCube& cube, const SchemeParams& params, const CmfMatrix& cmf) {
  require_ten_bit(cube);
  auto p = params;
  p.scheme = Scheme::hpcls_rgb;
  validate_params(p, cube.bands());
  const auto data = to_real(cube);
  const BlockGrid grid(cube.width(), cube.height(), p.block_size);

  // preview layer
  auto refs = code_references(data, p);
  const auto ref_views = views_of(refs.decoded);
  const auto rgb = render_rgb(cube, cmf);
  const auto rgb_fit = fit_targets(rgb_to_real(rgb), ref_views, grid, p.weight_step_exp, p.intercept);
  auto errors = code_sequence(rgb_error_planes(rgb, ref_views, rgb_fit.weights, grid), GopKind::gop2, p.qp_rgb);
  auto preview = reconstruct_preview(ref_views, rgb_fit.weights, grid, errors.reconstruction);

  // enhancement layer
  const auto decoded_rgb = rgb_to_real(preview);
  const auto regressors = band_regressors(decoded_rgb, refs.decoded, p.rgb_regressors);
  auto fitted = fit_targets(data, regressors, grid, p.weight_step_exp, p.intercept);
  auto residual = code_pca_layer(fitted.residual, p.n_c, p.qp, p.basis_step_exp, p.center, SectionId::residual_planes);

  EncodeResult out{make_container(cube, p),
                   reconstruct_bands(regressors, fitted.weights, grid,
                                     inverse(residual.planes.decoded, residual.basis.basis)),
                   rgb, std::move(preview), rgb_fit.weights.saturated + fitted.weights.saturated};
  auto& c = out.container;
  add_pca_layer(c, Layer::preview, SectionId::ref_basis, SectionId::ref_planes, refs.layer);
  add_section(c, Layer::preview, SectionId::rgb_weights, serialize_weights(rgb_fit.weights));
  add_section(c, Layer::preview, SectionId::rgb_error, std::move(errors.section));
  add_section(c, Layer::enhancement, SectionId::weights, serialize_weights(fitted.weights));
  add_pca_layer(c, Layer::enhancement, SectionId::residual_basis, SectionId::residual_planes, residual);
  return out;
}

RgbImage decode_hpcls_rgb_preview(const CodedContainer& c) {
  if (c.scheme != Scheme::hpcls_rgb) {
    throw CapabilityError("only " + scheme_name(Scheme::hpcls_rgb) + " containers carry a preview layer");
  }
  require_scheme(c, Scheme::hpcls_rgb);
  const BlockGrid grid(c.width, c.height, container_block_size(c));
  const auto refs = decode_references(c);
  const auto ref_views = views_of(refs);
  const auto ws = decode_weights(c, SectionId::rgb_weights, grid, 3, refs.planes);
  const auto errors = decode_sequence(c.require(SectionId::rgb_error).data, 3, GopKind::gop2, c.width, c.height);
  return reconstruct_preview(ref_views, ws, grid, errors);
}

SpectralCube decode_hpcls_rgb(const CodedContainer& c) {
  const auto preview = decode_hpcls_rgb_preview(c);
  const BlockGrid grid(c.width, c.height, container_block_size(c));
  const auto refs = decode_references(c);
  const auto decoded_rgb = rgb_to_real(preview);
  const auto mode = container_params(c).rgb_regressors;
  const auto regressors = band_regressors(decoded_rgb, refs, mode);
  const auto ws = decode_weights(c, SectionId::weights, grid, c.bands, static_cast<int>(regressors.size()));
  return reconstruct_bands(regressors, ws, grid, decode_residual(c));
}

EncodeResult encode(const SpectralCube& cube, const SchemeParams& params) {
  switch (params.scheme) {
    case Scheme::plain:
      return encode_plain(cube, params);
    case Scheme::pca:
      return encode_pca(cube, params);
    case Scheme::hpcls:
      return encode_hpcls(cube, params);
    case Scheme::hpcls_rgb:
      return encode_hpcls_rgb(cube, params);
  }
  throw UnsupportedSchemeError("unsupported scheme");
}

SpectralCube decode(const CodedContainer& c) {
  switch (c.scheme) {
    case Scheme::plain:
      return decode_plain(c);
    case Scheme::pca:
      return decode_pca(c);
    case Scheme::hpcls:
      return decode_hpcls(c);
    case Scheme::hpcls_rgb:
      return decode_hpcls_rgb(c);
  }
  throw UnsupportedSchemeError("unsupported scheme");
}

IntraBaseline encode_bands_intra(const SpectralCube& cube, int qp) {
  require_ten_bit(cube);
  IntraBaseline out;
  std::vector<Plane> recon;
  for (int b = 0; b < cube.bands(); ++b) {
    auto coded = encode_intra(band_plane(cube, b), qp);
    out.bits += coded.bits();
    recon.push_back(std::move(coded.reconstruction));
  }
  out.reconstruction = planes_to_cube(recon, cube.width(), cube.height());
  return out;
}

PreviewCoding encode_rgb_preview(const RgbImage& rgb, int qp) {
  std::vector<Plane> channels;
  for (int c = 0; c < 3; ++c) {
    const auto src = rgb.channel(c);
    channels.emplace_back(rgb.width, rgb.height, std::vector<std::uint16_t>(src.begin(), src.end()));
  }
  const auto seq = code_sequence(channels, GopKind::gop2, qp);
  PreviewCoding out;
  out.bits = 8 * seq.section.size();
  out.reconstruction = RgbImage(rgb.width, rgb.height);
  for (int c = 0; c < 3; ++c) {
    const auto& s = seq.reconstruction[static_cast<std::size_t>(c)].samples;
    std::copy(s.begin(), s.end(), out.reconstruction.channel(c).begin());
  }
  return out;
}

}  // namespace msic
