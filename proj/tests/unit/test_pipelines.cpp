#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "msic/errors.hpp"
#include "msic/pipelines.hpp"
#include "synthetic.hpp"

using namespace msic;
using testing::CubeKind;
using testing::make_cube;

namespace {

SchemeParams params_for(Scheme s, int qp) {
  SchemeParams p;
  p.scheme = s;
  p.qp = qp;
  p.n_c = 3;
  p.n_ref = 2;
  p.q_ref = 20;
  p.block_size = 16;
  p.qp_rgb = 20;
  return p;
}

CodedContainer reparse(const CodedContainer& c) { return parse_container(serialize_container(c)); }

std::vector<std::uint8_t> truncated(const std::vector<std::uint8_t>& bytes, std::size_t length) {
  return {bytes.begin(), bytes.begin() + static_cast<long>(length)};
}

}  // namespace

TEST_CASE("every scheme decodes to its encoder reconstruction") {
  const auto cube = make_cube(CubeKind::natural_gradient, 24, 20, 31);
  for (auto s : {Scheme::plain, Scheme::pca, Scheme::hpcls, Scheme::hpcls_rgb}) {
    for (int qp : {5, 30, 50}) {
      CAPTURE(scheme_name(s));
      CAPTURE(qp);
      const auto enc = encode(cube, params_for(s, qp));
      const auto parsed = reparse(enc.container);
      const auto dec = decode(parsed);
      CHECK(dec.same_shape(cube));
      CHECK(dec == enc.reconstruction);
      CHECK(enc.total_bits() == 8 * serialize_container(enc.container).size());
    }
  }
}

TEST_CASE("container roundtrip, header and table accounting") {
  const auto cube = make_cube(CubeKind::rank3_noise, 16, 16, 8);
  const auto enc = encode_hpcls(cube, params_for(Scheme::hpcls, 25));
  const auto bytes = serialize_container(enc.container);
  const auto parsed = parse_container(bytes);
  CHECK(serialize_container(parsed) == bytes);
  CHECK(parsed.params == enc.container.params);
  std::size_t payload = 0;
  for (const auto& s : parsed.sections) payload += s.data.size();
  const std::size_t header = 14 + 5 * parsed.params.size() + 2 + 10 * parsed.sections.size();
  CHECK(parsed.total_bits() == 8 * (header + payload));
  CHECK(parsed.total_bits() == 8 * bytes.size());
  // qp_rgb is not a parameter of this scheme and comes back at its default
  auto expect = params_for(Scheme::hpcls, 25);
  expect.qp_rgb = SchemeParams{}.qp_rgb;
  CHECK(container_params(parsed) == expect);
}

TEST_CASE("container validation") {
  const auto cube = make_cube(CubeKind::natural_gradient, 8, 8, 4);
  const auto bytes = serialize_container(encode_pca(cube, params_for(Scheme::pca, 20)).container);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(parse_container(bad_magic), FormatError);

  auto bad_scheme = bytes;
  bad_scheme[5] = 9;
  CHECK_THROWS_AS(parse_container(bad_scheme), UnsupportedSchemeError);

  // shift the second section's offset back by one byte so it overlaps the first
  auto parsed = parse_container(bytes);
  const std::size_t table = 14 + 5 * parsed.params.size() + 2;
  auto overlap = bytes;
  const std::size_t off_pos = table + 10 + 2;
  std::uint32_t off = overlap[off_pos] | (overlap[off_pos + 1] << 8) | (overlap[off_pos + 2] << 16) |
                      (static_cast<std::uint32_t>(overlap[off_pos + 3]) << 24);
  --off;
  for (int k = 0; k < 4; ++k) overlap[off_pos + static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(off >> (8 * k));
  CHECK_THROWS_AS(parse_container(overlap), FormatError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(parse_container(trailing), FormatError);

  CHECK_THROWS_AS(parse_container(truncated(bytes, 10)), FormatError);
  CHECK_THROWS_AS(decode_plain(parsed), FormatError);
}

TEST_CASE("constant cube under the inter-band scheme") {
  const auto cube = make_cube(CubeKind::constant, 32, 32, 31);
  const auto enc = encode_plain(cube, params_for(Scheme::plain, 25));
  const double p = psnr(cube, enc.reconstruction);
  CHECK((is_lossless(p) || p >= 80.0));
  // 31 near-empty payloads plus framing
  CHECK(enc.total_bits() < 8 * 1200);
}

TEST_CASE("plain bits fall as qp rises") {
  const auto cube = make_cube(CubeKind::natural_gradient, 32, 32, 31);
  CHECK(encode_plain(cube, params_for(Scheme::plain, 5)).total_bits() >
        encode_plain(cube, params_for(Scheme::plain, 50)).total_bits());
}

TEST_CASE("rank-1 cube with one component is near lossless") {
  const auto cube = make_cube(CubeKind::rank1, 32, 32, 31);
  auto p = params_for(Scheme::pca, 5);
  p.n_c = 1;
  const auto enc = encode_pca(cube, p);
  CHECK(psnr(cube, enc.reconstruction) >= 60.0);
}

TEST_CASE("full-rank PCA at qp 5 stays above 55 dB") {
  for (auto kind : {CubeKind::random, CubeKind::natural_gradient, CubeKind::rank3_noise}) {
    const auto cube = make_cube(kind, 16, 16, 8);
    auto p = params_for(Scheme::pca, 5);
    p.n_c = 8;
    CHECK(psnr(cube, encode_pca(cube, p).reconstruction) >= 55.0);
  }
}

TEST_CASE("PCA bits grow with the number of components") {
  const auto cube = make_cube(CubeKind::natural_gradient, 32, 32, 31);
  std::size_t previous = 0;
  for (int nc = 1; nc <= 6; ++nc) {
    auto p = params_for(Scheme::pca, 25);
    p.n_c = nc;
    const auto bits = encode_pca(cube, p).total_bits();
    CHECK(bits > previous);
    previous = bits;
  }
}

TEST_CASE("HPCLS on a cube inside one principal direction") {
  const auto cube = make_cube(CubeKind::rank1, 32, 32, 31);
  auto p = params_for(Scheme::hpcls, 25);
  p.n_ref = 1;
  p.q_ref = 5;
  p.n_c = 1;
  const auto enc = encode_hpcls(cube, p);
  const auto& c = enc.container;
  const auto ref_bits = c.require(SectionId::ref_planes).data.size();
  const auto res_bits = c.require(SectionId::residual_planes).data.size();
  CHECK(res_bits < ref_bits);
  CHECK(psnr(cube, enc.reconstruction) >= 45.0);
}

TEST_CASE("HPCLS weight section size") {
  const auto cube = make_cube(CubeKind::natural_gradient, 40, 24, 31);
  auto p = params_for(Scheme::hpcls, 25);
  p.block_size = 16;
  p.n_ref = 3;
  const auto enc = encode_hpcls(cube, p);
  const std::size_t blocks = 3 * 2;
  CHECK(enc.container.require(SectionId::weights).data.size() == 11 + blocks * 31 * (3 + 1) * 2);
}

TEST_CASE("default quantizer exponents appear in the section headers") {
  const auto cube = make_cube(CubeKind::natural_gradient, 16, 16, 31);
  SchemeParams p;
  p.scheme = Scheme::hpcls_rgb;
  const auto c = encode_hpcls_rgb(cube, p).container;
  CHECK(static_cast<std::int8_t>(c.require(SectionId::ref_basis).data[4]) == -13);
  CHECK(static_cast<std::int8_t>(c.require(SectionId::residual_basis).data[4]) == -13);
  CHECK(static_cast<std::int8_t>(c.require(SectionId::weights).data[9]) == -12);
  CHECK(static_cast<std::int8_t>(c.require(SectionId::rgb_weights).data[9]) == -12);
}

TEST_CASE("scalable preview survives removal of the enhancement layer") {
  const auto cube = make_cube(CubeKind::rank3_noise, 32, 32, 31);
  const auto enc = encode_hpcls_rgb(cube, params_for(Scheme::hpcls_rgb, 25));
  const auto bytes = serialize_container(enc.container);
  const auto full = parse_container(bytes);
  const auto preview_full = decode_hpcls_rgb_preview(full);
  CHECK(preview_full == *enc.preview);

  const auto cut = parse_container(truncated(bytes, full.layer_end(Layer::preview)));
  CHECK_FALSE(cut.complete());
  CHECK(decode_hpcls_rgb_preview(cut) == preview_full);
  CHECK_THROWS_AS(decode_hpcls_rgb(cut), MissingSectionError);

  // sections are ordered so that the preview layer is a prefix
  bool seen_enhancement = false;
  for (const auto& s : full.sections) {
    if (s.layer == Layer::enhancement) seen_enhancement = true;
    if (s.layer == Layer::preview) CHECK_FALSE(seen_enhancement);
  }
  CHECK(seen_enhancement);
}

TEST_CASE("preview of a cube whose RGB follows the references is cheap") {
  const auto cube = make_cube(CubeKind::rank1, 32, 32, 31);
  auto p = params_for(Scheme::hpcls_rgb, 25);
  p.n_ref = 1;
  p.q_ref = 5;
  const auto enc = encode_hpcls_rgb(cube, p);
  CHECK(psnr(*enc.preview_target, *enc.preview) >= 40.0);
  const auto standalone = encode_rgb_preview(*enc.preview_target, 25);
  CHECK(enc.container.require(SectionId::rgb_error).data.size() * 8 < standalone.bits);
}

TEST_CASE("RGB-only regressors for the enhancement layer") {
  const auto cube = make_cube(CubeKind::natural_gradient, 16, 16, 31);
  auto p = params_for(Scheme::hpcls_rgb, 25);
  p.rgb_regressors = RgbRegressors::rgb_only;
  const auto enc = encode_hpcls_rgb(cube, p);
  const auto parsed = reparse(enc.container);
  CHECK(container_params(parsed).rgb_regressors == RgbRegressors::rgb_only);
  CHECK(decode_hpcls_rgb(parsed) == enc.reconstruction);
  CHECK(parse_weights(parsed.require(SectionId::weights).data).regressors == 3);
}

TEST_CASE("preview is a capability of the scalable scheme only") {
  const auto cube = make_cube(CubeKind::natural_gradient, 8, 8, 31);
  const auto enc = encode_pca(cube, params_for(Scheme::pca, 25));
  CHECK_THROWS_AS(decode_hpcls_rgb_preview(enc.container), CapabilityError);
}

TEST_CASE("parameter validation") {
  const auto cube = make_cube(CubeKind::natural_gradient, 8, 8, 6);
  auto p = params_for(Scheme::pca, 4);
  CHECK_THROWS_AS(encode_pca(cube, p), ParamError);
  p.qp = 51;
  CHECK_THROWS_AS(encode_pca(cube, p), ParamError);
  p = params_for(Scheme::pca, 20);
  p.n_c = 7;
  CHECK_THROWS_AS(encode_pca(cube, p), ParamError);
  p.n_c = 0;
  CHECK_THROWS_AS(encode_pca(cube, p), ParamError);
  p = params_for(Scheme::hpcls, 20);
  p.n_ref = 4;
  CHECK_THROWS_AS(encode_hpcls(cube, p), ParamError);
  p = params_for(Scheme::hpcls, 20);
  p.q_ref = 60;
  CHECK_THROWS_AS(encode_hpcls(cube, p), ParamError);
  CHECK_THROWS_AS(encode_hpcls_rgb(cube, params_for(Scheme::hpcls_rgb, 20)), DimensionError);
  CHECK_THROWS_AS(encode_plain(requantize(cube, 12), params_for(Scheme::plain, 20)), RangeError);
}

TEST_CASE("encoding is deterministic") {
  const auto cube = make_cube(CubeKind::rank3_noise, 16, 16, 31);
  for (auto s : {Scheme::plain, Scheme::pca, Scheme::hpcls, Scheme::hpcls_rgb}) {
    const auto a = serialize_container(encode(cube, params_for(s, 30)).container);
    const auto b = serialize_container(encode(cube, params_for(s, 30)).container);
    CHECK(a == b);
  }
}

TEST_CASE("QP sweep is monotone up to one inversion") {
  const auto cube = make_cube(CubeKind::natural_gradient, 24, 24, 31);
  for (auto s : {Scheme::plain, Scheme::pca, Scheme::hpcls, Scheme::hpcls_rgb}) {
    CAPTURE(scheme_name(s));
    std::vector<std::size_t> bits;
    std::vector<double> quality;
    for (int qp = 5; qp <= 50; qp += 5) {
      auto p = params_for(s, qp);
      const auto enc = encode(cube, p);
      bits.push_back(enc.total_bits());
      quality.push_back(psnr(cube, enc.reconstruction));
    }
    int bit_inversions = 0;
    int psnr_inversions = 0;
    for (std::size_t i = 1; i < bits.size(); ++i) {
      bit_inversions += bits[i] > bits[i - 1] ? 1 : 0;
      psnr_inversions += quality[i] > quality[i - 1] ? 1 : 0;
    }
    CHECK(bit_inversions <= 1);
    CHECK(psnr_inversions <= 1);
  }
}

TEST_CASE("per-band intra baseline and stand-alone preview") {
  const auto cube = make_cube(CubeKind::natural_gradient, 16, 16, 31);
  const auto base = encode_bands_intra(cube, 20);
  CHECK(base.reconstruction.same_shape(cube));
  CHECK(base.bits > 0);
  const auto rgb = render_rgb(cube, cie1931_2deg_31());
  const auto pv = encode_rgb_preview(rgb, 5);
  CHECK(psnr(rgb, pv.reconstruction) > 40.0);
  CHECK(encode_rgb_preview(rgb, 45).bits < pv.bits);
}
