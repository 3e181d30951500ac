#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "msic/errors.hpp"
#include "msic/range_coder.hpp"
#include "msic/spatial_codec.hpp"
#include "synthetic.hpp"

using namespace msic;

namespace {

Plane random_plane(int w, int h, std::uint32_t seed, int lo = 0, int hi = 1023) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> u(lo, hi);
  Plane p(w, h);
  for (auto& s : p.samples) s = static_cast<std::uint16_t>(u(rng));
  return p;
}

Plane band_of(const SpectralCube& c, int band) {
  const auto src = c.plane(band);
  return Plane(c.width(), c.height(), std::vector<std::uint16_t>(src.begin(), src.end()));
}

double plane_mse(const Plane& a, const Plane& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = double(a.samples[i]) - double(b.samples[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.samples.size());
}

}  // namespace

TEST_CASE("qp to step mapping") {
  CHECK(qp_to_step(4) == 1.0);
  CHECK(qp_to_step(10) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(qp_to_step(50) == doctest::Approx(203.18733465).epsilon(1e-9));
  CHECK(qp_to_step(0) == doctest::Approx(std::pow(2.0, -4.0 / 6.0)));
  CHECK_THROWS_AS(qp_to_step(-1), ParamError);
  CHECK_THROWS_AS(qp_to_step(64), ParamError);
}

TEST_CASE("range coder roundtrip with adaptive and bypass bits") {
  std::mt19937 rng(3);
  std::vector<int> bits;
  std::vector<int> kinds;
  for (int i = 0; i < 20000; ++i) {
    kinds.push_back(static_cast<int>(rng() % 3));
    // skewed source so adaptation matters
    bits.push_back(rng() % 10 < 2 ? 1 : 0);
  }
  RangeEncoder enc;
  BitModel m[2];
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (kinds[i] == 2) {
      enc.encode_bypass(bits[i]);
    } else {
      enc.encode(m[kinds[i]], bits[i]);
    }
  }
  enc.encode_bypass_bits(0x2A5, 10);
  const auto bytes = enc.finish();
  CHECK(bytes.size() < 20000 / 8);

  RangeDecoder dec(bytes);
  BitModel d[2];
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const int b = kinds[i] == 2 ? dec.decode_bypass() : dec.decode(d[kinds[i]]);
    REQUIRE(b == bits[i]);
  }
  CHECK(dec.decode_bypass_bits(10) == 0x2A5);
}

TEST_CASE("range decoder refuses to run far past its input") {
  const std::vector<std::uint8_t> tiny{0, 0, 0, 0, 0};
  RangeDecoder dec(tiny);
  BitModel m;
  CHECK_THROWS_AS(
      [&] {
        for (int i = 0; i < 100000; ++i) dec.decode(m);
      }(),
      DecodeError);
}

TEST_CASE("constant plane at qp 5 reconstructs exactly") {
  for (int v : {0, 1, 300, 511, 512, 1000, 1023}) {
    const Plane p(19, 13, std::vector<std::uint16_t>(19 * 13, static_cast<std::uint16_t>(v)));
    const auto coded = encode_intra(p, 5);
    CHECK(coded.reconstruction == p);
    CHECK(decode_intra(coded.payload) == p);
  }
}

TEST_CASE("intra closed loop on random planes") {
  std::mt19937 rng(17);
  for (int i = 0; i < 100; ++i) {
    const int w = 1 + static_cast<int>(rng() % 40);
    const int h = 1 + static_cast<int>(rng() % 40);
    const int qp = static_cast<int>(rng() % 64);
    const auto p = random_plane(w, h, static_cast<std::uint32_t>(i));
    const auto coded = encode_intra(p, qp);
    REQUIRE(coded.mode == PlaneMode::intra);
    REQUIRE(coded.reconstruction.width == w);
    REQUIRE(coded.reconstruction.height == h);
    REQUIRE(decode_intra(coded.payload) == coded.reconstruction);
    REQUIRE(coded.bits() == coded.payload.size() * 8);
  }
}

TEST_CASE("intra encoding is deterministic") {
  const auto p = random_plane(33, 21, 4);
  CHECK(encode_intra(p, 22).payload == encode_intra(p, 22).payload);
}

TEST_CASE("low qp is near-lossless") {
  const auto cube = testing::make_cube(testing::CubeKind::natural_gradient, 32, 32, 4);
  const auto p = band_of(cube, 2);
  const auto coded = encode_intra(p, 0);
  CHECK(plane_mse(p, coded.reconstruction) < 0.5);
}

TEST_CASE("coarser steps cost fewer bits and add distortion on average") {
  const auto cube = testing::make_cube(testing::CubeKind::natural_gradient, 48, 48, 8);
  const auto rank3 = testing::make_cube(testing::CubeKind::rank3_noise, 48, 48, 8);
  double mse_fine = 0.0;
  double mse_coarse = 0.0;
  for (const auto* c : {&cube, &rank3}) {
    for (int b = 0; b < 8; ++b) {
      const auto p = band_of(*c, b);
      const auto lo = encode_intra(p, 5);
      const auto hi = encode_intra(p, 50);
      CHECK(hi.bits() <= lo.bits());
      for (int qp = 10; qp <= 40; qp += 6) {
        // qp + 6 doubles the step
        mse_fine += plane_mse(p, encode_intra(p, qp).reconstruction);
        mse_coarse += plane_mse(p, encode_intra(p, qp + 6).reconstruction);
      }
    }
  }
  CHECK(mse_fine <= mse_coarse + 1e-9);
}

TEST_CASE("intra rejects out-of-range samples and bad qp") {
  Plane p(2, 2);
  p.samples[3] = 1024;
  CHECK_THROWS_AS(encode_intra(p, 20), RangeError);
  CHECK_THROWS_AS(encode_intra(Plane(2, 2), 64), ParamError);
  CHECK_THROWS(encode_intra(Plane(2, 2, std::vector<std::uint16_t>(3)), 20));
}

TEST_CASE("corrupt payloads raise decode errors") {
  CHECK_THROWS_AS(decode_intra({}), DecodeError);
  const auto coded = encode_intra(random_plane(24, 24, 9), 12);
  for (std::size_t cut : {std::size_t{1}, std::size_t{5}, std::size_t{9}, coded.payload.size() / 2,
                          coded.payload.size() - 1}) {
    const std::vector<std::uint8_t> truncated(coded.payload.begin(), coded.payload.begin() + static_cast<long>(cut));
    CHECK_THROWS_AS(decode_intra(truncated), DecodeError);
  }
  auto wrong_mode = coded.payload;
  wrong_mode[0] = 1;
  CHECK_THROWS_AS(decode_intra(wrong_mode), DecodeError);
  auto unknown_mode = coded.payload;
  unknown_mode[0] = 7;
  CHECK_THROWS_AS(payload_mode(unknown_mode), DecodeError);
}

TEST_CASE("bi prediction rounds the average up at halves") {
  const Plane a(3, 1, {0, 1, 1023});
  const Plane b(3, 1, {1, 2, 1022});
  const auto p = bi_prediction(a, b);
  CHECK(p.samples == std::vector<std::uint16_t>{1, 2, 1023});
}

TEST_CASE("inter plane equal to the bi prediction codes an all-zero residual") {
  const auto a = random_plane(32, 16, 1);
  const auto b = random_plane(32, 16, 2);
  const auto target = bi_prediction(a, b);
  const auto coded = encode_inter_bi(target, a, b, 30);
  CHECK(coded.mode == PlaneMode::bi);
  CHECK(coded.reconstruction == target);
  CHECK(coded.clamped_samples == 0);
  const auto intra = encode_intra(target, 30);
  CHECK(coded.bits() < intra.bits());
  CHECK(coded.payload.size() <= 16);
}

TEST_CASE("inter closed loop and clamp accounting") {
  std::mt19937 rng(8);
  for (int i = 0; i < 30; ++i) {
    const int w = 1 + static_cast<int>(rng() % 30);
    const int h = 1 + static_cast<int>(rng() % 30);
    const auto a = random_plane(w, h, rng());
    const auto b = random_plane(w, h, rng());
    const auto x = random_plane(w, h, rng());
    const int qp = static_cast<int>(rng() % 51);
    const auto coded = encode_inter_bi(x, a, b, qp);
    REQUIRE(decode_inter_bi(coded.payload, a, b) == coded.reconstruction);
    // independent count of residuals outside [-512, 511]
    const auto pred = bi_prediction(a, b);
    std::size_t clamped = 0;
    for (std::size_t k = 0; k < x.samples.size(); ++k) {
      const int r = int(x.samples[k]) - int(pred.samples[k]) + 512;
      clamped += (r < 0 || r > 1023) ? 1 : 0;
    }
    CHECK(coded.clamped_samples == clamped);
  }
}

TEST_CASE("inter coding beats intra for a plane equal to one reference") {
  const auto cube = testing::make_cube(testing::CubeKind::natural_gradient, 32, 32, 3);
  const auto a = band_of(cube, 0);
  const auto b = band_of(cube, 2);
  const auto ra = encode_intra(a, 20).reconstruction;
  const auto rb = encode_intra(b, 20).reconstruction;
  CHECK(encode_inter_bi(ra, ra, rb, 20).bits() < encode_intra(ra, 20).bits());
}

TEST_CASE("inter rejects reference dimension mismatches") {
  CHECK_THROWS_AS(encode_inter_bi(Plane(4, 4), Plane(4, 4), Plane(4, 3), 20), DimensionError);
  const auto coded = encode_inter_bi(Plane(4, 4), Plane(4, 4), Plane(4, 4), 20);
  CHECK_THROWS_AS(decode_inter_bi(coded.payload, Plane(4, 4), Plane(3, 4)), DimensionError);
  CHECK_THROWS_AS(decode_inter_bi(encode_intra(Plane(4, 4), 20).payload, Plane(4, 4), Plane(4, 4)), DecodeError);
}
