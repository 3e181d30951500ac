#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace msic {

// Adaptive binary range coder in the LZMA style: 11-bit probabilities,
// adaptation shift 5, carry propagation through a cached byte.
class BitModel {
 public:
  static constexpr int kBits = 11;
  static constexpr std::uint32_t kOne = 1U << kBits;
  static constexpr int kShift = 5;

  [[nodiscard]] std::uint32_t p0() const noexcept { return p0_; }
  void update(int bit) noexcept {
    if (bit == 0) {
      p0_ += (kOne - p0_) >> kShift;
    } else {
      p0_ -= p0_ >> kShift;
    }
  }

 private:
  std::uint32_t p0_ = kOne / 2;
};

class RangeEncoder {
 public:
  void encode(BitModel& model, int bit);
  void encode_bypass(int bit);
  void encode_bypass_bits(std::uint32_t value, int count);
  // Flushes pending state and returns the coded bytes.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFU;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

// Decoder counterpart. Reading past the end of the input raises DecodeError.
class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> data);

  int decode(BitModel& model);
  int decode_bypass();
  std::uint32_t decode_bypass_bits(int count);

 private:
  std::uint8_t next_byte();
  void normalize();

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFU;
  std::uint32_t code_ = 0;
};

}  // namespace msic
