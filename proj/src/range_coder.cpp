#include "msic/range_coder.hpp"

#include "msic/errors.hpp"

namespace msic {

namespace {
constexpr std::uint32_t kTop = 1U << 24U;
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000U || (low_ >> 32U) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32U);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24U);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFU) << 8U;
}

void RangeEncoder::encode(BitModel& model, int bit) {
  const std::uint32_t bound = (range_ >> BitModel::kBits) * model.p0();
  if (bit == 0) {
    range_ = bound;
  } else {
    low_ += bound;
    range_ -= bound;
  }
  model.update(bit);
  while (range_ < kTop) {
    range_ <<= 8U;
    shift_low();
  }
}

void RangeEncoder::encode_bypass(int bit) {
  range_ >>= 1U;
  if (bit != 0) low_ += range_;
  while (range_ < kTop) {
    range_ <<= 8U;
    shift_low();
  }
}

void RangeEncoder::encode_bypass_bits(std::uint32_t value, int count) {
  for (int i = count - 1; i >= 0; --i) encode_bypass(static_cast<int>((value >> static_cast<unsigned>(i)) & 1U));
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> data) : data_(data) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8U) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= data_.size()) throw DecodeError("range decoder ran past the end of the payload");
  return data_[pos_++];
}

void RangeDecoder::normalize() {
  while (range_ < kTop) {
    range_ <<= 8U;
    code_ = (code_ << 8U) | next_byte();
  }
}

int RangeDecoder::decode(BitModel& model) {
  const std::uint32_t bound = (range_ >> BitModel::kBits) * model.p0();
  int bit = 0;
  if (code_ < bound) {
    range_ = bound;
  } else {
    code_ -= bound;
    range_ -= bound;
    bit = 1;
  }
  model.update(bit);
  normalize();
  return bit;
}

int RangeDecoder::decode_bypass() {
  range_ >>= 1U;
  int bit = 0;
  if (code_ >= range_) {
    code_ -= range_;
    bit = 1;
  }
  normalize();
  return bit;
}

std::uint32_t RangeDecoder::decode_bypass_bits(int count) {
  std::uint32_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1U) | static_cast<std::uint32_t>(decode_bypass());
  return v;
}

}  // namespace msic
