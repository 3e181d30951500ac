#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace msic {

enum class Scheme : std::uint8_t { plain = 1, pca = 2, hpcls = 3, hpcls_rgb = 4 };

enum class Layer : std::uint8_t { single = 0, preview = 1, enhancement = 2 };

enum class SectionId : std::uint8_t {
  ref_basis = 1,
  ref_planes = 2,
  weights = 3,
  residual_basis = 4,
  residual_planes = 5,
  rgb_weights = 6,
  rgb_error = 7,
  normalization = 8,
  plain_gop = 9,
};

struct Section {
  Layer layer = Layer::single;
  SectionId id = SectionId::plain_gop;
  std::vector<std::uint8_t> data;
  // False when the file ends before this section (truncated scalable stream).
  bool present = true;
};

// Sectioned bitstream. On disk (little-endian):
//   "MSC1", u8 version, u8 scheme, u16 width, u16 height, u16 bands,
//   u8 bit depth, u8 param count, {u8 tag, i32 value} * count,
//   u16 section count, {u8 layer, u8 id, u32 offset, u32 length} * count,
//   section payloads back to back in table order.
struct CodedContainer {
  static constexpr std::uint8_t kVersion = 1;

  Scheme scheme = Scheme::plain;
  int width = 0;
  int height = 0;
  int bands = 0;
  int bit_depth = 10;
  std::vector<std::pair<std::uint8_t, std::int32_t>> params;
  std::vector<Section> sections;

  // First present-or-absent section with this id (and normalization group,
  // for SectionId::normalization); nullptr if the table has none.
  [[nodiscard]] const Section* find(SectionId id) const noexcept;
  [[nodiscard]] const Section* find_normalization(SectionId group) const noexcept;
  // Like find, but throws MissingSectionError when absent or truncated.
  [[nodiscard]] const Section& require(SectionId id) const;
  [[nodiscard]] const Section& require_normalization(SectionId group) const;

  [[nodiscard]] bool complete() const noexcept;
  [[nodiscard]] std::size_t header_bytes() const noexcept;
  [[nodiscard]] std::size_t file_bytes() const noexcept;
  // Rate used for RD points: 8 * file size.
  [[nodiscard]] std::size_t total_bits() const noexcept { return 8 * file_bytes(); }
  // End of the last section of the given layer, i.e. the truncation point
  // that keeps that layer and everything before it.
  [[nodiscard]] std::size_t layer_end(Layer layer) const;

  [[nodiscard]] bool has_param(std::uint8_t tag) const noexcept;
  [[nodiscard]] std::int32_t param(std::uint8_t tag) const;
};

std::vector<std::uint8_t> serialize_container(const CodedContainer& container);
// Validates the header and section table. Sections that extend past the end
// of the data are marked absent rather than rejected.
CodedContainer parse_container(std::span<const std::uint8_t> bytes);

CodedContainer read_container(const std::string& path);
std::size_t write_container(const CodedContainer& container, const std::string& path);

std::string scheme_name(Scheme scheme);

}  // namespace msic
