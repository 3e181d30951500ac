#include "msic/container.hpp"

#include <algorithm>

#include "msic/byte_io.hpp"
#include "msic/errors.hpp"

namespace msic {

namespace {

constexpr char kMagic[5] = "MSC1";
constexpr std::size_t kFixedHeader = 4 + 1 + 1 + 2 + 2 + 2 + 1 + 1;
constexpr std::size_t kParamBytes = 5;
constexpr std::size_t kTableEntryBytes = 10;

bool valid_scheme(std::uint8_t v) { return v >= 1 && v <= 4; }
bool valid_layer(std::uint8_t v) { return v <= 2; }
bool valid_section(std::uint8_t v) { return v >= 1 && v <= 9; }

}  // namespace

const Section* CodedContainer::find(SectionId id) const noexcept {
  for (const auto& s : sections) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const Section* CodedContainer::find_normalization(SectionId group) const noexcept {
  for (const auto& s : sections) {
    if (s.id != SectionId::normalization) continue;
    // absent sections carry no payload, so their group is unknown
    if (!s.present || (!s.data.empty() && s.data[0] == static_cast<std::uint8_t>(group))) return &s;
  }
  return nullptr;
}

const Section& CodedContainer::require(SectionId id) const {
  const auto* s = find(id);
  if (s == nullptr || !s->present) {
    throw MissingSectionError("container lacks section " + std::to_string(static_cast<int>(id)));
  }
  return *s;
}

const Section& CodedContainer::require_normalization(SectionId group) const {
  for (const auto& s : sections) {
    if (s.id == SectionId::normalization && s.present && !s.data.empty() &&
        s.data[0] == static_cast<std::uint8_t>(group)) {
      return s;
    }
  }
  throw MissingSectionError("container lacks normalization for section " + std::to_string(static_cast<int>(group)));
}

bool CodedContainer::complete() const noexcept {
  return std::all_of(sections.begin(), sections.end(), [](const Section& s) { return s.present; });
}

std::size_t CodedContainer::header_bytes() const noexcept {
  return kFixedHeader + kParamBytes * params.size() + 2 + kTableEntryBytes * sections.size();
}

std::size_t CodedContainer::file_bytes() const noexcept {
  std::size_t n = header_bytes();
  for (const auto& s : sections) n += s.data.size();
  return n;
}

std::size_t CodedContainer::layer_end(Layer layer) const {
  std::size_t offset = header_bytes();
  std::size_t end = 0;
  bool found = false;
  for (const auto& s : sections) {
    offset += s.data.size();
    if (s.layer == layer) {
      end = offset;
      found = true;
    }
  }
  if (!found) throw MissingSectionError("container has no sections in the requested layer");
  return end;
}

bool CodedContainer::has_param(std::uint8_t tag) const noexcept {
  return std::any_of(params.begin(), params.end(), [tag](const auto& p) { return p.first == tag; });
}

std::int32_t CodedContainer::param(std::uint8_t tag) const {
  for (const auto& [t, v] : params) {
    if (t == tag) return v;
  }
  throw FormatError("container lacks parameter tag " + std::to_string(tag));
}

std::vector<std::uint8_t> serialize_container(const CodedContainer& c) {
  if (!c.complete()) throw FormatError("cannot serialize a container with absent sections");
  ByteWriter out;
  out.tag(kMagic);
  out.u8(CodedContainer::kVersion);
  out.u8(static_cast<std::uint8_t>(c.scheme));
  out.u16(static_cast<std::uint16_t>(c.width));
  out.u16(static_cast<std::uint16_t>(c.height));
  out.u16(static_cast<std::uint16_t>(c.bands));
  out.u8(static_cast<std::uint8_t>(c.bit_depth));
  out.u8(static_cast<std::uint8_t>(c.params.size()));
  for (const auto& [tag, value] : c.params) {
    out.u8(tag);
    out.i32(value);
  }
  out.u16(static_cast<std::uint16_t>(c.sections.size()));
  std::size_t offset = c.header_bytes();
  for (const auto& s : c.sections) {
    out.u8(static_cast<std::uint8_t>(s.layer));
    out.u8(static_cast<std::uint8_t>(s.id));
    out.u32(static_cast<std::uint32_t>(offset));
    out.u32(static_cast<std::uint32_t>(s.data.size()));
    offset += s.data.size();
  }
  for (const auto& s : c.sections) out.bytes(s.data);
  return out.take();
}

CodedContainer parse_container(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  CodedContainer c;
  try {
    if (!in.tag_is(kMagic)) throw FormatError("missing MSC1 magic");
    const auto version = in.u8();
    if (version != CodedContainer::kVersion) throw FormatError("unsupported container version");
    const auto scheme = in.u8();
    if (!valid_scheme(scheme)) throw UnsupportedSchemeError("unsupported scheme id " + std::to_string(scheme));
    c.scheme = static_cast<Scheme>(scheme);
    c.width = in.u16();
    c.height = in.u16();
    c.bands = in.u16();
    c.bit_depth = in.u8();
    const int param_count = in.u8();
    for (int i = 0; i < param_count; ++i) {
      const auto tag = in.u8();
      c.params.emplace_back(tag, in.i32());
    }
    const int section_count = in.u16();
    struct Entry {
      std::uint8_t layer, id;
      std::uint32_t offset, length;
    };
    std::vector<Entry> table(static_cast<std::size_t>(section_count));
    for (auto& e : table) {
      e.layer = in.u8();
      e.id = in.u8();
      e.offset = in.u32();
      e.length = in.u32();
    }

    // sections must follow the table back to back, without gaps or overlap
    std::size_t expected = in.position();
    for (const auto& e : table) {
      if (!valid_layer(e.layer)) throw FormatError("invalid layer id " + std::to_string(e.layer));
      if (!valid_section(e.id)) throw FormatError("invalid section id " + std::to_string(e.id));
      if (e.offset != expected) throw FormatError("section extents overlap or leave gaps");
      expected += e.length;
      Section s;
      s.layer = static_cast<Layer>(e.layer);
      s.id = static_cast<SectionId>(e.id);
      if (expected <= bytes.size()) {
        s.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(e.offset),
                      bytes.begin() + static_cast<std::ptrdiff_t>(expected));
      } else {
        s.present = false;
      }
      c.sections.push_back(std::move(s));
    }
    if (bytes.size() > expected) throw FormatError("trailing bytes after the last section");
  } catch (const LengthError&) {
    throw FormatError("container header truncated");
  }
  if (c.width < 1 || c.height < 1 || c.bands < 1) throw FormatError("container dimensions must be positive");
  return c;
}

CodedContainer read_container(const std::string& path) { return parse_container(read_file_bytes(path)); }

std::size_t write_container(const CodedContainer& container, const std::string& path) {
  const auto bytes = serialize_container(container);
  write_file_bytes(path, bytes);
  return bytes.size();
}

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::plain:
      return "plain";
    case Scheme::pca:
      return "pca";
    case Scheme::hpcls:
      return "hpcls";
    case Scheme::hpcls_rgb:
      return "hpcls-rgb";
  }
  return "unknown";
}

}  // namespace msic
