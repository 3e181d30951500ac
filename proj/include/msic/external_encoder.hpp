#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msic/spatial_codec.hpp"

namespace msic {

// Adapter for an external video encoder binary (e.g. the VVC reference
// encoder). Config file is text with one key=value per line:
//   executable = /path/to/EncoderApp
//   template   = /path/to/randomaccess_gop30.cfg
//   workdir    = /tmp/msic-vtm
//   threads    = 1
//   timeout    = 600
//   dimension_multiple = 2
//   enabled    = true
struct AdapterConfig {
  bool enabled = false;
  std::string executable;
  std::string config_template;
  std::string workdir;
  int threads = 1;
  int timeout_seconds = 600;
  int dimension_multiple = 2;
};

AdapterConfig parse_adapter_config(const std::string& text);
AdapterConfig load_adapter_config(const std::string& path);

struct ExternalRunResult {
  std::vector<std::int64_t> bits_per_plane;  // indexed by picture order
  std::vector<Plane> reconstructions;
  [[nodiscard]] std::int64_t total_bits() const;
};

// Writes the sequence as raw 10-bit little-endian monochrome planes plus a
// sidecar, runs the encoder, parses "POC <n> ... <bits> bits" lines from its
// output and reads the reconstruction back. Runs sharing a workdir are
// serialized with a lock file.
ExternalRunResult external_encoder_run(const std::vector<Plane>& sequence, const AdapterConfig& config, int qp);

// Extracts per-picture bit counts from encoder log text, ordered by POC.
std::vector<std::int64_t> parse_poc_bits(const std::string& log);

}  // namespace msic
