#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "msic/errors.hpp"
#include "msic/external_encoder.hpp"

using namespace msic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "msic_test_adapter" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_script(const fs::path& dir, const std::string& body) {
  const auto path = dir / "stub.sh";
  std::ofstream(path) << "#!/bin/sh\n" << body << "\n";
  fs::permissions(path, fs::perms::owner_all);
  return path.string();
}

std::vector<Plane> ramp_sequence(int count, int w, int h) {
  std::vector<Plane> seq;
  for (int n = 0; n < count; ++n) {
    Plane p(w, h);
    for (std::size_t i = 0; i < p.samples.size(); ++i) p.samples[i] = static_cast<std::uint16_t>((i * 7 + n * 31) % 1024);
    seq.push_back(p);
  }
  return seq;
}

AdapterConfig config_for(const std::string& exe, const fs::path& workdir) {
  AdapterConfig c;
  c.enabled = true;
  c.executable = exe;
  c.config_template = "unused.cfg";
  c.workdir = workdir.string();
  c.timeout_seconds = 20;
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_adapter_config(
      "# comment\nexecutable = /opt/vtm/EncoderApp\ntemplate=/opt/vtm/ra.cfg\nworkdir = /tmp/w\n"
      "threads = 4\ntimeout = 30\ndimension_multiple = 8\n");
  CHECK(c.enabled);
  CHECK(c.executable == "/opt/vtm/EncoderApp");
  CHECK(c.config_template == "/opt/vtm/ra.cfg");
  CHECK(c.workdir == "/tmp/w");
  CHECK(c.threads == 4);
  CHECK(c.timeout_seconds == 30);
  CHECK(c.dimension_multiple == 8);

  CHECK_FALSE(parse_adapter_config("executable = /x\nenabled = false\n").enabled);
  CHECK_FALSE(parse_adapter_config("").enabled);
  CHECK_THROWS_AS(parse_adapter_config("colour = blue\n"), FormatError);
  CHECK_THROWS_AS(parse_adapter_config("threads = many\n"), FormatError);
  CHECK_THROWS_AS(parse_adapter_config("no equals sign\n"), FormatError);
  CHECK_THROWS_AS(parse_adapter_config("timeout = 0\n"), FormatError);
}

TEST_CASE("log parsing extracts the integer before 'bits'") {
  const std::string log =
      "VVCSoftware: VTM Encoder Version\n"
      "POC    0 LId:  0 TId: 0 ( IDR_W_RADL, I-SLICE, QP 19 )     120344 bits [Y 45.1 dB]\n"
      "POC    2 LId:  0 TId: 0 ( CRA, I-SLICE, QP 19 )       99001 bits [Y 45.0 dB]\n"
      "POC    1 LId:  0 TId: 1 ( TRAIL, B-SLICE, QP 22 )       1234 bits [Y 44.9 dB]\n"
      " Total Frames |   Bitrate     Y-PSNR\n";
  const auto bits = parse_poc_bits(log);
  CHECK(bits == std::vector<std::int64_t>{120344, 1234, 99001});
  CHECK(parse_poc_bits("nothing here\n").empty());
  CHECK_THROWS_AS(parse_poc_bits("POC 0 ... 5 bits\nPOC 2 ... 6 bits\n"), ExternalToolError);
}

TEST_CASE("disabled adapter is a missing capability") {
  AdapterConfig c;
  CHECK_THROWS_AS(external_encoder_run(ramp_sequence(1, 4, 4), c, 22), CapabilityError);
}

TEST_CASE("identity stub roundtrip reports the declared bit counts") {
  const auto dir = scratch("identity");
  const auto cfg = config_for(MSIC_IDENTITY_ENCODER, dir);
  const auto seq = ramp_sequence(5, 8, 6);
  const auto r = external_encoder_run(seq, cfg, 27);
  CHECK(r.bits_per_plane == std::vector<std::int64_t>{1000, 1001, 1002, 1003, 1004});
  CHECK(r.total_bits() == 5010);
  REQUIRE(r.reconstructions.size() == 5);
  for (std::size_t i = 0; i < seq.size(); ++i) CHECK(r.reconstructions[i] == seq[i]);
  CHECK(fs::exists(dir / "input.json"));
}

TEST_CASE("odd dimensions are rejected before invocation") {
  const auto dir = scratch("odd");
  const auto marker = dir / "ran";
  const auto exe = write_script(dir, "touch '" + marker.string() + "'");
  CHECK_THROWS_AS(external_encoder_run(ramp_sequence(2, 5, 4), config_for(exe, dir), 22), DimensionError);
  CHECK_FALSE(fs::exists(marker));
}

TEST_CASE("missing executable, failing exit, garbled output and timeout") {
  const auto dir = scratch("failures");
  const auto seq = ramp_sequence(2, 4, 4);
  CHECK_THROWS_AS(external_encoder_run(seq, config_for((dir / "absent").string(), dir), 22), CapabilityError);

  CHECK_THROWS_AS(external_encoder_run(seq, config_for(write_script(dir, "exit 3"), dir), 22), ExternalToolError);

  CHECK_THROWS_AS(external_encoder_run(seq, config_for(write_script(dir, "echo hello"), dir), 22), ExternalToolError);

  auto slow = config_for(write_script(dir, "sleep 30"), dir);
  slow.timeout_seconds = 1;
  CHECK_THROWS_AS(external_encoder_run(seq, slow, 22), ExternalToolError);
}
