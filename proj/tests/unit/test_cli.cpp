#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "msic/cube_io.hpp"
#include "msic/errors.hpp"
#include "synthetic.hpp"

using namespace msic;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(MSIC_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Run r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Value printed after "<key> " on its own line.
std::string field(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("msic_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("encode then decode reproduces the encoder-side PSNR") {
  TempDir dir;
  const auto cube = testing::make_cube(testing::CubeKind::natural_gradient, 24, 16, 31);
  store_cube(cube, dir / "in.msrc");
  for (const std::string scheme : {"plain", "pca", "hpcls", "hpcls-rgb"}) {
    CAPTURE(scheme);
    const auto e = run("encode --scheme " + scheme + " --n-c 3 --qp 20 --block-size 8 " + (dir / "in.msrc") + " " +
                       (dir / "out.msc"));
    REQUIRE(e.code == 0);
    const auto bits = std::stoull(field(e.out, "total_bits"));
    CHECK(bits == 8 * fs::file_size(dir / "out.msc"));
    const auto d = run("decode " + (dir / "out.msc") + " " + (dir / "dec.msrc") + " --reference " + (dir / "in.msrc"));
    REQUIRE(d.code == 0);
    CHECK(std::stod(field(d.out, "psnr")) == doctest::Approx(std::stod(field(e.out, "psnr"))).epsilon(1e-9));
    const auto m = run("metrics " + (dir / "in.msrc") + " " + (dir / "dec.msrc"));
    REQUIRE(m.code == 0);
    CHECK(field(m.out, "psnr") == field(d.out, "psnr"));
  }
}

TEST_CASE("preview export") {
  TempDir dir;
  store_cube(testing::make_cube(testing::CubeKind::rank3_noise, 16, 16, 31), dir / "in.msrc");
  REQUIRE(run("encode --scheme hpcls-rgb --block-size 8 " + (dir / "in.msrc") + " " + (dir / "s4.msc")).code == 0);
  REQUIRE(run("decode " + (dir / "s4.msc") + " --preview " + (dir / "p.ppm")).code == 0);
  const auto ppm = slurp(dir / "p.ppm");
  CHECK(ppm.rfind("P6\n16 16\n65535\n", 0) == 0);
  CHECK(ppm.size() == 15 + 16 * 16 * 3 * 2);

  REQUIRE(run("encode --scheme pca " + (dir / "in.msrc") + " " + (dir / "s2.msc")).code == 0);
  CHECK(run("decode " + (dir / "s2.msc") + " --preview " + (dir / "q.ppm")).code == 1);
}

TEST_CASE("usage errors exit with 2") {
  TempDir dir;
  store_cube(testing::make_cube(testing::CubeKind::random, 8, 8, 4), dir / "in.msrc");
  const auto in = dir / "in.msrc";
  const auto out = dir / "o.msc";
  CHECK(run("").code == 2);
  CHECK(run("encode " + in + " " + out).code == 2);
  CHECK(run("encode --scheme jpeg " + in + " " + out).code == 2);
  CHECK(run("encode --scheme pca --qp 51 " + in + " " + out).code == 2);
  CHECK(run("encode --scheme pca --qp abc " + in + " " + out).code == 2);
  CHECK(run("encode --scheme pca --n-c 5 " + in + " " + out).code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("decode " + out).code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("data errors exit with 1") {
  TempDir dir;
  std::ofstream(dir / "bad.msc") << "XXXX0000000000000000000000";
  CHECK(run("decode " + (dir / "bad.msc") + " " + (dir / "o.msrc")).code == 1);
  CHECK(run("metrics " + (dir / "none.msrc") + " " + (dir / "none.msrc")).code == 1);
  store_cube(requantize(testing::make_cube(testing::CubeKind::random, 8, 8, 4), 12), dir / "deep.msrc");
  CHECK(run("encode --scheme plain " + (dir / "deep.msrc") + " " + (dir / "o.msc")).code == 1);
  CHECK(run("encode --scheme plain --external --adapter " + (dir / "none.cfg") + " " + (dir / "deep.msrc") + " " +
            (dir / "o.msrc"))
            .code == 1);
}

TEST_CASE("crop writes four corner crops") {
  TempDir dir;
  const auto cube = testing::make_cube(testing::CubeKind::random, 300, 260, 2);
  store_cube(cube, dir / "big.msrc");
  REQUIRE(run("crop " + (dir / "big.msrc") + " " + (dir / "c")).code == 0);
  const auto crops = crop_quadrants(cube);
  for (int i = 0; i < 4; ++i) CHECK(load_cube(dir / ("c_" + std::to_string(i) + ".msrc")) == crops[static_cast<std::size_t>(i)]);
}

TEST_CASE("metrics on identical cubes") {
  TempDir dir;
  store_cube(testing::make_cube(testing::CubeKind::random, 8, 8, 3), dir / "a.msrc");
  const auto m = run("metrics " + (dir / "a.msrc") + " " + (dir / "a.msrc"));
  CHECK(m.code == 0);
  CHECK(field(m.out, "psnr") == "inf");
  CHECK(field(m.out, "mse") == "0.0000000000");
}

TEST_CASE("sweep writes a deterministic CSV") {
  TempDir dir;
  store_cube(testing::make_cube(testing::CubeKind::natural_gradient, 16, 16, 31), dir / "img.msrc");
  std::ofstream(dir / "grid.txt") << "label = pca\nscheme = pca\nimages = img.msrc\nqp = 20, 40\n";
  const auto a = run("sweep " + (dir / "grid.txt") + " " + (dir / "a.csv") + " --jobs 2");
  REQUIRE(a.code == 0);
  REQUIRE(run("sweep " + (dir / "grid.txt") + " " + (dir / "b.csv")).code == 0);
  const auto csv = slurp(dir / "a.csv");
  CHECK(csv == slurp(dir / "b.csv"));
  int lines = 0;
  for (char c : csv) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 3);

  std::ofstream(dir / "missing.txt") << "scheme = pca\nimages = img.msrc, gone.msrc\nqp = 20\n";
  CHECK(run("sweep " + (dir / "missing.txt") + " " + (dir / "c.csv")).code == 1);
  CHECK_FALSE(fs::exists(dir / "c.csv"));

  std::ofstream(dir / "bad.txt") << "scheme = pca\nimages = img.msrc\nn_c = 40\n";
  CHECK(run("sweep " + (dir / "bad.txt") + " " + (dir / "d.csv")).code == 1);
  CHECK_FALSE(fs::exists(dir / "d.csv"));
}

TEST_CASE("external adapter via flag and environment") {
  TempDir dir;
  const auto cube = testing::make_cube(testing::CubeKind::natural_gradient, 8, 8, 5);
  store_cube(cube, dir / "in.msrc");
  std::ofstream(dir / "adapter.cfg") << "executable = " << MSIC_IDENTITY_ENCODER << "\ntemplate = unused.cfg\nworkdir = "
                                     << (dir / "work") << "\ntimeout = 30\nenabled = true\n";
  const auto e = run("encode --scheme plain --qp 30 --external --adapter " + (dir / "adapter.cfg") + " " +
                     (dir / "in.msrc") + " " + (dir / "rec.msrc"));
  REQUIRE(e.code == 0);
  CHECK(field(e.out, "total_bits") == "5010");
  CHECK(field(e.out, "psnr") == "inf");
  CHECK(load_cube(dir / "rec.msrc") == cube);

  const auto env = run("encode --scheme plain --external " + (dir / "in.msrc") + " " + (dir / "rec2.msrc"));
  CHECK(env.code == 1);
  ::setenv("MSIC_ADAPTER_CONFIG", (dir / "adapter.cfg").c_str(), 1);
  CHECK(run("encode --scheme plain --external " + (dir / "in.msrc") + " " + (dir / "rec2.msrc")).code == 0);
  ::unsetenv("MSIC_ADAPTER_CONFIG");
  CHECK(run("encode --scheme pca --external " + (dir / "in.msrc") + " " + (dir / "rec3.msrc")).code == 2);
}
