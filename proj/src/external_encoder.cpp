#include "msic/external_encoder.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <regex>
#include <sstream>
#include <thread>

#include "msic/byte_io.hpp"
#include "msic/errors.hpp"

namespace msic {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw FormatError("adapter config: " + key + " expects an integer, got '" + value + "'");
  }
}

class WorkdirLock {
 public:
  explicit WorkdirLock(const fs::path& dir) {
    const auto path = (dir / ".msic-adapter.lock").string();
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw IoError("cannot create lock file " + path);
    ::flock(fd_, LOCK_EX);
  }
  ~WorkdirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  int fd_ = -1;
};

int run_process(const std::vector<std::string>& argv, const fs::path& log_path, int threads, int timeout_seconds) {
  const pid_t pid = ::fork();
  if (pid < 0) throw ExternalToolError("fork failed");
  if (pid == 0) {
    const int fd = ::open(log_path.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    ::setenv("OMP_NUM_THREADS", std::to_string(threads).c_str(), 1);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execv(args[0], args.data());
    ::_exit(127);
  }
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(timeout_seconds);
  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw ExternalToolError("waitpid failed");
    if (std::chrono::steady_clock::now() > deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw ExternalToolError("external encoder timed out");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace

AdapterConfig parse_adapter_config(const std::string& text) {
  AdapterConfig cfg;
  bool enabled_set = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("adapter config: expected key=value, got '" + line + "'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "executable") {
      cfg.executable = value;
    } else if (key == "template") {
      cfg.config_template = value;
    } else if (key == "workdir") {
      cfg.workdir = value;
    } else if (key == "threads") {
      cfg.threads = to_int(key, value);
    } else if (key == "timeout") {
      cfg.timeout_seconds = to_int(key, value);
    } else if (key == "dimension_multiple") {
      cfg.dimension_multiple = to_int(key, value);
    } else if (key == "enabled") {
      cfg.enabled = value == "true" || value == "1" || value == "yes";
      enabled_set = true;
    } else {
      throw FormatError("adapter config: unknown key '" + key + "'");
    }
  }
  if (!enabled_set) cfg.enabled = !cfg.executable.empty();
  if (cfg.threads < 1 || cfg.timeout_seconds < 1 || cfg.dimension_multiple < 1) {
    throw FormatError("adapter config: threads, timeout and dimension_multiple must be positive");
  }
  return cfg;
}

AdapterConfig load_adapter_config(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return parse_adapter_config(std::string(bytes.begin(), bytes.end()));
}

std::int64_t ExternalRunResult::total_bits() const {
  return std::accumulate(bits_per_plane.begin(), bits_per_plane.end(), std::int64_t{0});
}

std::vector<std::int64_t> parse_poc_bits(const std::string& log) {
  static const std::regex poc_line(R"(^\s*POC\s+(\d+)\b.*?(\d+)\s+bits\b)");
  std::map<long, std::int64_t> by_poc;
  std::istringstream in(log);
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_search(line, m, poc_line)) by_poc[std::stol(m[1].str())] = std::stoll(m[2].str());
  }
  std::vector<std::int64_t> out;
  long expected = 0;
  for (const auto& [poc, bits] : by_poc) {
    if (poc != expected++) throw ExternalToolError("encoder output skips POC " + std::to_string(expected - 1));
    out.push_back(bits);
  }
  return out;
}

ExternalRunResult external_encoder_run(const std::vector<Plane>& sequence, const AdapterConfig& config, int qp) {
  if (!config.enabled) throw CapabilityError("external encoder adapter is not configured");
  if (sequence.empty()) throw ParamError("external encoder needs at least one plane");
  const int width = sequence.front().width;
  const int height = sequence.front().height;
  for (const auto& p : sequence) {
    if (p.width != width || p.height != height) throw DimensionError("sequence planes differ in size");
  }
  if (width % config.dimension_multiple != 0 || height % config.dimension_multiple != 0) {
    throw DimensionError("sequence dimensions must be multiples of " + std::to_string(config.dimension_multiple));
  }
  if (::access(config.executable.c_str(), X_OK) != 0) {
    throw CapabilityError("external encoder not executable: " + config.executable);
  }

  const fs::path dir = config.workdir.empty() ? fs::temp_directory_path() / "msic-adapter" : fs::path(config.workdir);
  fs::create_directories(dir);
  WorkdirLock lock(dir);

  const auto input = dir / "input.yuv";
  const auto recon = dir / "recon.yuv";
  const auto stream = dir / "stream.bin";
  const auto log = dir / "encoder.log";
  {
    ByteWriter raw;
    for (const auto& p : sequence) {
      for (auto s : p.samples) raw.u16(s);
    }
    write_file_bytes(input.string(), raw.data());
    std::ofstream sidecar(dir / "input.json");
    sidecar << "{\"width\": " << width << ", \"height\": " << height << ", \"count\": " << sequence.size() << "}\n";
  }
  std::error_code ec;
  fs::remove(recon, ec);

  const std::vector<std::string> argv{config.executable,
                                      "-c",
                                      config.config_template,
                                      "-i",
                                      input.string(),
                                      "-b",
                                      stream.string(),
                                      "-o",
                                      recon.string(),
                                      "-wdt",
                                      std::to_string(width),
                                      "-hgt",
                                      std::to_string(height),
                                      "-f",
                                      std::to_string(sequence.size()),
                                      "-fr",
                                      "1",
                                      "--InputBitDepth=10",
                                      "--OutputBitDepth=10",
                                      "--InternalBitDepth=10",
                                      "--InputChromaFormat=400",
                                      "--QP=" + std::to_string(qp)};
  const int code = run_process(argv, log, config.threads, config.timeout_seconds);
  const auto log_bytes = read_file_bytes(log.string());
  const std::string log_text(log_bytes.begin(), log_bytes.end());
  if (code != 0) throw ExternalToolError("external encoder exited with status " + std::to_string(code));

  ExternalRunResult result;
  result.bits_per_plane = parse_poc_bits(log_text);
  if (result.bits_per_plane.size() != sequence.size()) {
    throw ExternalToolError("encoder reported " + std::to_string(result.bits_per_plane.size()) +
                            " pictures, expected " + std::to_string(sequence.size()));
  }
  const auto recon_bytes = read_file_bytes(recon.string());
  const std::size_t plane_bytes = static_cast<std::size_t>(width) * height * 2;
  if (recon_bytes.size() != plane_bytes * sequence.size()) throw ExternalToolError("reconstruction has wrong size");
  ByteReader in(recon_bytes);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    Plane p(width, height);
    for (auto& s : p.samples) s = static_cast<std::uint16_t>(std::min<std::uint16_t>(in.u16(), kCodecMax));
    result.reconstructions.push_back(std::move(p));
  }
  return result;
}

}  // namespace msic
