#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "msic/errors.hpp"
#include "msic/external_encoder.hpp"
#include "msic/pipelines.hpp"
#include "msic/rd_harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

constexpr const char* kAdapterEnv = "MSIC_ADAPTER_CONFIG";

// Raised for bad flag values found after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_db(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10f", v);
  return buf;
}

struct EncodeArgs {
  std::string input;
  std::string output;
  std::string scheme = "plain";
  msic::SchemeParams params;
  bool rgb_only = false;
  bool external = false;
  std::string adapter;
};

struct DecodeArgs {
  std::string input;
  std::string output;
  std::string preview;
  std::string reference;
};

struct CropArgs {
  std::string input;
  std::string prefix;
};

struct SweepArgs {
  std::string manifest;
  std::string output;
  int jobs = 1;
  bool hull_then_average = false;
  bool per_image = false;
};

struct MetricsArgs {
  std::string original;
  std::string reconstruction;
  bool nominal_peak = false;
};

msic::SchemeParams resolve_params(const EncodeArgs& a) {
  auto p = a.params;
  try {
    p.scheme = msic::parse_scheme(a.scheme);
  } catch (const msic::UnsupportedSchemeError& e) {
    throw UsageError(e.what());
  }
  p.rgb_regressors = a.rgb_only ? msic::RgbRegressors::rgb_only : msic::RgbRegressors::rgb_and_references;
  // band-independent ranges, checked before any file is read
  msic::validate_params(p, msic::kMaxComponents);
  if (p.block_size < 1 || p.block_size > 65535) throw msic::ParamError("block size must be in [1, 65535]");
  return p;
}

std::string adapter_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  const char* env = std::getenv(kAdapterEnv);
  if (env != nullptr && *env != '\0') return env;
  throw msic::CapabilityError(std::string("external encoding needs --adapter or ") + kAdapterEnv);
}

int run_external(const EncodeArgs& a, const msic::SchemeParams& p) {
  if (p.scheme != msic::Scheme::plain) throw UsageError("--external supports the plain scheme only");
  const auto config = msic::load_adapter_config(adapter_path(a.adapter));
  const auto cube = msic::load_cube(a.input);
  if (cube.bit_depth() != 10) throw msic::RangeError("external encoding expects a 10-bit cube");
  std::vector<msic::Plane> planes;
  for (int b = 0; b < cube.bands(); ++b) {
    const auto s = cube.plane(b);
    planes.emplace_back(cube.width(), cube.height(), std::vector<std::uint16_t>(s.begin(), s.end()));
  }
  const auto run = msic::external_encoder_run(planes, config, p.qp);
  msic::SpectralCube recon(cube.width(), cube.height(), cube.bands(), cube.bit_depth());
  for (int b = 0; b < cube.bands(); ++b) {
    const auto& src = run.reconstructions[static_cast<std::size_t>(b)].samples;
    std::copy(src.begin(), src.end(), recon.plane(b).begin());
  }
  msic::store_cube(recon, a.output);
  std::cout << "total_bits " << run.total_bits() << "\npsnr " << format_db(msic::psnr(cube, recon)) << '\n';
  return kExitOk;
}

int cmd_encode(const EncodeArgs& a) {
  const auto p = resolve_params(a);
  if (a.external) return run_external(a, p);
  const auto cube = msic::load_cube(a.input);
  const auto enc = msic::encode(cube, p);
  const auto bytes = msic::write_container(enc.container, a.output);
  std::cout << "total_bits " << 8 * bytes << "\npsnr " << format_db(msic::psnr(cube, enc.reconstruction)) << '\n';
  if (enc.preview) {
    std::cout << "preview_psnr " << format_db(msic::psnr(*enc.preview_target, *enc.preview)) << '\n';
  }
  if (enc.saturated_weights > 0) std::cerr << "warning: " << enc.saturated_weights << " weights saturated\n";
  return kExitOk;
}

int cmd_decode(const DecodeArgs& a) {
  if (a.output.empty() && a.preview.empty()) throw UsageError("decode needs an output path or --preview");
  const auto container = msic::read_container(a.input);
  if (!a.preview.empty()) {
    const auto preview = msic::decode_hpcls_rgb_preview(container);
    const auto ppm = msic::encode_ppm16(preview);
    std::ofstream out(a.preview, std::ios::binary);
    out.write(reinterpret_cast<const char*>(ppm.data()), static_cast<std::streamsize>(ppm.size()));
    if (!out) throw msic::IoError("failed writing " + a.preview);
  }
  if (!a.output.empty()) {
    const auto cube = msic::decode(container);
    msic::store_cube(cube, a.output);
    if (!a.reference.empty()) std::cout << "psnr " << format_db(msic::psnr(msic::load_cube(a.reference), cube)) << '\n';
  }
  return kExitOk;
}

int cmd_crop(const CropArgs& a) {
  const auto crops = msic::crop_quadrants(msic::load_cube(a.input));
  for (std::size_t i = 0; i < crops.size(); ++i) {
    const auto path = a.prefix + "_" + std::to_string(i) + ".msrc";
    msic::store_cube(crops[i], path);
    std::cout << path << '\n';
  }
  return kExitOk;
}

void mark_hull(std::vector<msic::RdPoint>& points) {
  const auto hull = msic::convex_hull(points);
  for (auto& p : points) {
    p.on_hull = false;
    for (const auto& h : hull.points) {
      if (h.image == p.image && h.params == p.params) p.on_hull = true;
    }
  }
  std::stable_sort(points.begin(), points.end(), [](const msic::RdPoint& x, const msic::RdPoint& y) {
    if (x.bits != y.bits) return x.bits < y.bits;
    return msic::params_less(x.params, y.params);
  });
}

int cmd_sweep(const SweepArgs& a) {
  if (a.jobs < 1) throw UsageError("--jobs must be at least 1");
  const auto manifest = msic::load_manifest(a.manifest);
  std::vector<msic::SweepImage> images;
  for (const auto& path : manifest.images) images.push_back({path, msic::load_cube(path)});
  const auto result = msic::sweep(images, manifest.grid, a.jobs);
  for (const auto& f : result.failures) {
    std::cerr << "failed: " << f.image << " " << msic::describe_params(f.params) << ": " << f.message << '\n';
  }
  if (!result.failures.empty()) throw msic::IncompleteGridError("grid incomplete; no CSV written");

  std::size_t excluded = 0;
  auto averaged = a.hull_then_average ? msic::hull_then_average(result.points, &excluded)
                                      : msic::average_over_images(result.points, &excluded);
  if (excluded > 0) std::cerr << "excluded " << excluded << " configuration(s) with infinite PSNR\n";
  mark_hull(averaged);
  std::vector<msic::RdCurve> curves{{manifest.label, averaged}};
  if (a.per_image) {
    std::map<std::string, std::vector<msic::RdPoint>> per_image;
    for (const auto& p : result.points) per_image[p.image].push_back(p);
    for (auto& [image, pts] : per_image) {
      mark_hull(pts);
      curves.push_back({manifest.label + ":image", pts});
    }
  }
  msic::emit_csv(curves, a.output);
  std::cout << "points " << result.points.size() << "\nrows " << averaged.size() << '\n';
  return kExitOk;
}

int cmd_metrics(const MetricsArgs& a) {
  const auto original = msic::load_cube(a.original);
  const auto recon = msic::load_cube(a.reconstruction);
  const auto mode = a.nominal_peak ? msic::PeakMode::nominal : msic::PeakMode::image_max;
  const double m = msic::mse(original, recon);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10f", m);
  std::cout << "mse " << buf << "\npsnr " << format_db(msic::psnr(original, recon, mode)) << '\n';
  return kExitOk;
}

void add_scheme_flags(CLI::App* cmd, EncodeArgs& a) {
  cmd->add_option("--scheme", a.scheme, "plain | pca | hpcls | hpcls-rgb")->required();
  cmd->add_option("--qp", a.params.qp, "quantization parameter for coded planes");
  cmd->add_option("--n-c", a.params.n_c, "principal components kept");
  cmd->add_option("--n-ref", a.params.n_ref, "reference planes");
  cmd->add_option("--q-ref", a.params.q_ref, "qp of the reference planes");
  cmd->add_option("--block-size", a.params.block_size, "prediction block edge");
  cmd->add_option("--qp-rgb", a.params.qp_rgb, "qp of the RGB error planes");
  cmd->add_flag("--rgb-only", a.rgb_only, "predict bands from decoded RGB only");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multispectral image coding toolkit"};
  app.require_subcommand(1, 1);

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "encode an MSRC cube into a container");
  encode->add_option("input", enc.input, "MSRC cube")->required();
  encode->add_option("output", enc.output, "container (or MSRC reconstruction with --external)")->required();
  add_scheme_flags(encode, enc);
  encode->add_flag("--external", enc.external, "code the bands with the external encoder adapter");
  encode->add_option("--adapter", enc.adapter, std::string("adapter config; defaults to $") + kAdapterEnv);

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "decode a container");
  decode->add_option("input", dec.input, "container")->required();
  decode->add_option("output", dec.output, "MSRC output");
  decode->add_option("--preview", dec.preview, "write the preview layer as a 16-bit PPM");
  decode->add_option("--reference", dec.reference, "original cube; prints PSNR of the decoded cube");

  CropArgs crp;
  auto* crop = app.add_subcommand("crop", "write the four corner crops");
  crop->add_option("input", crp.input, "MSRC cube")->required();
  crop->add_option("prefix", crp.prefix, "output prefix; files are <prefix>_0..3.msrc")->required();

  SweepArgs swp;
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep from a manifest and write CSV");
  sweep->add_option("manifest", swp.manifest, "sweep manifest")->required();
  sweep->add_option("output", swp.output, "CSV output")->required();
  sweep->add_option("--jobs", swp.jobs, "worker threads");
  sweep->add_flag("--hull-then-average", swp.hull_then_average, "hull each image before averaging");
  sweep->add_flag("--per-image", swp.per_image, "also emit per-image rows");

  MetricsArgs met;
  auto* metrics = app.add_subcommand("metrics", "MSE and PSNR between two cubes");
  metrics->add_option("original", met.original, "original MSRC")->required();
  metrics->add_option("reconstruction", met.reconstruction, "reconstructed MSRC")->required();
  metrics->add_flag("--nominal-peak", met.nominal_peak, "use 2^depth - 1 as the peak");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (encode->parsed()) return cmd_encode(enc);
    if (decode->parsed()) return cmd_decode(dec);
    if (crop->parsed()) return cmd_crop(crp);
    if (sweep->parsed()) return cmd_sweep(swp);
    return cmd_metrics(met);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const msic::ParamError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
