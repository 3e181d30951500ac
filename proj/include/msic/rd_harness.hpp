#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "msic/cube_io.hpp"
#include "msic/pipelines.hpp"

namespace msic {

inline constexpr double kHullSlopeTolerance = 1e-12;

struct RdPoint {
  double bits = 0.0;
  double psnr = 0.0;
  SchemeParams params;
  std::string image;
  std::optional<double> preview_psnr;
  bool on_hull = false;
};

struct RdCurve {
  std::string label;
  std::vector<RdPoint> points;  // bits ascending
};

// Cartesian product of per-field value lists; empty lists keep the base value.
struct ParameterGrid {
  SchemeParams base;
  std::vector<int> qp;
  std::vector<int> n_c;
  std::vector<int> n_ref;
  std::vector<int> q_ref;
  std::vector<int> block_size;
  std::vector<int> qp_rgb;

  [[nodiscard]] std::vector<SchemeParams> configurations() const;
};

struct SweepImage {
  std::string id;
  SpectralCube cube;
};

struct SweepFailure {
  std::string image;
  SchemeParams params;
  std::string message;
};

struct SweepResult {
  // Sorted by (image, parameters); includes points with infinite PSNR.
  std::vector<RdPoint> points;
  std::vector<SweepFailure> failures;
  std::size_t infinite_psnr = 0;
};

// Encodes, serializes, parses and decodes every (image, configuration) pair on
// `jobs` worker threads. Failing configurations are recorded, not fatal.
SweepResult sweep(const std::vector<SweepImage>& images, const ParameterGrid& grid, int jobs = 1);

// Strict weak order on parameters, used for deterministic output.
bool params_less(const SchemeParams& a, const SchemeParams& b);

// Mean bits and PSNR per configuration across images. Throws
// IncompleteGridError if any (image, configuration) pair is missing.
// Configurations with an infinite-PSNR point on any image are dropped and
// counted in `excluded`.
std::vector<RdPoint> average_over_images(const std::vector<RdPoint>& points, std::size_t* excluded = nullptr);

// Alternative ordering: hull each image first, keep configurations on every
// image's hull, then average those.
std::vector<RdPoint> hull_then_average(const std::vector<RdPoint>& points, std::size_t* excluded = nullptr);

// Upper-left concave envelope in the (bits, PSNR) plane. Collinear points
// (slopes equal within kHullSlopeTolerance) are kept.
RdCurve convex_hull(const std::vector<RdPoint>& points, std::string label = {});

// Adds the rate of the cheapest preview point reaching `preview_quality` dB to
// every MSI point. Throws RangeError if no preview point reaches it.
RdCurve simulcast_compose(const RdCurve& preview, const RdCurve& msi, double preview_quality);

RdCurve best_of(const std::vector<RdCurve>& curves, std::string label = "best");

// Bits at `psnr` by linear interpolation along a hull; nullopt outside it.
std::optional<double> bits_at_psnr(const RdCurve& hull, double psnr);

// Header: label,image,bits,psnr,on_hull,scheme,qp,n_c,n_ref,q_ref,block_size,qp_rgb,preview_psnr
void emit_csv(const std::vector<RdCurve>& curves, std::ostream& out);
void emit_csv(const std::vector<RdCurve>& curves, const std::string& path);

// Text manifest, one "key = value" per line, '#' comments. Keys: label,
// scheme, images (comma list, relative to the manifest), and value lists for
// qp, n_c, n_ref, q_ref, block_size, qp_rgb. Lists take integers and
// first:last:step ranges.
struct SweepManifest {
  std::string label;
  ParameterGrid grid;
  std::vector<std::string> images;  // resolved paths
};

SweepManifest parse_manifest(const std::string& text, const std::string& base_dir = ".");
// Also checks that every image file exists (IoError otherwise).
SweepManifest load_manifest(const std::string& path);

std::vector<int> parse_int_list(const std::string& text);
Scheme parse_scheme(const std::string& name);

}  // namespace msic
