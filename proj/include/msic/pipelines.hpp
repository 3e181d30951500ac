#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msic/block_predictor.hpp"
#include "msic/container.hpp"
#include "msic/cube_io.hpp"
#include "msic/spatial_codec.hpp"
#include "msic/spectral_transform.hpp"

namespace msic {

// Which decoded planes predict the spectral bands in HPCLS-RGB.
enum class RgbRegressors : std::uint8_t { rgb_and_references = 0, rgb_only = 1 };

inline constexpr int kMinGridQp = 5;
inline constexpr int kMaxGridQp = 50;
inline constexpr int kMaxReferencePlanes = 3;
inline constexpr int kMaxComponents = 10;

struct SchemeParams {
  Scheme scheme = Scheme::plain;
  int qp = 25;
  int n_c = 1;
  int n_ref = 1;
  int q_ref = 25;
  int block_size = kDefaultPredictionBlock;
  int weight_step_exp = kDefaultWeightStepExp;
  int basis_step_exp = kDefaultBasisStepExp;
  int qp_rgb = 25;
  bool center = true;
  bool intercept = true;
  RgbRegressors rgb_regressors = RgbRegressors::rgb_and_references;

  friend bool operator==(const SchemeParams&, const SchemeParams&) = default;
};

// Throws ParamError if a field relevant to the scheme is outside its grid
// range: qp, q_ref, qp_rgb in [5, 50]; n_ref in {1, 2, 3}; n_c in
// [1, min(10, bands)].
void validate_params(const SchemeParams& params, int bands);

// Compact "key=value;..." string of the fields the scheme uses.
std::string describe_params(const SchemeParams& params);

// Parameters recovered from the container's tagged parameter list.
SchemeParams container_params(const CodedContainer& container);

struct EncodeResult {
  CodedContainer container;
  SpectralCube reconstruction;
  // Scheme 4 only: the rendered RGB target and the decoded preview.
  std::optional<RgbImage> preview_target;
  std::optional<RgbImage> preview;
  int saturated_weights = 0;

  [[nodiscard]] std::size_t total_bits() const noexcept { return container.total_bits(); }
};

// All schemes code 10-bit cubes; other depths raise RangeError.
EncodeResult encode_plain(const SpectralCube& cube, const SchemeParams& params);
EncodeResult encode_pca(const SpectralCube& cube, const SchemeParams& params);
EncodeResult encode_hpcls(const SpectralCube& cube, const SchemeParams& params);
EncodeResult encode_hpcls_rgb(const SpectralCube& cube, const SchemeParams& params,
                              const CmfMatrix& cmf = cie1931_2deg_31());
EncodeResult encode(const SpectralCube& cube, const SchemeParams& params);

SpectralCube decode_plain(const CodedContainer& container);
SpectralCube decode_pca(const CodedContainer& container);
SpectralCube decode_hpcls(const CodedContainer& container);
SpectralCube decode_hpcls_rgb(const CodedContainer& container);
// Reads PREVIEW-layer sections only.
RgbImage decode_hpcls_rgb_preview(const CodedContainer& container);
SpectralCube decode(const CodedContainer& container);

// Every band intra-coded on its own at one qp; the spectral baseline.
struct IntraBaseline {
  std::size_t bits = 0;
  SpectralCube reconstruction;
};
IntraBaseline encode_bands_intra(const SpectralCube& cube, int qp);

// Stand-alone RGB preview (three channels, GOP-2) for simulcast comparisons.
struct PreviewCoding {
  std::size_t bits = 0;
  RgbImage reconstruction;
};
PreviewCoding encode_rgb_preview(const RgbImage& rgb, int qp);

}  // namespace msic
