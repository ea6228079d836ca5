#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "splatstyle/feature_map.hpp"
#include "splatstyle/point_cloud.hpp"

namespace splatstyle {

/// First and second moments of a feature sample (population covariance).
struct StyleStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::size_t n_samples = 0;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

/// Row-major N x C view of a feature sample.
struct SampleView {
  std::span<const float> data;
  std::size_t channels = 0;

  std::size_t rows() const { return channels == 0 ? 0 : data.size() / channels; }
};

inline SampleView samples_of(const FeaturePointCloud& cloud) {
  return {cloud.features, cloud.channels};
}
inline SampleView samples_of(const FeatureMap& map) { return {map.data, map.channels}; }

/// Mean and (1/N) covariance. Throws InsufficientSamplesError for N < 2.
StyleStats compute_stats(SampleView samples);
StyleStats compute_stats(const Eigen::MatrixXd& samples);  // one sample per row

/// Default eigenvalue floor: 1e-8 * trace(cov) / dim.
double default_eps(const StyleStats& stats);

/// Whitening matrix E diag((l + eps)^-1/2) E^T of the covariance. Modes whose
/// regularized eigenvalue is not positive are projected out (scale 0).
Eigen::MatrixXd whitening_matrix(const StyleStats& stats, double eps);

/// Coloring matrix E diag((l + eps)^1/2) E^T, the symmetric square root of cov + eps I.
Eigen::MatrixXd coloring_matrix(const StyleStats& stats, double eps);

/// Orthonormal PCA basis of a sample: rows of `projection` are the top-d
/// principal directions, `back_projection` its transpose.
struct CompressionBasis {
  Eigen::MatrixXd projection;       // d x C
  Eigen::MatrixXd back_projection;  // C x d
  Eigen::VectorXd eigenvalues;      // all C sample-covariance eigenvalues, descending

  std::size_t dim() const { return static_cast<std::size_t>(projection.rows()); }
};

/// Throws InsufficientSamplesError when N < d and InvariantError when d is 0 or exceeds C.
CompressionBasis fit_compression(SampleView samples, std::size_t d);

struct TransformOptions {
  std::optional<double> eps;      // per-statistic default_eps when unset
  std::optional<std::size_t> compressed_dim;
  double alpha = 1.0;             // blend with the unstylized feature; 1 = full style
};

/// Linear stylization f -> uncompress(T compress(f - mean_c)) + mean_s, with
/// T = coloring(style) * whitening(content). Without compression uncompress and
/// compress are the identity.
struct StyleTransform {
  Eigen::MatrixXd T;
  Eigen::VectorXd mean_c;
  Eigen::VectorXd mean_s;
  std::optional<CompressionBasis> basis;
  double alpha = 1.0;

  std::size_t channels() const { return static_cast<std::size_t>(mean_c.size()); }

  /// Throws InvariantError on non-finite entries, inconsistent sizes or alpha outside [0, 1].
  void validate() const;
};

/// Condition numbers and regularizers reported alongside a built transform.
struct TransformDiagnostics {
  double content_condition = 0.0;
  double style_condition = 0.0;
  double content_eps = 0.0;
  double style_eps = 0.0;
  double transform_norm = 0.0;  // spectral norm of T
};

/// Content statistics come from `content` (normally the aggregated cloud); style
/// statistics from every pixel of `style`. In compressed mode both sides are
/// expressed in the PCA basis fitted on the content sample.
StyleTransform build_transform(SampleView content, SampleView style, const TransformOptions& opts,
                               TransformDiagnostics* diagnostics = nullptr);

StyleTransform build_transform(const FeaturePointCloud& content, const FeatureMap& style,
                               const TransformOptions& opts,
                               TransformDiagnostics* diagnostics = nullptr);

/// Stylizes every feature; positions and view indices are copied unchanged.
/// Per point: out = alpha * float(f_styl) + (1 - alpha) * f.
FeaturePointCloud apply_transform(const FeaturePointCloud& cloud, const StyleTransform& xf);

/// Same per-sample mapping applied to a raw row-major sample buffer (e.g. an image).
std::vector<float> apply_transform(SampleView samples, const StyleTransform& xf);

// STFM: "STFM" | version u32 | C u32 | C' u32 | has_basis u32 | alpha f64 |
// mean_c f64 x C | mean_s f64 x C | T f64 x C'^2 | [projection f64 x C'C |
// back_projection f64 x CC' | eigenvalues f64 x C], matrices row-major.
void save_transform(const StyleTransform& xf, const std::filesystem::path& path);
StyleTransform load_transform(const std::filesystem::path& path);

}  // namespace splatstyle
