#include "splatstyle/style_transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "binary_io.hpp"
#include "splatstyle/error.hpp"

namespace splatstyle {

namespace {

constexpr std::uint32_t kTransformVersion = 1;
constexpr std::size_t kBlockRows = 4096;

using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajorF> block_of(SampleView s, std::size_t first, std::size_t rows) {
  return {s.data.data() + first * s.channels, static_cast<Eigen::Index>(rows),
          static_cast<Eigen::Index>(s.channels)};
}

void check_view(SampleView s) {
  if (s.channels == 0) throw DimensionError("sample set has zero channels");
  if (s.data.size() % s.channels != 0) {
    throw DimensionError("sample buffer is not a whole number of rows");
  }
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen_of(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("covariance eigendecomposition did not converge");
  return solver;
}

// E diag(g(l + eps)) E^T with degenerate modes (l + eps at the noise floor) mapped to 0.
template <typename Fn>
Eigen::MatrixXd spectral_function(const StyleStats& stats, double eps, Fn&& g) {
  if (stats.cov.rows() != stats.cov.cols() || stats.cov.rows() == 0) {
    throw DimensionError("covariance must be square and non-empty");
  }
  if (!(eps >= 0.0)) throw InvariantError("eps must be >= 0");
  const auto solver = eigen_of(stats.cov);
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double floor = 1e-14 * std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd scale(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double v = std::max(lambda[i], 0.0) + eps;
    scale[i] = (v > floor && v > 0.0) ? g(v) : 0.0;
  }
  const Eigen::MatrixXd& e = solver.eigenvectors();
  Eigen::MatrixXd out = e * scale.asDiagonal() * e.transpose();
  return 0.5 * (out + out.transpose());
}

double condition_number(const StyleStats& stats) {
  const auto solver = eigen_of(stats.cov);
  const double hi = solver.eigenvalues().maxCoeff();
  const double lo = solver.eigenvalues().minCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

CompressionBasis basis_from_stats(const StyleStats& stats, std::size_t d) {
  const std::size_t c = stats.dim();
  if (d == 0 || d > c) {
    throw InvariantError("compressed dimension must be in [1, " + std::to_string(c) + "]");
  }
  const auto solver = eigen_of(stats.cov);
  CompressionBasis basis;
  basis.projection.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c));
  basis.eigenvalues = solver.eigenvalues().reverse();
  for (std::size_t k = 0; k < d; ++k) {
    // Eigen sorts ascending; take from the top.
    Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(c - 1 - k));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    basis.projection.row(static_cast<Eigen::Index>(k)) = v.transpose();
  }
  basis.back_projection = basis.projection.transpose();
  return basis;
}

StyleStats project_stats(const StyleStats& stats, const CompressionBasis& basis) {
  StyleStats out;
  out.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.dim()));
  out.cov = basis.projection * stats.cov * basis.back_projection;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  out.n_samples = stats.n_samples;
  return out;
}

void write_matrix(detail::BinaryWriter& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.scalar(m(r, c));
  }
}

Eigen::MatrixXd read_matrix(detail::BinaryReader& in, std::size_t rows, std::size_t cols) {
  const auto values = in.array<double>(rows * cols);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
    }
  }
  return m;
}

Eigen::VectorXd read_vector(detail::BinaryReader& in, std::size_t n) {
  const auto values = in.array<double>(n);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(n));
}

}  // namespace

StyleStats compute_stats(SampleView samples) {
  check_view(samples);
  const std::size_t n = samples.rows();
  if (n < 2) throw InsufficientSamplesError("covariance needs at least 2 samples, got " +
                                            std::to_string(n));
  const auto c = static_cast<Eigen::Index>(samples.channels);

  StyleStats stats;
  stats.n_samples = n;
  stats.mean = Eigen::VectorXd::Zero(c);
  for (std::size_t first = 0; first < n; first += kBlockRows) {
    const std::size_t rows = std::min(kBlockRows, n - first);
    stats.mean += block_of(samples, first, rows).cast<double>().colwise().sum().transpose();
  }
  stats.mean /= static_cast<double>(n);

  stats.cov = Eigen::MatrixXd::Zero(c, c);
  for (std::size_t first = 0; first < n; first += kBlockRows) {
    const std::size_t rows = std::min(kBlockRows, n - first);
    const Eigen::MatrixXd centered =
        block_of(samples, first, rows).cast<double>().rowwise() - stats.mean.transpose();
    stats.cov.noalias() += centered.transpose() * centered;
  }
  stats.cov /= static_cast<double>(n);
  stats.cov = 0.5 * (stats.cov + stats.cov.transpose()).eval();
  return stats;
}

StyleStats compute_stats(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) {
    throw InsufficientSamplesError("covariance needs at least 2 samples, got " +
                                   std::to_string(samples.rows()));
  }
  StyleStats stats;
  stats.n_samples = static_cast<std::size_t>(samples.rows());
  stats.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - stats.mean.transpose();
  stats.cov = (centered.transpose() * centered) / static_cast<double>(samples.rows());
  stats.cov = 0.5 * (stats.cov + stats.cov.transpose()).eval();
  return stats;
}

double default_eps(const StyleStats& stats) {
  return 1e-8 * stats.cov.trace() / static_cast<double>(stats.dim());
}

Eigen::MatrixXd whitening_matrix(const StyleStats& stats, double eps) {
  return spectral_function(stats, eps, [](double v) { return 1.0 / std::sqrt(v); });
}

Eigen::MatrixXd coloring_matrix(const StyleStats& stats, double eps) {
  return spectral_function(stats, eps, [](double v) { return std::sqrt(v); });
}

CompressionBasis fit_compression(SampleView samples, std::size_t d) {
  check_view(samples);
  if (samples.rows() < d) {
    throw InsufficientSamplesError("PCA to " + std::to_string(d) + " dims needs at least " +
                                   std::to_string(d) + " samples, got " +
                                   std::to_string(samples.rows()));
  }
  return basis_from_stats(compute_stats(samples), d);
}

void StyleTransform::validate() const {
  const auto c = mean_c.size();
  if (mean_s.size() != c) throw InvariantError("transform means disagree in length");
  const auto inner = basis ? static_cast<Eigen::Index>(basis->dim()) : c;
  if (T.rows() != inner || T.cols() != inner) throw InvariantError("transform matrix has wrong size");
  if (basis && (basis->projection.cols() != c || basis->back_projection.rows() != c ||
                basis->back_projection.cols() != inner)) {
    throw InvariantError("compression basis has wrong size");
  }
  if (!T.allFinite() || !mean_c.allFinite() || !mean_s.allFinite()) {
    throw InvariantError("transform has non-finite entries");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvariantError("alpha must be in [0, 1]");
}

StyleTransform build_transform(SampleView content, SampleView style, const TransformOptions& opts,
                               TransformDiagnostics* diagnostics) {
  check_view(content);
  check_view(style);
  if (content.channels != style.channels) {
    throw DimensionError("content has " + std::to_string(content.channels) +
                         " channels but style has " + std::to_string(style.channels));
  }
  if (!(opts.alpha >= 0.0 && opts.alpha <= 1.0)) throw InvariantError("alpha must be in [0, 1]");

  const StyleStats content_full = compute_stats(content);
  const StyleStats style_full = compute_stats(style);

  StyleTransform xf;
  xf.mean_c = content_full.mean;
  xf.mean_s = style_full.mean;
  xf.alpha = opts.alpha;

  StyleStats content_stats = content_full;
  StyleStats style_stats = style_full;
  if (opts.compressed_dim) {
    if (content.rows() < *opts.compressed_dim) {
      throw InsufficientSamplesError("content sample smaller than the compressed dimension");
    }
    xf.basis = basis_from_stats(content_full, *opts.compressed_dim);
    content_stats = project_stats(content_full, *xf.basis);
    style_stats = project_stats(style_full, *xf.basis);
  }

  const double eps_c = opts.eps.value_or(default_eps(content_stats));
  const double eps_s = opts.eps.value_or(default_eps(style_stats));
  xf.T = coloring_matrix(style_stats, eps_s) * whitening_matrix(content_stats, eps_c);
  xf.validate();

  if (diagnostics) {
    diagnostics->content_condition = condition_number(content_stats);
    diagnostics->style_condition = condition_number(style_stats);
    diagnostics->content_eps = eps_c;
    diagnostics->style_eps = eps_s;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(xf.T);
    diagnostics->transform_norm = svd.singularValues()(0);
  }
  return xf;
}

StyleTransform build_transform(const FeaturePointCloud& content, const FeatureMap& style,
                               const TransformOptions& opts, TransformDiagnostics* diagnostics) {
  return build_transform(samples_of(content), samples_of(style), opts, diagnostics);
}

std::vector<float> apply_transform(SampleView samples, const StyleTransform& xf) {
  check_view(samples);
  xf.validate();
  if (samples.channels != xf.channels()) {
    throw DimensionError("samples have " + std::to_string(samples.channels) +
                         " channels but the transform expects " + std::to_string(xf.channels()));
  }
  const std::size_t n = samples.rows();
  const std::size_t c = samples.channels;
  std::vector<float> out(samples.data.size());
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  const double alpha = xf.alpha;

#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b) {
    const std::size_t first = static_cast<std::size_t>(b) * kBlock;
    const std::size_t rows = std::min(kBlock, n - first);
    // Columns are samples.
    const Eigen::MatrixXd centered =
        block_of(samples, first, rows).cast<double>().transpose().colwise() - xf.mean_c;
    Eigen::MatrixXd styled;
    if (xf.basis) {
      styled = xf.basis->back_projection * (xf.T * (xf.basis->projection * centered));
    } else {
      styled = xf.T * centered;
    }
    styled.colwise() += xf.mean_s;
    for (std::size_t j = 0; j < rows; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t at = (first + j) * c + ch;
        const double fs = static_cast<float>(styled(static_cast<Eigen::Index>(ch),
                                                    static_cast<Eigen::Index>(j)));
        out[at] = static_cast<float>(alpha * fs + (1.0 - alpha) * samples.data[at]);
      }
    }
  }
  return out;
}

FeaturePointCloud apply_transform(const FeaturePointCloud& cloud, const StyleTransform& xf) {
  FeaturePointCloud out;
  out.channels = cloud.channels;
  out.positions = cloud.positions;
  out.source_view = cloud.source_view;
  out.features = apply_transform(samples_of(cloud), xf);
  return out;
}

void save_transform(const StyleTransform& xf, const std::filesystem::path& path) {
  xf.validate();
  detail::BinaryWriter out(path);
  out.magic("STFM");
  out.scalar(kTransformVersion);
  out.scalar(static_cast<std::uint32_t>(xf.channels()));
  out.scalar(static_cast<std::uint32_t>(xf.T.rows()));
  out.scalar(static_cast<std::uint32_t>(xf.basis ? 1 : 0));
  out.scalar(xf.alpha);
  out.array<double>({xf.mean_c.data(), static_cast<std::size_t>(xf.mean_c.size())});
  out.array<double>({xf.mean_s.data(), static_cast<std::size_t>(xf.mean_s.size())});
  write_matrix(out, xf.T);
  if (xf.basis) {
    write_matrix(out, xf.basis->projection);
    write_matrix(out, xf.basis->back_projection);
    out.array<double>({xf.basis->eigenvalues.data(),
                       static_cast<std::size_t>(xf.basis->eigenvalues.size())});
  }
  out.finish();
}

StyleTransform load_transform(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic("STFM");
  const auto version = in.scalar<std::uint32_t>();
  if (version != kTransformVersion) {
    throw FormatError("unsupported transform version " + std::to_string(version));
  }
  const auto c = in.scalar<std::uint32_t>();
  const auto inner = in.scalar<std::uint32_t>();
  const auto has_basis = in.scalar<std::uint32_t>();
  if (has_basis > 1) throw FormatError("corrupt transform header in " + path.string());
  StyleTransform xf;
  xf.alpha = in.scalar<double>();
  xf.mean_c = read_vector(in, c);
  xf.mean_s = read_vector(in, c);
  xf.T = read_matrix(in, inner, inner);
  if (has_basis) {
    CompressionBasis basis;
    basis.projection = read_matrix(in, inner, c);
    basis.back_projection = read_matrix(in, c, inner);
    basis.eigenvalues = read_vector(in, c);
    xf.basis = std::move(basis);
  }
  in.expect_end();
  try {
    xf.validate();
  } catch (const InvariantError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return xf;
}

}  // namespace splatstyle
