#include "splatstyle/camera.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "splatstyle/error.hpp"

namespace splatstyle {

void CameraIntrinsics::validate() const {
  if (!(std::isfinite(fx) && fx > 0.0 && std::isfinite(fy) && fy > 0.0)) {
    throw InvariantError("focal lengths must be finite and positive");
  }
  if (width == 0 || height == 0) throw InvariantError("image size must be non-zero");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    std::ostringstream msg;
    msg << "principal point (" << cx << ", " << cy << ") outside " << width << "x" << height
        << " image";
    throw InvariantError(msg.str());
  }
}

CameraIntrinsics CameraIntrinsics::downscaled(std::uint32_t factor) const {
  if (factor == 0) throw InvariantError("downscale factor must be >= 1");
  const double f = factor;
  return {fx / f, fy / f, cx / f, cy / f, width / factor, height / factor};
}

void CameraPose::validate() const {
  constexpr double kTol = 1e-6;
  if (!R.allFinite() || !t.allFinite()) throw InvariantError("pose has non-finite entries");
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kTol) {
    throw InvariantError("rotation is not orthonormal (max |R^T R - I| = " +
                         std::to_string(ortho) + ")");
  }
  const double det = R.determinant();
  if (std::abs(det - 1.0) > kTol) {
    throw InvariantError("rotation determinant is " + std::to_string(det) + ", expected +1");
  }
}

CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d right = (-up).cross(forward).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  CameraPose pose;
  pose.R.row(0) = right.transpose();
  pose.R.row(1) = down.transpose();
  pose.R.row(2) = forward.transpose();
  pose.t = -pose.R * eye;
  return pose;
}

}  // namespace splatstyle
