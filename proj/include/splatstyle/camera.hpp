#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace splatstyle {

/// Pinhole intrinsics in pixels. Pixel (u, v) has its center at (u + 0.5, v + 0.5).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  /// Throws InvariantError unless fx, fy > 0 and the principal point lies in the image.
  void validate() const;

  /// Intrinsics for an image downscaled by an integer factor (feature-map resolution).
  CameraIntrinsics downscaled(std::uint32_t factor) const;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// World-to-camera rigid transform: x_cam = R * X_world + t, camera looks along +z.
struct CameraPose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  /// Throws InvariantError unless R is orthonormal with det +1 (tolerance 1e-6).
  void validate() const;

  Eigen::Vector3d center() const { return -R.transpose() * t; }

  bool operator==(const CameraPose& o) const { return R == o.R && t == o.t; }
};

struct Camera {
  CameraIntrinsics intrinsics;
  CameraPose pose;

  void validate() const {
    intrinsics.validate();
    pose.validate();
  }

  bool operator==(const Camera&) const = default;
};

/// Pose for a camera at `eye` looking at `target`; image y axis points along -`up`.
CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up = Eigen::Vector3d::UnitY());

}  // namespace splatstyle
