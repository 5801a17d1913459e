#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "snnf/errors.hpp"

namespace snnf {

using Pixel = Eigen::Vector2d;
using Point3 = Eigen::Vector3d;
using Matrix26 = Eigen::Matrix<double, 2, 6>;
using Matrix16 = Eigen::Matrix<double, 1, 6>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

/// Tangent vector of SE(3): (tx, ty, tz, wx, wy, wz). Increments act on the
/// left, i.e. an update is exp(xi) * pose.
using Se3Tangent = Vector6;

/// Minimum depth (meters) accepted by the projective division.
inline constexpr double kDefaultMinDepth = 1e-6;

/// Pinhole intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  [[nodiscard]] bool valid() const noexcept {
    return std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) &&
           std::isfinite(cy) && fx > 0.0 && fy > 0.0;
  }

  /// Intrinsics of a factor-2^level downsampled image, keeping pixel centers
  /// consistent: u_L = (u + 0.5) / 2^L - 0.5.
  [[nodiscard]] CameraIntrinsics atLevel(int level) const {
    const double s = std::ldexp(1.0, -level);
    return {fx * s, fy * s, (cx + 0.5) * s - 0.5, (cy + 0.5) * s - 0.5};
  }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Strictly positive inverse depth d = 1/z.
class InverseDepth {
 public:
  explicit InverseDepth(double d) : value_(d) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error(ErrorKind::kDomain, "inverse depth must be positive and finite");
    }
  }
  [[nodiscard]] double value() const noexcept { return value_; }
  [[nodiscard]] double depth() const noexcept { return 1.0 / value_; }

  friend bool operator==(const InverseDepth&, const InverseDepth&) = default;

 private:
  double value_;
};

[[nodiscard]] inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

/// Rigid motion x -> R x + t.
class Pose {
 public:
  Pose() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}

  [[nodiscard]] static Pose identity() { return {}; }
  [[nodiscard]] static Pose fromTranslation(const Eigen::Vector3d& t) {
    return {Eigen::Matrix3d::Identity(), t};
  }

  [[nodiscard]] const Eigen::Matrix3d& rotation() const noexcept { return rotation_; }
  [[nodiscard]] const Eigen::Vector3d& translation() const noexcept { return translation_; }

  [[nodiscard]] Pose inverse() const {
    const Eigen::Matrix3d rt = rotation_.transpose();
    return {rt, -rt * translation_};
  }

  [[nodiscard]] Point3 operator*(const Point3& p) const { return rotation_ * p + translation_; }

  [[nodiscard]] Pose operator*(const Pose& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }

  /// Max-abs deviation of R^T R from identity.
  [[nodiscard]] double orthonormalityError() const {
    return (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity())
        .cwiseAbs()
        .maxCoeff();
  }

  [[nodiscard]] bool valid(double tol = 1e-9) const {
    return rotation_.allFinite() && translation_.allFinite() &&
           orthonormalityError() <= tol && std::abs(rotation_.determinant() - 1.0) <= tol;
  }

  /// Nearest rotation in the Frobenius sense (SVD projection).
  [[nodiscard]] Pose orthonormalized() const {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation_, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
      Eigen::Matrix3d u = svd.matrixU();
      u.col(2) *= -1.0;
      r = u * svd.matrixV().transpose();
    }
    return {r, translation_};
  }

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.rotation_ == b.rotation_ && a.translation_ == b.translation_;
  }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// Rotation angle of a pose in radians, in [0, pi].
[[nodiscard]] inline double rotationAngle(const Eigen::Matrix3d& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const Eigen::Vector3d s(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * s.norm(), c);
}

// -----------------------------------------------------------------------------
// Exponential / logarithm
// -----------------------------------------------------------------------------

[[nodiscard]] inline Eigen::Matrix3d so3Exp(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a;
  double b;
  if (theta < 1e-4) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Eigen::Matrix3d k = skew(w);
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

/// Rotation vector of R. Near theta = pi the antisymmetric part carries no
/// axis information, so the axis is read from the symmetric part instead and
/// its sign chosen to agree with the (tiny) antisymmetric part.
[[nodiscard]] inline Eigen::Vector3d so3Log(const Eigen::Matrix3d& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const Eigen::Vector3d s =
      0.5 * Eigen::Vector3d(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_theta = s.norm();
  const double theta = std::atan2(sin_theta, c);
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    return s * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  if (theta < std::numbers::pi - 1e-3) {
    return s * (theta / sin_theta);
  }
  const Eigen::Matrix3d sym = 0.5 * (r + r.transpose()) - c * Eigen::Matrix3d::Identity();
  const double denom = 1.0 - c;
  Eigen::Index k = 0;
  sym.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = sym.col(k) / std::sqrt(std::max(sym(k, k) * denom, 1e-300));
  axis.normalize();
  if (axis.dot(s) < 0.0) axis = -axis;
  return theta * axis;
}

[[nodiscard]] inline Pose se3Exp(const Se3Tangent& xi) {
  const Eigen::Vector3d v = xi.head<3>();
  const Eigen::Vector3d w = xi.tail<3>();
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  double b;
  double c;
  if (theta < 1e-2) {
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    c = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
  } else {
    b = (1.0 - std::cos(theta)) / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  const Eigen::Matrix3d k = skew(w);
  const Eigen::Matrix3d vmat = Eigen::Matrix3d::Identity() + b * k + c * k * k;
  return {so3Exp(w), vmat * v};
}

/// Inverse of se3Exp for rotation angles below pi.
[[nodiscard]] inline Se3Tangent se3Log(const Pose& pose) {
  const Eigen::Vector3d w = so3Log(pose.rotation());
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  double d;
  if (theta < 1e-2) {
    d = 1.0 / 12.0 + theta2 / 720.0 + theta2 * theta2 / 30240.0;
  } else {
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / theta2;
    d = (1.0 - a / (2.0 * b)) / theta2;
  }
  const Eigen::Matrix3d k = skew(w);
  const Eigen::Matrix3d vinv = Eigen::Matrix3d::Identity() - 0.5 * k + d * k * k;
  Se3Tangent xi;
  xi.head<3>() = vinv * pose.translation();
  xi.tail<3>() = w;
  return xi;
}

// -----------------------------------------------------------------------------
// Camera model
// -----------------------------------------------------------------------------

[[nodiscard]] inline Point3 backProject(const Pixel& p, InverseDepth d,
                                        const CameraIntrinsics& k) {
  const double z = 1.0 / d.value();
  return {(p.x() - k.cx) / k.fx * z, (p.y() - k.cy) / k.fy * z, z};
}

[[nodiscard]] inline Pixel project(const Point3& pt, const CameraIntrinsics& k,
                                   double z_min = kDefaultMinDepth) {
  if (!(pt.z() > z_min)) {
    throw Error(ErrorKind::kBehindCamera, "point at or behind the image plane");
  }
  return {k.fx * pt.x() / pt.z() + k.cx, k.fy * pt.y() / pt.z() + k.cy};
}

/// Pixel of reference-frame pixel p (inverse depth d) seen from a camera at
/// relative pose `pose` (reference -> current).
[[nodiscard]] inline Pixel warp(const Pixel& p, InverseDepth d, const Pose& pose,
                                const CameraIntrinsics& k,
                                double z_min = kDefaultMinDepth) {
  return project(pose * backProject(p, d, k), k, z_min);
}

/// d(pixel)/d(camera-frame point).
[[nodiscard]] inline Eigen::Matrix<double, 2, 3> projectionJacobian(
    const Point3& pc, const CameraIntrinsics& k) {
  const double iz = 1.0 / pc.z();
  const double iz2 = iz * iz;
  Eigen::Matrix<double, 2, 3> j;
  j << k.fx * iz, 0.0, -k.fx * pc.x() * iz2,  //
      0.0, k.fy * iz, -k.fy * pc.y() * iz2;
  return j;
}

/// d(warped pixel)/d(xi) for the left update exp(xi) * pose.
[[nodiscard]] inline Matrix26 warpJacobianAt(const Point3& pc, const CameraIntrinsics& k) {
  Eigen::Matrix<double, 3, 6> dp;
  dp.leftCols<3>().setIdentity();
  dp.rightCols<3>() = -skew(pc);
  return projectionJacobian(pc, k) * dp;
}

[[nodiscard]] inline Matrix26 warpJacobian(const Pixel& p, InverseDepth d, const Pose& pose,
                                           const CameraIntrinsics& k,
                                           double z_min = kDefaultMinDepth) {
  const Point3 pc = pose * backProject(p, d, k);
  if (!(pc.z() > z_min)) {
    throw Error(ErrorKind::kBehindCamera, "warped point at or behind the image plane");
  }
  return warpJacobianAt(pc, k);
}

}  // namespace snnf
