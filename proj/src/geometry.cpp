// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include "panosphere/geometry.hpp"

#include <string>

namespace ps {

void PerspectiveCamera::validate() const {
  if (width_px <= 0) throw DomainError("PerspectiveCamera: width_px must be positive");
  if (height_px <= 0) throw DomainError("PerspectiveCamera: height_px must be positive");
  if (!(xfov_rad > 0.0 && xfov_rad < kPi))
    throw DomainError("PerspectiveCamera: xfov_rad must lie in (0, pi), got " +
                      std::to_string(xfov_rad));
  if (!(yfov_rad > 0.0 && yfov_rad < kPi))
    throw DomainError("PerspectiveCamera: yfov_rad must lie in (0, pi), got " +
                      std::to_string(yfov_rad));
}

Eigen::Vector2d focal_lengths(const PerspectiveCamera& cam) {
  cam.validate();
  const double fx = cam.width_px / (2.0 * std::tan(cam.xfov_rad / 2.0));
  const double fy = cam.height_px / (2.0 * std::tan(cam.yfov_rad / 2.0));
  return {fx, fy};
}

Eigen::Vector3d pixel_ray(const PerspectiveCamera& cam, double x, double y) {
  const Eigen::Vector2d f = focal_lengths(cam);
  Eigen::Vector3d d((x - (cam.width_px - 1) / 2.0) / f.x(),
                    (y - (cam.height_px - 1) / 2.0) / f.y(), 1.0);
  return d.normalized();
}

SphericalAngle ray_to_angles(const Eigen::Vector3d& dir,
                             const PerspectiveCamera& cam) {
  if (std::abs(dir.norm() - 1.0) > 1e-9)
    throw DomainError("ray_to_angles: direction must be a unit vector");
  const double phi = std::atan2(dir.x(), dir.z()) + cam.center_azimuth_rad;
  const double theta = std::acos(std::clamp(dir.y(), -1.0, 1.0)) +
                       cam.center_polar_rad;
  return {wrap_azimuth(phi), clamp_polar(theta)};
}

Eigen::Vector3d angles_to_direction(const SphericalAngle& a) {
  const double st = std::sin(a.polar_rad);
  return {st * std::sin(a.azimuth_rad), std::cos(a.polar_rad),
          st * std::cos(a.azimuth_rad)};
}

Eigen::Vector2d angles_to_erp_pixel(const SphericalAngle& a, const ErpGrid& g) {
  g.validate();
  return {a.azimuth_rad / kTwoPi * g.width_px, a.polar_rad / kPi * g.height_px};
}

SphericalAngle erp_pixel_to_angles(double u, double v, const ErpGrid& g) {
  g.validate();
  return {kTwoPi * u / g.width_px, kPi * v / g.height_px};
}

}  // namespace ps
