// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "panosphere/errors.hpp"

namespace ps {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Pinhole camera whose optical center sits on the unit sphere at
// (center_azimuth_rad, center_polar_rad). FoVs are full angular extents.
struct PerspectiveCamera {
  int width_px = 0;
  int height_px = 0;
  double xfov_rad = 0.0;
  double yfov_rad = 0.0;
  double center_azimuth_rad = 0.0;  // phi_c
  double center_polar_rad = 0.0;    // theta_c

  // YFoV = XFoV * H / W when the dataset only specifies the horizontal FoV.
  static PerspectiveCamera with_default_yfov(int w, int h, double xfov,
                                             double phi_c = 0.0,
                                             double theta_c = 0.0) {
    return {w, h, xfov, xfov * static_cast<double>(h) / w, phi_c, theta_c};
  }

  void validate() const;
};

// Azimuth in [0, 2pi), colatitude in [0, pi] measured from +y.
struct SphericalAngle {
  double azimuth_rad = 0.0;  // phi
  double polar_rad = 0.0;    // theta
};

// Full-sphere equirectangular grid; u spans azimuth, v spans colatitude.
struct ErpGrid {
  int width_px = 0;
  int height_px = 0;

  void validate() const {
    if (width_px < 2) throw DomainError("ErpGrid: width_px must be >= 2");
    if (height_px < 1) throw DomainError("ErpGrid: height_px must be >= 1");
  }
  long pixel_count() const { return static_cast<long>(width_px) * height_px; }
};

inline double wrap_azimuth(double phi) {
  phi = std::fmod(phi, kTwoPi);
  if (phi < 0.0) phi += kTwoPi;
  // fmod can land exactly on 2pi for tiny negative inputs
  if (phi >= kTwoPi) phi = 0.0;
  return phi;
}

inline double clamp_polar(double theta) {
  return std::clamp(theta, 0.0, kPi);
}

// f = W / (2 tan(FoV/2)) per axis.
Eigen::Vector2d focal_lengths(const PerspectiveCamera& cam);

// Unit ray through pixel (x, y); fractional coordinates allowed.
Eigen::Vector3d pixel_ray(const PerspectiveCamera& cam, double x, double y);

// Absolute spherical angles of a unit ray, offset by the camera center.
SphericalAngle ray_to_angles(const Eigen::Vector3d& dir,
                             const PerspectiveCamera& cam);

// Exact inverse of ray_to_angles at zero offsets.
Eigen::Vector3d angles_to_direction(const SphericalAngle& a);

// Fractional ERP pixel position (u, v) of a spherical angle.
Eigen::Vector2d angles_to_erp_pixel(const SphericalAngle& a, const ErpGrid& g);

// Angles of an ERP pixel; the linear inverse of angles_to_erp_pixel.
SphericalAngle erp_pixel_to_angles(double u, double v, const ErpGrid& g);

}  // namespace ps
