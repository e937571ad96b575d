// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "panosphere/errors.hpp"
#include "panosphere/geometry.hpp"

namespace ps {

enum class RasterKind : std::uint8_t {
  Rgb = 0,
  Distance = 1,
  Mask = 2,
  Normal = 3,
  Embedding = 4,
};

inline int default_channels(RasterKind k) {
  switch (k) {
    case RasterKind::Rgb: return 3;
    case RasterKind::Normal: return 3;
    default: return 1;
  }
}

// Row-major, channel-interleaved float raster. Used both for ERP panoramas
// and for perspective frames; the camera travels alongside when needed.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  RasterKind kind = RasterKind::Rgb;
  Eigen::ArrayXf data;  // width * height * channels

  Raster() = default;
  Raster(int w, int h, int c, RasterKind k)
      : width(w), height(h), channels(c), kind(k) {
    data = Eigen::ArrayXf::Zero(static_cast<long>(w) * h * c);
  }

  long size() const { return static_cast<long>(width) * height * channels; }

  float& at(int x, int y, int c = 0) {
    return data[(static_cast<long>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c = 0) const {
    return data[(static_cast<long>(y) * width + x) * channels + c];
  }

  ErpGrid grid() const { return {width, height}; }

  void validate() const {
    if (width <= 0 || height <= 0 || channels <= 0)
      throw DomainError("Raster: dimensions must be positive");
    if (data.size() != size())
      throw DomainError("Raster: payload length does not match dimensions");
  }
};

using ErpRaster = Raster;

struct PerspectiveRaster {
  PerspectiveCamera cam;
  Raster img;

  void validate() const {
    cam.validate();
    img.validate();
    if (img.width != cam.width_px || img.height != cam.height_px)
      throw DomainError("PerspectiveRaster: raster dims disagree with camera");
  }
};

inline ErpRaster make_erp(const ErpGrid& g, RasterKind k) {
  g.validate();
  return ErpRaster(g.width_px, g.height_px, default_channels(k), k);
}

}  // namespace ps
