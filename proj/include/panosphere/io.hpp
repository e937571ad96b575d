// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "panosphere/raster.hpp"

namespace ps {

// Binary float container, magic "PSR1":
//   bytes 0..3   magic
//   bytes 4..15  u32le width, height, channels
//   byte  16     kind code
//   bytes 17..   float32le payload, row-major, channel-interleaved
void write_raster(const Raster& r, const std::filesystem::path& path);

// Reads PSR1 containers, plus 8-bit PNG (RGB only, values scaled to [0,1]).
Raster read_raster(const std::filesystem::path& path);

// read_raster + kind check; PNG inputs only satisfy kind == Rgb.
Raster read_raster_as(const std::filesystem::path& path, RasterKind expected);

}  // namespace ps
