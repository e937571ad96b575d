// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include "panosphere/pointcloud.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "panosphere/geometry.hpp"

namespace ps {
namespace {

std::uint8_t to_byte(double c) {
  return static_cast<std::uint8_t>(
      std::floor(std::clamp(c, 0.0, 1.0) * 255.0 + 0.5));
}

void write_float_le(std::ostream& os, float f) {
  static_assert(sizeof(float) == 4);
  os.write(reinterpret_cast<const char*>(&f), 4);
}

}  // namespace

PointCloud distance_to_points(const ErpRaster& dist, const ErpRaster* rgb,
                              const ErpRaster* mask, int stride) {
  dist.validate();
  if (stride < 1) throw DomainError("distance_to_points: stride must be >= 1");
  const ErpGrid grid = dist.grid();

  std::vector<Eigen::Vector3d> pts;
  std::vector<Eigen::Vector3d> cols;
  for (int v = 0; v < dist.height; v += stride)
    for (int u = 0; u < dist.width; u += stride) {
      if (mask && mask->at(u, v) == 0.0f) continue;
      const double d = dist.at(u, v);
      if (!(d > 0.0)) continue;
      const Eigen::Vector3d dir =
          angles_to_direction(erp_pixel_to_angles(u, v, grid));
      pts.push_back(d * dir);
      if (rgb)
        cols.emplace_back(rgb->at(u, v, 0), rgb->at(u, v, 1), rgb->at(u, v, 2));
    }

  PointCloud pc;
  pc.points.resize(static_cast<long>(pts.size()), 3);
  for (size_t i = 0; i < pts.size(); ++i) pc.points.row(static_cast<long>(i)) = pts[i];
  if (rgb) {
    pc.colors.emplace(static_cast<long>(cols.size()), 3);
    for (size_t i = 0; i < cols.size(); ++i)
      pc.colors->row(static_cast<long>(i)) = cols[i];
  }
  return pc;
}

PointCloud compose_translated(
    const std::vector<std::pair<PointCloud, Eigen::Vector3d>>& clouds) {
  if (clouds.empty()) throw DomainError("compose_translated: no clouds");
  long total = 0;
  bool all_colors = true, all_normals = true;
  for (const auto& [pc, t] : clouds) {
    total += pc.size();
    all_colors &= pc.colors.has_value();
    all_normals &= pc.normals.has_value();
  }

  PointCloud out;
  out.points.resize(total, 3);
  if (all_colors) out.colors.emplace(total, 3);
  if (all_normals) out.normals.emplace(total, 3);
  long row = 0;
  for (const auto& [pc, t] : clouds) {
    out.points.middleRows(row, pc.size()) =
        pc.points.rowwise() + t.transpose();
    if (all_colors) out.colors->middleRows(row, pc.size()) = *pc.colors;
    if (all_normals) out.normals->middleRows(row, pc.size()) = *pc.normals;
    row += pc.size();
  }
  return out;
}

void export_ply(const PointCloud& pc, const std::filesystem::path& path,
                bool binary) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("export_ply: cannot open " + path.string());

  os << "ply\n"
     << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
     << "element vertex " << pc.size() << "\n"
     << "property float x\nproperty float y\nproperty float z\n";
  if (pc.colors)
    os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (pc.normals)
    os << "property float nx\nproperty float ny\nproperty float nz\n";
  os << "end_header\n";

  for (long i = 0; i < pc.size(); ++i) {
    if (binary) {
      for (int k = 0; k < 3; ++k)
        write_float_le(os, static_cast<float>(pc.points(i, k)));
      if (pc.colors) {
        for (int k = 0; k < 3; ++k) {
          const std::uint8_t b = to_byte((*pc.colors)(i, k));
          os.write(reinterpret_cast<const char*>(&b), 1);
        }
      }
      if (pc.normals)
        for (int k = 0; k < 3; ++k)
          write_float_le(os, static_cast<float>((*pc.normals)(i, k)));
    } else {
      char buf[256];
      int len = std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g",
                              pc.points(i, 0), pc.points(i, 1), pc.points(i, 2));
      os.write(buf, len);
      if (pc.colors) {
        len = std::snprintf(buf, sizeof(buf), " %u %u %u",
                            to_byte((*pc.colors)(i, 0)),
                            to_byte((*pc.colors)(i, 1)),
                            to_byte((*pc.colors)(i, 2)));
        os.write(buf, len);
      }
      if (pc.normals) {
        len = std::snprintf(buf, sizeof(buf), " %.9g %.9g %.9g",
                            (*pc.normals)(i, 0), (*pc.normals)(i, 1),
                            (*pc.normals)(i, 2));
        os.write(buf, len);
      }
      os.put('\n');
    }
  }
  if (!os) throw Error("export_ply: write failed for " + path.string());
}

PointCloud import_ply(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("import_ply: cannot open " + path.string());

  std::string line;
  if (!std::getline(is, line) || line != "ply")
    throw FormatError(path.string() + ": not a PLY file");

  bool binary = false;
  long n = -1;
  std::vector<std::string> props;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      binary = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string what;
      ss >> what >> n;
      if (what != "vertex")
        throw FormatError(path.string() + ": only vertex elements supported");
    } else if (word == "property") {
      std::string type, name;
      ss >> type >> name;
      props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (n < 0) throw FormatError(path.string() + ": missing vertex element");

  const bool has_colors =
      std::find(props.begin(), props.end(), "red") != props.end();
  const bool has_normals =
      std::find(props.begin(), props.end(), "nx") != props.end();

  PointCloud pc;
  pc.points.resize(n, 3);
  if (has_colors) pc.colors.emplace(n, 3);
  if (has_normals) pc.normals.emplace(n, 3);

  for (long i = 0; i < n; ++i) {
    if (binary) {
      float xyz[3];
      is.read(reinterpret_cast<char*>(xyz), 12);
      for (int k = 0; k < 3; ++k) pc.points(i, k) = xyz[k];
      if (has_colors) {
        std::uint8_t rgb[3];
        is.read(reinterpret_cast<char*>(rgb), 3);
        for (int k = 0; k < 3; ++k) (*pc.colors)(i, k) = rgb[k] / 255.0;
      }
      if (has_normals) {
        float nrm[3];
        is.read(reinterpret_cast<char*>(nrm), 12);
        for (int k = 0; k < 3; ++k) (*pc.normals)(i, k) = nrm[k];
      }
    } else {
      if (!std::getline(is, line))
        throw FormatError(path.string() + ": truncated vertex list");
      std::istringstream ss(line);
      ss >> pc.points(i, 0) >> pc.points(i, 1) >> pc.points(i, 2);
      if (has_colors) {
        int r, g, b;
        ss >> r >> g >> b;
        (*pc.colors)(i, 0) = r / 255.0;
        (*pc.colors)(i, 1) = g / 255.0;
        (*pc.colors)(i, 2) = b / 255.0;
      }
      if (has_normals)
        ss >> (*pc.normals)(i, 0) >> (*pc.normals)(i, 1) >> (*pc.normals)(i, 2);
      if (ss.fail())
        throw FormatError(path.string() + ": malformed vertex line " +
                          std::to_string(i));
    }
  }
  if (binary && !is)
    throw FormatError(path.string() + ": truncated binary payload");
  return pc;
}

}  // namespace ps
