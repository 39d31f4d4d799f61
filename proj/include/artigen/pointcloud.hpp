#pragma once

#include <optional>
#include <string>
#include <vector>

#include "artigen/vec.hpp"

namespace artigen {

// Depth-camera pose sampled around the object: look-at is always the object
// origin, the image is square with a fixed vertical field of view.
struct CameraPose {
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
  double distance = 1.0;
  int resolution = 128;
  double vfov_deg = 60.0;
};

// Partial view in object coordinates plus provenance.
struct PointCloud {
  std::vector<Vec3d> points;
  std::optional<CameraPose> camera;
  std::string source_object;
};

}  // namespace artigen
