#pragma once

#include <cmath>

#include "xl5g/util.hpp"

namespace xl5g {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

struct GeoPoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;

  bool valid() const {
    return latitude_deg >= -90.0 && latitude_deg <= 90.0 &&
           longitude_deg >= -180.0 && longitude_deg <= 180.0;
  }
};

struct PlanarPoint {
  double x_m = 0.0;  // meters east of the region origin
  double y_m = 0.0;  // meters north of the region origin
};

inline double distance(const PlanarPoint& a, const PlanarPoint& b) {
  const double dx = a.x_m - b.x_m;
  const double dy = a.y_m - b.y_m;
  return std::sqrt(dx * dx + dy * dy);
}

inline double distance_sq(const PlanarPoint& a, const PlanarPoint& b) {
  const double dx = a.x_m - b.x_m;
  const double dy = a.y_m - b.y_m;
  return dx * dx + dy * dy;
}

struct Region {
  GeoPoint origin;  // geographic anchor of planar (0, 0)
  double width_m = 0.0;
  double height_m = 0.0;

  // Half-open bounds: [0, width) x [0, height).
  bool contains(const PlanarPoint& p) const {
    return p.x_m >= 0.0 && p.x_m < width_m && p.y_m >= 0.0 && p.y_m < height_m;
  }
};

// Equirectangular approximation around the origin latitude. Sub-meter error
// over a 10 km span, and exactly invertible by unproject().
inline PlanarPoint project(const GeoPoint& p, const GeoPoint& origin) {
  const double cos_lat = std::cos(origin.latitude_deg * kDegToRad);
  return PlanarPoint{
      kEarthRadiusM * (p.longitude_deg - origin.longitude_deg) * kDegToRad * cos_lat,
      kEarthRadiusM * (p.latitude_deg - origin.latitude_deg) * kDegToRad};
}

inline GeoPoint unproject(const PlanarPoint& p, const GeoPoint& origin) {
  const double cos_lat = std::cos(origin.latitude_deg * kDegToRad);
  return GeoPoint{origin.latitude_deg + (p.y_m / kEarthRadiusM) / kDegToRad,
                  origin.longitude_deg + (p.x_m / (kEarthRadiusM * cos_lat)) / kDegToRad};
}

// Origin of the bundled Manchester study area; data/sitefinder_manchester.csv
// is clipped against this region.
inline Region manchester_region() {
  return Region{GeoPoint{53.4350, -2.3200}, 10000.0, 10000.0};
}

}  // namespace xl5g
