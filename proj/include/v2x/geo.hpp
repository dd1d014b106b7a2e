#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "v2x/result.hpp"

namespace v2x {

/// Spherical earth; sub-0.5% error versus WGS84 is irrelevant at scenario scale.
inline constexpr double kEarthRadiusM = 6'371'000.0;

inline constexpr double kDegToRad = 0.017453292519943295;

/// WGS84 position stored as signed micro-degrees. Integer storage keeps the
/// wire encoding exact (~0.11 m grid) and makes positions hashable and
/// comparable without floating-point ambiguity.
class GeoPosition {
 public:
  GeoPosition() = default;

  /// Validates lat in [-90, 90], lon in [-180, 180) and rounds to the
  /// micro-degree grid. lon values rounding up to exactly 180 wrap to -180.
  static Result<GeoPosition> from_degrees(double lat_deg, double lon_deg);

  /// Trusted constructor for already-quantized values (decode path validates
  /// separately).
  static GeoPosition from_microdegrees(int32_t lat_udeg, int32_t lon_udeg) {
    GeoPosition p;
    p.m_lat_udeg = lat_udeg;
    p.m_lon_udeg = lon_udeg;
    return p;
  }

  double lat_deg() const { return m_lat_udeg * 1e-6; }
  double lon_deg() const { return m_lon_udeg * 1e-6; }
  int32_t lat_udeg() const { return m_lat_udeg; }
  int32_t lon_udeg() const { return m_lon_udeg; }

  bool in_range() const {
    return m_lat_udeg >= -90'000'000 && m_lat_udeg <= 90'000'000 &&
           m_lon_udeg >= -180'000'000 && m_lon_udeg < 180'000'000;
  }

  friend bool operator==(const GeoPosition&, const GeoPosition&) = default;

 private:
  int32_t m_lat_udeg = 0;
  int32_t m_lon_udeg = 0;
};

/// Equirectangular tile at a zoom level: x indexes longitude, y latitude.
struct TileId {
  uint8_t level = 0;
  uint32_t x = 0;
  uint32_t y = 0;

  friend auto operator<=>(const TileId&, const TileId&) = default;
};

struct Circle {
  GeoPosition center;
  double radius_m = 0;
};

/// Great-circle (haversine) distance in meters.
double distance_m(const GeoPosition& a, const GeoPosition& b);

/// Tile containing pos at the given level (0..20), clamped to grid bounds.
TileId tile_for(const GeoPosition& pos, int level);

/// Tiles intersecting the bounding box of the circle. Superset guarantee:
/// every position within the circle lies in some returned tile. Exactness is
/// not needed because recipients are filtered by true distance afterwards.
std::vector<TileId> tiles_covering(const Circle& circle, int level);

struct EnuOffset {
  double east_m = 0;
  double north_m = 0;
};

/// Local planar offset of p relative to ref (equirectangular projection).
/// TOO_FAR beyond 50 km, where the linearization degrades.
Result<EnuOffset> enu_offset(const GeoPosition& ref, const GeoPosition& p);

/// Inverse of enu_offset: the position east_m/north_m meters from ref.
/// Falls back to ref if the displaced point leaves the coordinate range.
GeoPosition offset_position(const GeoPosition& ref, double east_m, double north_m);

}  // namespace v2x
