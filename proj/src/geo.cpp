#include "v2x/geo.hpp"

#include <algorithm>
#include <cmath>

namespace v2x {

Result<GeoPosition> GeoPosition::from_degrees(double lat_deg, double lon_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
    return Error{Errc::INVALID_FIELD, "latitude out of [-90, 90]"};
  if (!(lon_deg >= -180.0 && lon_deg < 180.0))
    return Error{Errc::INVALID_FIELD, "longitude out of [-180, 180)"};
  auto lat = static_cast<int32_t>(std::llround(lat_deg * 1e6));
  auto lon = static_cast<int32_t>(std::llround(lon_deg * 1e6));
  if (lon == 180'000'000) lon = -180'000'000;
  return from_microdegrees(lat, lon);
}

double distance_m(const GeoPosition& a, const GeoPosition& b) {
  double lat1 = a.lat_deg() * kDegToRad;
  double lat2 = b.lat_deg() * kDegToRad;
  double dlat = (b.lat_deg() - a.lat_deg()) * kDegToRad;
  double dlon = (b.lon_deg() - a.lon_deg()) * kDegToRad;
  double sl = std::sin(dlat / 2);
  double so = std::sin(dlon / 2);
  double h = sl * sl + std::cos(lat1) * std::cos(lat2) * so * so;
  h = std::min(1.0, h);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

TileId tile_for(const GeoPosition& pos, int level) {
  uint32_t n = 1u << level;
  auto clamp_idx = [n](double v) {
    if (v < 0) return 0u;
    auto i = static_cast<uint32_t>(v);
    return std::min(i, n - 1);
  };
  double fx = (pos.lon_deg() + 180.0) / 360.0 * n;
  double fy = (pos.lat_deg() + 90.0) / 180.0 * n;
  return TileId{static_cast<uint8_t>(level), clamp_idx(std::floor(fx)),
                clamp_idx(std::floor(fy))};
}

std::vector<TileId> tiles_covering(const Circle& circle, int level) {
  uint32_t n = 1u << level;
  double lat_c = circle.center.lat_deg();
  double lon_c = circle.center.lon_deg();
  double dlat = circle.radius_m / kEarthRadiusM / kDegToRad;

  double lat_min = std::max(-90.0, lat_c - dlat);
  double lat_max = std::min(90.0, lat_c + dlat);

  // Worst-case meridian convergence over the box decides the lon padding.
  double worst_lat = std::min(89.999, std::max(std::fabs(lat_min), std::fabs(lat_max)));
  double cos_lat = std::cos(worst_lat * kDegToRad);
  double dlon = 180.0;
  bool wraps_pole = lat_max >= 90.0 - 1e-9 || lat_min <= -90.0 + 1e-9;
  if (!wraps_pole && cos_lat > 1e-12)
    dlon = std::min(180.0, circle.radius_m / (kEarthRadiusM * cos_lat) / kDegToRad);

  auto y_of = [&](double lat) {
    double fy = (lat + 90.0) / 180.0 * n;
    return std::min<int64_t>(static_cast<int64_t>(std::floor(fy)), n - 1);
  };
  int64_t y0 = std::max<int64_t>(0, y_of(lat_min));
  int64_t y1 = std::max<int64_t>(0, y_of(lat_max));

  auto x_of = [&](double lon) {
    double fx = (lon + 180.0) / 360.0 * n;
    return static_cast<int64_t>(std::floor(fx));
  };

  // One or two x spans, depending on antimeridian wrap.
  std::vector<std::pair<int64_t, int64_t>> x_spans;
  if (dlon >= 180.0) {
    x_spans.emplace_back(0, n - 1);
  } else {
    double lon_min = lon_c - dlon;
    double lon_max = lon_c + dlon;
    if (lon_min < -180.0 && lon_max >= 180.0) {
      x_spans.emplace_back(0, n - 1);
    } else if (lon_min < -180.0) {
      x_spans.emplace_back(0, std::min<int64_t>(x_of(lon_max), n - 1));
      x_spans.emplace_back(std::max<int64_t>(0, x_of(lon_min + 360.0)), n - 1);
    } else if (lon_max >= 180.0) {
      x_spans.emplace_back(std::max<int64_t>(0, x_of(lon_min)), n - 1);
      x_spans.emplace_back(0, std::min<int64_t>(x_of(lon_max - 360.0), n - 1));
    } else {
      x_spans.emplace_back(std::max<int64_t>(0, x_of(lon_min)),
                           std::min<int64_t>(x_of(lon_max), n - 1));
    }
  }

  std::vector<TileId> out;
  for (auto [x0, x1] : x_spans)
    for (int64_t y = y0; y <= y1; ++y)
      for (int64_t x = x0; x <= x1; ++x)
        out.push_back(TileId{static_cast<uint8_t>(level),
                             static_cast<uint32_t>(x), static_cast<uint32_t>(y)});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GeoPosition offset_position(const GeoPosition& ref, double east_m, double north_m) {
  double lat = ref.lat_deg() + north_m / (kEarthRadiusM * kDegToRad);
  double cos_lat = std::cos(ref.lat_deg() * kDegToRad);
  double lon = ref.lon_deg();
  if (cos_lat > 1e-12) lon += east_m / (kEarthRadiusM * cos_lat * kDegToRad);
  auto pos = GeoPosition::from_degrees(lat, lon);
  return pos ? *pos : ref;
}

Result<EnuOffset> enu_offset(const GeoPosition& ref, const GeoPosition& p) {
  if (distance_m(ref, p) >= 50'000.0)
    return Error{Errc::TOO_FAR, "enu_offset beyond 50 km"};
  double dlat = p.lat_deg() - ref.lat_deg();
  double dlon = p.lon_deg() - ref.lon_deg();
  if (dlon >= 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  EnuOffset o;
  o.north_m = dlat * kDegToRad * kEarthRadiusM;
  o.east_m = dlon * kDegToRad * kEarthRadiusM * std::cos(ref.lat_deg() * kDegToRad);
  return o;
}

}  // namespace v2x
