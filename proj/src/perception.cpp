#include "v2x/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace v2x {

namespace {

uint16_t clamp_confidence_pm(double confidence) {
  auto pm = std::llround(confidence * 1000.0);
  return static_cast<uint16_t>(std::clamp<long long>(pm, 0, 1000));
}

int16_t clamp_vel_cm_s(double mps) {
  auto cm = std::llround(mps * 100.0);
  return static_cast<int16_t>(std::clamp<long long>(cm, -32768, 32767));
}

}  // namespace

Result<IngestResult> Epm::ingest_detection(const SensorDetection& detection,
                                           SimTime now) {
  if (distance_m(m_center, detection.object.pos) > m_region_radius_m)
    return Error{Errc::OUT_OF_REGION, "detection outside surveyed region"};
  return fuse_or_create(detection.object.pos, detection.object.vel_east_mps(),
                        detection.object.vel_north_mps(),
                        detection.object.confidence(), detection.object.obj_class,
                        detection.source.value, now);
}

IngestResult Epm::ingest_cam(const Cam& cam, SimTime now) {
  double heading_rad = cam.heading_deg() * kDegToRad;
  double vel_east = cam.speed_mps() * std::sin(heading_rad);
  double vel_north = cam.speed_mps() * std::cos(heading_rad);
  return fuse_or_create(cam.pos, vel_east, vel_north, 0.95, ObjectClass::VEHICLE,
                        cam.station.value, now);
}

IngestResult Epm::fuse_or_create(GeoPosition pos, double vel_east, double vel_north,
                                 double confidence, ObjectClass obj_class,
                                 uint32_t source, SimTime now) {
  size_t best = m_tracks.size();
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < m_tracks.size(); ++i) {
    if (!live(m_tracks[i], now)) continue;
    auto te = enu_offset(m_center, m_tracks[i].pos);
    auto de = enu_offset(m_center, pos);
    double dist = te && de ? std::hypot(te->east_m - de->east_m,
                                        te->north_m - de->north_m)
                           : distance_m(m_tracks[i].pos, pos);
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }

  IngestResult result;
  if (best < m_tracks.size() && best_dist <= m_gate_m) {
    Track& track = m_tracks[best];
    double w_t = track.confidence;
    double w_d = confidence;
    if (w_t + w_d <= 0) w_t = w_d = 0.5;
    double sum = w_t + w_d;

    auto te = enu_offset(m_center, track.pos);
    auto de = enu_offset(m_center, pos);
    if (te && de) {
      double east = (w_t * te->east_m + w_d * de->east_m) / sum;
      double north = (w_t * te->north_m + w_d * de->north_m) / sum;
      track.pos = offset_position(m_center, east, north);
    }
    track.vel_east_mps = (w_t * track.vel_east_mps + w_d * vel_east) / sum;
    track.vel_north_mps = (w_t * track.vel_north_mps + w_d * vel_north) / sum;
    track.confidence = 1.0 - (1.0 - track.confidence) * (1.0 - confidence);
    track.last_update = now;
    track.sources.insert(source);
    if (m_classes[best] == ObjectClass::UNKNOWN) m_classes[best] = obj_class;
    result = {IngestAction::UPDATED, track.track_id};
  } else {
    Track track;
    track.track_id = m_next_track_id++;
    track.pos = pos;
    track.vel_east_mps = vel_east;
    track.vel_north_mps = vel_north;
    track.confidence = confidence;
    track.last_update = now;
    track.sources.insert(source);
    m_tracks.push_back(std::move(track));
    m_classes.push_back(obj_class);
    result = {IngestAction::CREATED, m_tracks.back().track_id};
  }
  merge_close_tracks(now);
  return result;
}

void Epm::merge_close_tracks(SimTime now) {
  // Keeps the EPM invariant that no two live tracks sit within gate/2.
  bool merged = true;
  while (merged) {
    merged = false;
    for (size_t i = 0; i < m_tracks.size() && !merged; ++i) {
      if (!live(m_tracks[i], now)) continue;
      for (size_t j = i + 1; j < m_tracks.size() && !merged; ++j) {
        if (!live(m_tracks[j], now)) continue;
        if (distance_m(m_tracks[i].pos, m_tracks[j].pos) >= m_gate_m / 2) continue;
        Track& keep = m_tracks[i];
        Track& drop = m_tracks[j];
        double w_k = keep.confidence, w_d = drop.confidence;
        if (w_k + w_d <= 0) w_k = w_d = 0.5;
        double sum = w_k + w_d;
        auto ke = enu_offset(m_center, keep.pos);
        auto de = enu_offset(m_center, drop.pos);
        if (ke && de)
          keep.pos = offset_position(m_center,
                                     (w_k * ke->east_m + w_d * de->east_m) / sum,
                                     (w_k * ke->north_m + w_d * de->north_m) / sum);
        keep.vel_east_mps = (w_k * keep.vel_east_mps + w_d * drop.vel_east_mps) / sum;
        keep.vel_north_mps = (w_k * keep.vel_north_mps + w_d * drop.vel_north_mps) / sum;
        keep.confidence = 1.0 - (1.0 - keep.confidence) * (1.0 - drop.confidence);
        keep.last_update = std::max(keep.last_update, drop.last_update);
        keep.sources.insert(drop.sources.begin(), drop.sources.end());
        if (m_classes[i] == ObjectClass::UNKNOWN) m_classes[i] = m_classes[j];
        m_tracks.erase(m_tracks.begin() + j);
        m_classes.erase(m_classes.begin() + j);
        merged = true;
      }
    }
  }
}

Cpm Epm::snapshot(StationId station, SimTime now) const {
  Cpm cpm;
  cpm.station = station;
  cpm.ts = now.to_its();
  cpm.sensor_pos = m_center;
  for (size_t i = 0; i < m_tracks.size(); ++i) {
    const Track& t = m_tracks[i];
    if (!live(t, now)) continue;
    PerceivedObject obj;
    obj.object_id = t.track_id;
    obj.pos = t.pos;
    obj.vel_east_cm_s = clamp_vel_cm_s(t.vel_east_mps);
    obj.vel_north_cm_s = clamp_vel_cm_s(t.vel_north_mps);
    obj.confidence_pm = clamp_confidence_pm(t.confidence);
    obj.obj_class = m_classes[i];
    cpm.objects.push_back(obj);
  }
  return cpm;
}

size_t Epm::live_count(SimTime now) const {
  size_t n = 0;
  for (const auto& t : m_tracks)
    if (live(t, now)) ++n;
  return n;
}

AccuracyReport accuracy(const Cpm& snapshot,
                        const std::vector<GroundTruthObject>& truth) {
  struct Pair {
    double dist;
    size_t obj;
    size_t truth;
  };
  std::vector<Pair> pairs;
  for (size_t i = 0; i < snapshot.objects.size(); ++i)
    for (size_t j = 0; j < truth.size(); ++j)
      pairs.push_back({distance_m(snapshot.objects[i].pos, truth[j].pos), i, j});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.obj != b.obj) return a.obj < b.obj;
    return a.truth < b.truth;
  });

  std::vector<bool> obj_used(snapshot.objects.size(), false);
  std::vector<bool> truth_used(truth.size(), false);
  double sum_sq = 0;
  size_t matched = 0;
  for (const auto& p : pairs) {
    if (obj_used[p.obj] || truth_used[p.truth]) continue;
    obj_used[p.obj] = true;
    truth_used[p.truth] = true;
    sum_sq += p.dist * p.dist;
    ++matched;
  }

  AccuracyReport report;
  report.matched = matched;
  report.rmse_m = matched > 0 ? std::sqrt(sum_sq / matched) : 0;
  report.count_delta = static_cast<int>(snapshot.objects.size()) -
                       static_cast<int>(truth.size());
  return report;
}

}  // namespace v2x
