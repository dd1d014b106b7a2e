#pragma once

#include <set>
#include <vector>

#include "v2x/geo.hpp"
#include "v2x/messages.hpp"
#include "v2x/time.hpp"

namespace v2x {

struct Track {
  uint32_t track_id = 0;
  GeoPosition pos;
  double vel_east_mps = 0;
  double vel_north_mps = 0;
  double confidence = 0;
  SimTime last_update;
  std::set<uint32_t> sources;  // distinct contributing stations

  size_t contributors() const { return sources.size(); }
};

struct SensorDetection {
  StationId source;
  PerceivedObject object;
  SimTime ts;
};

enum class IngestAction : uint8_t { CREATED = 0, UPDATED = 1 };

struct IngestResult {
  IngestAction action = IngestAction::CREATED;
  uint32_t track_id = 0;
};

/// Environment perception model of one MEC's surveyed area. Greedy
/// nearest-neighbor association with a 2.5 m gate; confidence-weighted
/// position/velocity averaging; noisy-OR confidence combination; no motion
/// model between updates.
class Epm {
 public:
  Epm(GeoPosition region_center, double region_radius_m, uint64_t expiry_ms = 1500,
      double gate_m = 2.5)
      : m_center(region_center),
        m_region_radius_m(region_radius_m),
        m_expiry_ms(expiry_ms),
        m_gate_m(gate_m) {}

  /// OUT_OF_REGION when the detection lies outside the surveyed circle.
  Result<IngestResult> ingest_detection(const SensorDetection& detection, SimTime now);

  /// CAM self-reports fuse like detections with confidence 0.95 and class
  /// VEHICLE; velocity decomposed from speed/heading (clockwise from north).
  IngestResult ingest_cam(const Cam& cam, SimTime now);

  /// Every live track as a PerceivedObject, ordered by track_id.
  Cpm snapshot(StationId station, SimTime now) const;

  const std::vector<Track>& tracks() const { return m_tracks; }
  size_t live_count(SimTime now) const;
  double gate_m() const { return m_gate_m; }

 private:
  bool live(const Track& t, SimTime now) const {
    return (now.micros - t.last_update.micros) / 1000 <= m_expiry_ms;
  }
  IngestResult fuse_or_create(GeoPosition pos, double vel_east, double vel_north,
                              double confidence, ObjectClass obj_class,
                              uint32_t source, SimTime now);
  void merge_close_tracks(SimTime now);

  GeoPosition m_center;
  double m_region_radius_m;
  uint64_t m_expiry_ms;
  double m_gate_m;
  std::vector<Track> m_tracks;
  std::vector<ObjectClass> m_classes;  // parallel to m_tracks
  uint32_t m_next_track_id = 1;
};

struct GroundTruthObject {
  uint32_t id = 0;
  GeoPosition pos;
};

struct AccuracyReport {
  double rmse_m = 0;
  int count_delta = 0;  // tracks minus truth objects
  size_t matched = 0;
};

/// Greedy one-to-one assignment by increasing pairwise distance; RMSE over
/// matched pairs.
AccuracyReport accuracy(const Cpm& snapshot,
                        const std::vector<GroundTruthObject>& truth);

}  // namespace v2x
