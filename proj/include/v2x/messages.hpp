#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "v2x/bytes.hpp"
#include "v2x/geo.hpp"
#include "v2x/result.hpp"

namespace v2x {

/// ITS station identifier; 0 is reserved as "unknown".
struct StationId {
  uint32_t value = 0;
  friend auto operator<=>(const StationId&, const StationId&) = default;
};

/// Milliseconds since the simulation epoch.
struct ItsTimestamp {
  uint64_t millis = 0;
  friend auto operator<=>(const ItsTimestamp&, const ItsTimestamp&) = default;
};

enum class MsgKind : uint8_t { CAM = 1, DENM = 2, CPM = 3, SPATEM = 4, MAPEM = 5 };

const char* msg_kind_name(MsgKind kind);

// Scalar payload fields are stored in their wire units (fixed-point
// integers), so encode/decode round-trips exactly and message values compare
// bit-for-bit. Conversions: speed cm/s, heading centi-degrees, velocity cm/s
// (signed), confidence per-mille, radius whole meters, durations ms.

struct Cam {
  StationId station;
  ItsTimestamp ts;
  GeoPosition pos;
  uint16_t speed_cm_s = 0;    // valid: <= 10000 (100 m/s)
  uint16_t heading_cdeg = 0;  // valid: < 36000

  double speed_mps() const { return speed_cm_s * 0.01; }
  double heading_deg() const { return heading_cdeg * 0.01; }
  static Cam make(StationId station, ItsTimestamp ts, GeoPosition pos,
                  double speed_mps, double heading_deg);
  friend bool operator==(const Cam&, const Cam&) = default;
};

enum class EventKind : uint8_t { ACCIDENT = 0, ROAD_CLOSURE = 1, HAZARD = 2, OTHER = 3 };

struct Denm {
  StationId station;
  ItsTimestamp ts;
  GeoPosition event_pos;
  EventKind event_kind = EventKind::OTHER;
  uint16_t relevance_radius_m = 0;  // valid: (0, 20000]
  uint32_t validity_ms = 0;         // valid: (0, 3'600'000]
  uint16_t seq = 0;
  friend bool operator==(const Denm&, const Denm&) = default;
};

enum class ObjectClass : uint8_t { VEHICLE = 0, PEDESTRIAN = 1, UNKNOWN = 2 };

struct PerceivedObject {
  uint32_t object_id = 0;
  GeoPosition pos;
  int16_t vel_east_cm_s = 0;
  int16_t vel_north_cm_s = 0;
  uint16_t confidence_pm = 0;  // per-mille, valid: <= 1000
  ObjectClass obj_class = ObjectClass::UNKNOWN;

  double vel_east_mps() const { return vel_east_cm_s * 0.01; }
  double vel_north_mps() const { return vel_north_cm_s * 0.01; }
  double confidence() const { return confidence_pm * 1e-3; }
  friend bool operator==(const PerceivedObject&, const PerceivedObject&) = default;
};

struct Cpm {
  StationId station;
  ItsTimestamp ts;
  GeoPosition sensor_pos;
  std::vector<PerceivedObject> objects;  // valid: size <= 256, unique object_ids
  friend bool operator==(const Cpm&, const Cpm&) = default;
};

enum class SignalState : uint8_t { RED = 0, GREEN = 1, AMBER = 2 };

struct SignalGroupState {
  uint32_t signal_group = 0;
  SignalState state = SignalState::RED;
  uint32_t time_to_change_ms = 0;
  friend bool operator==(const SignalGroupState&, const SignalGroupState&) = default;
};

struct Spatem {
  uint32_t intersection = 0;
  ItsTimestamp ts;
  std::vector<SignalGroupState> groups;  // valid: unique signal_group ids
  friend bool operator==(const Spatem&, const Spatem&) = default;
};

struct MapLane {
  uint32_t lane_id = 0;
  std::vector<GeoPosition> polyline;  // valid: >= 2 points
  uint32_t signal_group = 0;
  friend bool operator==(const MapLane&, const MapLane&) = default;
};

struct Mapem {
  uint32_t intersection = 0;
  std::vector<MapLane> lanes;
  friend bool operator==(const Mapem&, const Mapem&) = default;
};

using Payload = std::variant<Cam, Denm, Cpm, Spatem, Mapem>;

MsgKind kind_of(const Payload& payload);

/// 128-bit message id: station id in the top word, per-station sequence in
/// the bottom. Counter-derived rather than random so runs replay exactly.
struct MsgId {
  uint64_t hi = 0;
  uint64_t lo = 0;

  static MsgId make(StationId station, uint64_t seq) {
    return MsgId{static_cast<uint64_t>(station.value) << 32, seq};
  }
  std::string to_string() const;
  friend auto operator<=>(const MsgId&, const MsgId&) = default;
};

class MsgIdGenerator {
 public:
  MsgId next(StationId station) { return MsgId::make(station, m_counters[station.value]++); }

 private:
  std::map<uint32_t, uint64_t> m_counters;
};

/// Signature block appended after the canonical body. Produced and checked by
/// the security module; carried here as its wire shape.
struct SecurityTrailer {
  uint64_t at_id = 0;
  std::vector<uint8_t> signature;
  friend bool operator==(const SecurityTrailer&, const SecurityTrailer&) = default;
};

struct Envelope {
  MsgId msg_id;
  MsgKind kind = MsgKind::CAM;
  StationId sender;
  ItsTimestamp generation_time;
  Payload payload;
  std::optional<SecurityTrailer> trailer;

  /// Kind is derived from the payload variant; a mismatched kind/payload pair
  /// is not constructible.
  static Envelope make(MsgId id, StationId sender, ItsTimestamp generation_time,
                       Payload payload);
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

struct Violation {
  std::string field;
  std::string message;
};

/// Returns every violated invariant of the payload, not just the first.
std::vector<Violation> validate(const Payload& payload);

/// Payload violations plus envelope-level checks (sender, kind coherence).
std::vector<Violation> validate(const Envelope& envelope);

/// Deterministic signature input: msg_id, kind tag, sender, generation_time,
/// then payload fields in declaration order. Fixed-width big-endian integers,
/// coordinates as micro-degrees, lists length-prefixed (u16). The trailer is
/// never part of the canonical bytes.
Result<std::vector<uint8_t>> canonical_bytes(const Envelope& envelope);

inline constexpr uint8_t kWireMagic = 0xC4;
inline constexpr uint8_t kWireVersion = 0x01;

/// Frame: magic, version, canonical body, trailer flag (0x00 absent / 0x01
/// present), optional trailer.
Result<std::vector<uint8_t>> encode(const Envelope& envelope);
Result<Envelope> decode(std::span<const uint8_t> bytes);

}  // namespace v2x
