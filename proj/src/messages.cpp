#include "v2x/messages.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace v2x {

const char* msg_kind_name(MsgKind kind) {
  switch (kind) {
    case MsgKind::CAM: return "CAM";
    case MsgKind::DENM: return "DENM";
    case MsgKind::CPM: return "CPM";
    case MsgKind::SPATEM: return "SPATEM";
    case MsgKind::MAPEM: return "MAPEM";
  }
  return "?";
}

Cam Cam::make(StationId station, ItsTimestamp ts, GeoPosition pos,
              double speed_mps, double heading_deg) {
  auto clamp_u16 = [](double v) {
    auto i = std::llround(v);
    return static_cast<uint16_t>(std::clamp<long long>(i, 0, 65535));
  };
  Cam cam;
  cam.station = station;
  cam.ts = ts;
  cam.pos = pos;
  cam.speed_cm_s = clamp_u16(speed_mps * 100.0);
  cam.heading_cdeg = clamp_u16(heading_deg * 100.0);
  return cam;
}

MsgKind kind_of(const Payload& payload) {
  struct Visitor {
    MsgKind operator()(const Cam&) { return MsgKind::CAM; }
    MsgKind operator()(const Denm&) { return MsgKind::DENM; }
    MsgKind operator()(const Cpm&) { return MsgKind::CPM; }
    MsgKind operator()(const Spatem&) { return MsgKind::SPATEM; }
    MsgKind operator()(const Mapem&) { return MsgKind::MAPEM; }
  };
  return std::visit(Visitor{}, payload);
}

std::string MsgId::to_string() const {
  static const char* digits = "0123456789abcdef";
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    uint64_t word = i < 8 ? hi : lo;
    int shift = 56 - 8 * (i % 8);
    uint8_t b = static_cast<uint8_t>(word >> shift);
    out[2 * i] = digits[b >> 4];
    out[2 * i + 1] = digits[b & 0xf];
  }
  return out;
}

Envelope Envelope::make(MsgId id, StationId sender, ItsTimestamp generation_time,
                        Payload payload) {
  Envelope e;
  e.msg_id = id;
  e.kind = kind_of(payload);
  e.sender = sender;
  e.generation_time = generation_time;
  e.payload = std::move(payload);
  return e;
}

namespace {

void check_position(std::vector<Violation>& out, const GeoPosition& pos,
                    const std::string& field) {
  if (!pos.in_range())
    out.push_back({field, "coordinates out of range"});
}

void check_station(std::vector<Violation>& out, StationId station,
                   const std::string& field) {
  if (station.value == 0) out.push_back({field, "station id 0 is reserved"});
}

struct ValidateVisitor {
  std::vector<Violation>& out;

  void operator()(const Cam& cam) {
    check_station(out, cam.station, "cam.station");
    check_position(out, cam.pos, "cam.pos");
    if (cam.speed_cm_s > 10'000)
      out.push_back({"cam.speed", "speed above 100 m/s"});
    if (cam.heading_cdeg >= 36'000)
      out.push_back({"cam.heading", "heading out of range [0, 360)"});
  }

  void operator()(const Denm& denm) {
    check_station(out, denm.station, "denm.station");
    check_position(out, denm.event_pos, "denm.event_pos");
    if (denm.relevance_radius_m == 0)
      out.push_back({"denm.relevance_radius", "relevance radius must be > 0"});
    if (denm.relevance_radius_m > 20'000)
      out.push_back({"denm.relevance_radius", "relevance radius above 20 km"});
    if (denm.validity_ms == 0)
      out.push_back({"denm.validity", "validity must be > 0"});
    if (denm.validity_ms > 3'600'000)
      out.push_back({"denm.validity", "validity above one hour"});
    if (static_cast<uint8_t>(denm.event_kind) > 3)
      out.push_back({"denm.event_kind", "unknown event kind"});
  }

  void operator()(const Cpm& cpm) {
    check_station(out, cpm.station, "cpm.station");
    check_position(out, cpm.sensor_pos, "cpm.sensor_pos");
    if (cpm.objects.size() > 256)
      out.push_back({"cpm.objects", "more than 256 objects"});
    std::set<uint32_t> seen;
    for (size_t i = 0; i < cpm.objects.size(); ++i) {
      const auto& obj = cpm.objects[i];
      std::string field = "cpm.objects[" + std::to_string(i) + "]";
      if (!seen.insert(obj.object_id).second)
        out.push_back({field + ".object_id", "duplicate object id"});
      check_position(out, obj.pos, field + ".pos");
      if (obj.confidence_pm > 1000)
        out.push_back({field + ".confidence", "confidence above 1.0"});
      if (static_cast<uint8_t>(obj.obj_class) > 2)
        out.push_back({field + ".class", "unknown object class"});
    }
  }

  void operator()(const Spatem& spatem) {
    std::set<uint32_t> seen;
    for (size_t i = 0; i < spatem.groups.size(); ++i) {
      const auto& g = spatem.groups[i];
      std::string field = "spatem.groups[" + std::to_string(i) + "]";
      if (!seen.insert(g.signal_group).second)
        out.push_back({field + ".signal_group", "duplicate signal group"});
      if (static_cast<uint8_t>(g.state) > 2)
        out.push_back({field + ".state", "unknown signal state"});
    }
  }

  void operator()(const Mapem& mapem) {
    for (size_t i = 0; i < mapem.lanes.size(); ++i) {
      const auto& lane = mapem.lanes[i];
      std::string field = "mapem.lanes[" + std::to_string(i) + "]";
      if (lane.polyline.size() < 2)
        out.push_back({field + ".polyline", "polyline needs at least 2 points"});
      for (size_t j = 0; j < lane.polyline.size(); ++j)
        check_position(out, lane.polyline[j],
                       field + ".polyline[" + std::to_string(j) + "]");
    }
  }
};

}  // namespace

std::vector<Violation> validate(const Payload& payload) {
  std::vector<Violation> out;
  std::visit(ValidateVisitor{out}, payload);
  return out;
}

std::vector<Violation> validate(const Envelope& envelope) {
  std::vector<Violation> out = validate(envelope.payload);
  check_station(out, envelope.sender, "envelope.sender");
  if (envelope.kind != kind_of(envelope.payload))
    out.push_back({"envelope.kind", "kind does not match payload variant"});
  return out;
}

namespace {

void write_position(ByteWriter& w, const GeoPosition& pos) {
  w.i32(pos.lat_udeg());
  w.i32(pos.lon_udeg());
}

struct EncodeVisitor {
  ByteWriter& w;

  void operator()(const Cam& cam) {
    w.u32(cam.station.value);
    w.u64(cam.ts.millis);
    write_position(w, cam.pos);
    w.u16(cam.speed_cm_s);
    w.u16(cam.heading_cdeg);
  }

  void operator()(const Denm& denm) {
    w.u32(denm.station.value);
    w.u64(denm.ts.millis);
    write_position(w, denm.event_pos);
    w.u8(static_cast<uint8_t>(denm.event_kind));
    w.u16(denm.relevance_radius_m);
    w.u32(denm.validity_ms);
    w.u16(denm.seq);
  }

  void operator()(const Cpm& cpm) {
    w.u32(cpm.station.value);
    w.u64(cpm.ts.millis);
    write_position(w, cpm.sensor_pos);
    w.u16(static_cast<uint16_t>(cpm.objects.size()));
    for (const auto& obj : cpm.objects) {
      w.u32(obj.object_id);
      write_position(w, obj.pos);
      w.i16(obj.vel_east_cm_s);
      w.i16(obj.vel_north_cm_s);
      w.u16(obj.confidence_pm);
      w.u8(static_cast<uint8_t>(obj.obj_class));
    }
  }

  void operator()(const Spatem& spatem) {
    w.u32(spatem.intersection);
    w.u64(spatem.ts.millis);
    w.u16(static_cast<uint16_t>(spatem.groups.size()));
    for (const auto& g : spatem.groups) {
      w.u32(g.signal_group);
      w.u8(static_cast<uint8_t>(g.state));
      w.u32(g.time_to_change_ms);
    }
  }

  void operator()(const Mapem& mapem) {
    w.u32(mapem.intersection);
    w.u16(static_cast<uint16_t>(mapem.lanes.size()));
    for (const auto& lane : mapem.lanes) {
      w.u32(lane.lane_id);
      w.u16(static_cast<uint16_t>(lane.polyline.size()));
      for (const auto& p : lane.polyline) write_position(w, p);
      w.u32(lane.signal_group);
    }
  }
};

std::string violations_summary(const std::vector<Violation>& violations) {
  std::string msg;
  for (const auto& v : violations) {
    if (!msg.empty()) msg += "; ";
    msg += v.field + ": " + v.message;
  }
  return msg;
}

}  // namespace

Result<std::vector<uint8_t>> canonical_bytes(const Envelope& envelope) {
  auto violations = validate(envelope);
  if (!violations.empty())
    return Error{Errc::INVALID_FIELD, violations_summary(violations)};

  ByteWriter w;
  w.u64(envelope.msg_id.hi);
  w.u64(envelope.msg_id.lo);
  w.u8(static_cast<uint8_t>(envelope.kind));
  w.u32(envelope.sender.value);
  w.u64(envelope.generation_time.millis);
  std::visit(EncodeVisitor{w}, envelope.payload);
  return w.take();
}

Result<std::vector<uint8_t>> encode(const Envelope& envelope) {
  auto body = canonical_bytes(envelope);
  if (!body) return body.error();

  ByteWriter w;
  w.u8(kWireMagic);
  w.u8(kWireVersion);
  w.raw(*body);
  if (envelope.trailer.has_value()) {
    w.u8(0x01);
    w.u64(envelope.trailer->at_id);
    w.u16(static_cast<uint16_t>(envelope.trailer->signature.size()));
    w.raw(envelope.trailer->signature);
  } else {
    w.u8(0x00);
  }
  return w.take();
}

namespace {

#define V2X_READ(var, expr)        \
  auto var##_r = (expr);           \
  if (!var##_r) return var##_r.error(); \
  auto var = *var##_r

Result<GeoPosition> read_position(ByteReader& r) {
  V2X_READ(lat, r.i32());
  V2X_READ(lon, r.i32());
  return GeoPosition::from_microdegrees(lat, lon);
}

Result<Payload> read_payload(ByteReader& r, MsgKind kind) {
  switch (kind) {
    case MsgKind::CAM: {
      Cam cam;
      V2X_READ(station, r.u32());
      cam.station = StationId{station};
      V2X_READ(ts, r.u64());
      cam.ts = ItsTimestamp{ts};
      V2X_READ(pos, read_position(r));
      cam.pos = pos;
      V2X_READ(speed, r.u16());
      cam.speed_cm_s = speed;
      V2X_READ(heading, r.u16());
      cam.heading_cdeg = heading;
      return Payload{cam};
    }
    case MsgKind::DENM: {
      Denm denm;
      V2X_READ(station, r.u32());
      denm.station = StationId{station};
      V2X_READ(ts, r.u64());
      denm.ts = ItsTimestamp{ts};
      V2X_READ(pos, read_position(r));
      denm.event_pos = pos;
      V2X_READ(kind_byte, r.u8());
      denm.event_kind = static_cast<EventKind>(kind_byte);
      V2X_READ(radius, r.u16());
      denm.relevance_radius_m = radius;
      V2X_READ(validity, r.u32());
      denm.validity_ms = validity;
      V2X_READ(seq, r.u16());
      denm.seq = seq;
      return Payload{denm};
    }
    case MsgKind::CPM: {
      Cpm cpm;
      V2X_READ(station, r.u32());
      cpm.station = StationId{station};
      V2X_READ(ts, r.u64());
      cpm.ts = ItsTimestamp{ts};
      V2X_READ(pos, read_position(r));
      cpm.sensor_pos = pos;
      V2X_READ(count, r.u16());
      cpm.objects.reserve(count);
      for (uint16_t i = 0; i < count; ++i) {
        PerceivedObject obj;
        V2X_READ(oid, r.u32());
        obj.object_id = oid;
        V2X_READ(opos, read_position(r));
        obj.pos = opos;
        V2X_READ(ve, r.i16());
        obj.vel_east_cm_s = ve;
        V2X_READ(vn, r.i16());
        obj.vel_north_cm_s = vn;
        V2X_READ(conf, r.u16());
        obj.confidence_pm = conf;
        V2X_READ(cls, r.u8());
        obj.obj_class = static_cast<ObjectClass>(cls);
        cpm.objects.push_back(obj);
      }
      return Payload{cpm};
    }
    case MsgKind::SPATEM: {
      Spatem spatem;
      V2X_READ(intersection, r.u32());
      spatem.intersection = intersection;
      V2X_READ(ts, r.u64());
      spatem.ts = ItsTimestamp{ts};
      V2X_READ(count, r.u16());
      spatem.groups.reserve(count);
      for (uint16_t i = 0; i < count; ++i) {
        SignalGroupState g;
        V2X_READ(sg, r.u32());
        g.signal_group = sg;
        V2X_READ(state, r.u8());
        g.state = static_cast<SignalState>(state);
        V2X_READ(ttc, r.u32());
        g.time_to_change_ms = ttc;
        spatem.groups.push_back(g);
      }
      return Payload{spatem};
    }
    case MsgKind::MAPEM: {
      Mapem mapem;
      V2X_READ(intersection, r.u32());
      mapem.intersection = intersection;
      V2X_READ(count, r.u16());
      mapem.lanes.reserve(count);
      for (uint16_t i = 0; i < count; ++i) {
        MapLane lane;
        V2X_READ(lid, r.u32());
        lane.lane_id = lid;
        V2X_READ(points, r.u16());
        lane.polyline.reserve(points);
        for (uint16_t j = 0; j < points; ++j) {
          V2X_READ(p, read_position(r));
          lane.polyline.push_back(p);
        }
        V2X_READ(sg, r.u32());
        lane.signal_group = sg;
        mapem.lanes.push_back(lane);
      }
      return Payload{mapem};
    }
  }
  return Error{Errc::UNKNOWN_KIND, "unhandled kind"};
}

}  // namespace

Result<Envelope> decode(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  V2X_READ(magic, r.u8());
  if (magic != kWireMagic) return Error{Errc::BAD_MAGIC, "bad magic byte"};
  V2X_READ(version, r.u8());
  if (version != kWireVersion)
    return Error{Errc::INVALID_FIELD, "unsupported frame version"};

  Envelope e;
  V2X_READ(hi, r.u64());
  V2X_READ(lo, r.u64());
  e.msg_id = MsgId{hi, lo};
  V2X_READ(kind_byte, r.u8());
  if (kind_byte < 1 || kind_byte > 5)
    return Error{Errc::UNKNOWN_KIND, "kind tag " + std::to_string(kind_byte)};
  e.kind = static_cast<MsgKind>(kind_byte);
  V2X_READ(sender, r.u32());
  e.sender = StationId{sender};
  V2X_READ(gen_time, r.u64());
  e.generation_time = ItsTimestamp{gen_time};

  V2X_READ(payload, read_payload(r, e.kind));
  e.payload = std::move(payload);

  V2X_READ(trailer_flag, r.u8());
  if (trailer_flag == 0x01) {
    SecurityTrailer trailer;
    V2X_READ(at_id, r.u64());
    trailer.at_id = at_id;
    V2X_READ(sig_len, r.u16());
    V2X_READ(sig, r.raw(sig_len));
    trailer.signature.assign(sig.begin(), sig.end());
    e.trailer = std::move(trailer);
  } else if (trailer_flag != 0x00) {
    return Error{Errc::INVALID_FIELD, "bad trailer flag"};
  }
  if (r.remaining() != 0)
    return Error{Errc::INVALID_FIELD, "trailing bytes after frame"};

  auto violations = validate(e);
  if (!violations.empty())
    return Error{Errc::INVALID_FIELD, violations_summary(violations)};
  return e;
}

#undef V2X_READ

}  // namespace v2x
