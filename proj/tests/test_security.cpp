#include <doctest.h>

#include <set>

#include "test_util.hpp"
#include "v2x/security.hpp"

using namespace v2x;

namespace {

const GeoPosition kPos = GeoPosition::from_microdegrees(48'100'000, 11'600'000);

Envelope cam_envelope(uint32_t sender, uint64_t gen_ms) {
  Cam cam = Cam::make(StationId{sender}, ItsTimestamp{gen_ms}, kPos, 10, 45);
  return Envelope::make(MsgId::make(StationId{sender}, gen_ms), StationId{sender},
                        ItsTimestamp{gen_ms}, cam);
}

}  // namespace

TEST_CASE("pki init builds a verifiable authority chain, deterministically") {
  Pki pki = Pki::init(42);
  const TrustStore& store = pki.trust_store();

  CHECK(store.check_authority(store.root).ok());
  CHECK(store.check_authority(store.ea).ok());
  CHECK(store.check_authority(store.aa).ok());
  CHECK(store.check_authority(store.ua).ok());

  Certificate tampered = store.aa;
  tampered.pubkey.bytes[0] ^= 0x01;
  CHECK(!store.check_authority(tampered).ok());

  Pki again = Pki::init(42);
  CHECK(again.trust_store().root.cert_id == store.root.cert_id);
  CHECK(again.trust_store().ea.cert_id == store.ea.cert_id);
  CHECK(again.trust_store().aa.cert_id == store.aa.cert_id);
  CHECK(again.trust_store().root.pubkey == store.root.pubkey);

  Pki other = Pki::init(43);
  CHECK(other.trust_store().root.cert_id != store.root.cert_id);
}

TEST_CASE("enrolment issues and records credentials") {
  Pki pki = Pki::init(7);
  auto ec = pki.enroll(StationId{10}, ItsTimestamp{0});
  REQUIRE(ec.ok());
  CHECK(verify_bytes(pki.trust_store().ea.pubkey, ec_tbs(*ec), ec->issuer_sig));
  CHECK(ec->canonical_station.value == 10);
  CHECK(ec->valid_from < ec->valid_to);

  auto second = pki.enroll(StationId{10}, ItsTimestamp{0});
  REQUIRE(second.ok());
  CHECK(second->ec_id != ec->ec_id);

  pki.deactivate_station(StationId{11});
  auto denied = pki.enroll(StationId{11}, ItsTimestamp{0});
  CHECK(denied.code() == Errc::STATION_REVOKED);
}

TEST_CASE("ticket issuance covers contiguous five-minute windows") {
  Pki pki = Pki::init(7);
  auto ec = pki.enroll(StationId{10}, ItsTimestamp{0});
  REQUIRE(ec.ok());
  auto tickets = pki.issue_tickets(*ec, 20, ItsTimestamp{1000});
  REQUIRE(tickets.ok());
  REQUIRE(tickets->size() == 20);

  uint64_t window = pki.ticket_validity_ms();
  CHECK(window == 5 * 60 * 1000);
  CHECK((*tickets)[0].at.valid_from.millis == 1000);
  CHECK(tickets->back().at.valid_to.millis == 1000 + 20 * window);
  for (size_t k = 1; k < tickets->size(); ++k)
    CHECK((*tickets)[k].at.valid_from == (*tickets)[k - 1].at.valid_to);
  for (const auto& t : *tickets)
    CHECK(verify_bytes(pki.trust_store().aa.pubkey, at_tbs(t.at), t.at.issuer_sig));
}

TEST_CASE("tickets of one credential share no field values beyond constants") {
  Pki pki = Pki::init(9);
  auto ec = pki.enroll(StationId{10}, ItsTimestamp{0});
  REQUIRE(ec.ok());
  auto tickets = pki.issue_tickets(*ec, 20, ItsTimestamp{0});
  REQUIRE(tickets.ok());

  for (size_t i = 0; i < tickets->size(); ++i) {
    for (size_t j = i + 1; j < tickets->size(); ++j) {
      const AuthorizationTicket& a = (*tickets)[i].at;
      const AuthorizationTicket& b = (*tickets)[j].at;
      CHECK(a.at_id != b.at_id);
      CHECK(a.pubkey != b.pubkey);
      CHECK(a.valid_from != b.valid_from);
      CHECK(a.valid_to != b.valid_to);
      CHECK(a.issuer_sig != b.issuer_sig);
      // issuer id and the permitted-kind set are format constants
      CHECK(a.issuer_id == b.issuer_id);
      CHECK(a.permitted == b.permitted);
    }
  }

  // nothing in a ticket derives from the enrolment credential
  for (const auto& t : *tickets) {
    CHECK(t.at.at_id != ec->ec_id);
    CHECK(t.at.pubkey != ec->pubkey);
  }
}

TEST_CASE("ticket issuance validates the credential") {
  Pki pki = Pki::init(11);
  auto ec = pki.enroll(StationId{10}, ItsTimestamp{0});
  REQUIRE(ec.ok());

  EnrolmentCredential forged = *ec;
  forged.canonical_station = StationId{999};
  CHECK(pki.issue_tickets(forged, 1, ItsTimestamp{0}).code() == Errc::EC_INVALID);

  // expired EC (validity is 24 h)
  CHECK(pki.issue_tickets(*ec, 1, ItsTimestamp{25ull * 3600 * 1000}).code() ==
        Errc::EC_INVALID);

  pki.revoke(ec->ec_id, ItsTimestamp{1});
  CHECK(pki.issue_tickets(*ec, 1, ItsTimestamp{2}).code() == Errc::EC_REVOKED);
}

TEST_CASE("sign and verify round trip with every tamper class rejected") {
  Pki pki = Pki::init(13);
  auto ec = pki.enroll(StationId{10}, ItsTimestamp{0});
  REQUIRE(ec.ok());
  auto tickets = pki.issue_tickets(*ec, 3, ItsTimestamp{0});
  REQUIRE(tickets.ok());
  const IssuedTicket& ticket = (*tickets)[0];

  Envelope env = cam_envelope(10, 1000);
  auto trailer = sign_envelope(env, ticket, ItsTimestamp{1000});
  REQUIRE(trailer.ok());
  env.trailer = *trailer;

  const TrustStore& store = pki.trust_store();
  CHECK(verify_envelope(env, store, pki.crl(), ItsTimestamp{1000}).ok());

  // payload bit flip
  Envelope flipped = env;
  std::get<Cam>(flipped.payload).speed_cm_s ^= 1;
  CHECK(verify_envelope(flipped, store, pki.crl(), ItsTimestamp{1000}).code() ==
        Errc::BAD_SIGNATURE);

  // missing trailer
  Envelope bare = cam_envelope(10, 1000);
  CHECK(verify_envelope(bare, store, pki.crl(), ItsTimestamp{1000}).code() ==
        Errc::BAD_SIGNATURE);

  // unknown ticket
  Envelope unknown = env;
  REQUIRE(unknown.trailer.has_value());
  unknown.trailer->at_id ^= 0xDEAD;
  CHECK(verify_envelope(unknown, store, pki.crl(), ItsTimestamp{1000}).code() ==
        Errc::CHAIN_INVALID);

  // generation time outside the ticket window
  Envelope expired = cam_envelope(10, 1000);
  expired.generation_time = ItsTimestamp{ticket.at.valid_to.millis + 1};
  std::get<Cam>(expired.payload).ts = expired.generation_time;
  auto sig_for_expired = sign_bytes(ticket.priv, *canonical_bytes(expired));
  expired.trailer = SecurityTrailer{ticket.at.at_id,
                                    {sig_for_expired.begin(), sig_for_expired.end()}};
  CHECK(verify_envelope(expired, store, pki.crl(), ItsTimestamp{1000}).code() ==
        Errc::EXPIRED);

  // revocation
  pki.revoke(ticket.at.at_id, ItsTimestamp{2000});
  CHECK(verify_envelope(env, store, pki.crl(), ItsTimestamp{2000}).code() ==
        Errc::REVOKED);
}

TEST_CASE("signing is gated by ticket validity and permitted kinds") {
  Pki pki = Pki::init(17);
  auto ec = pki.enroll(StationId{10}, ItsTimestamp{0});
  REQUIRE(ec.ok());

  auto cam_only = pki.issue_tickets(*ec, 1, ItsTimestamp{0}, {MsgKind::CAM});
  REQUIRE(cam_only.ok());
  Envelope env = cam_envelope(10, 100);
  CHECK(sign_envelope(env, (*cam_only)[0], ItsTimestamp{100}).ok());

  Denm denm;
  denm.station = StationId{10};
  denm.ts = ItsTimestamp{100};
  denm.event_pos = kPos;
  denm.relevance_radius_m = 100;
  denm.validity_ms = 1000;
  Envelope denm_env = Envelope::make(MsgId::make(StationId{10}, 77), StationId{10},
                                     ItsTimestamp{100}, denm);
  CHECK(sign_envelope(denm_env, (*cam_only)[0], ItsTimestamp{100}).code() ==
        Errc::KIND_NOT_PERMITTED);

  CHECK(sign_envelope(env, (*cam_only)[0],
                      ItsTimestamp{(*cam_only)[0].at.valid_to.millis})
            .code() == Errc::AT_EXPIRED);

  // a signed-but-not-permitted envelope is rejected by the verifier too
  auto forced = sign_bytes((*cam_only)[0].priv, *canonical_bytes(denm_env));
  denm_env.trailer =
      SecurityTrailer{(*cam_only)[0].at.at_id, {forced.begin(), forced.end()}};
  CHECK(verify_envelope(denm_env, pki.trust_store(), pki.crl(), ItsTimestamp{100})
            .code() == Errc::KIND_NOT_PERMITTED);
}

TEST_CASE("pseudonym rotation follows half-open windows") {
  Pki pki = Pki::init(19);
  auto ec = pki.enroll(StationId{10}, ItsTimestamp{0});
  REQUIRE(ec.ok());
  auto tickets = pki.issue_tickets(*ec, 3, ItsTimestamp{0});
  REQUIRE(tickets.ok());
  PseudonymPool pool(*tickets);
  uint64_t w = pki.ticket_validity_ms();

  auto first = pool.active(ItsTimestamp{0});
  REQUIRE(first.ok());
  CHECK((*first)->at.at_id == (*tickets)[0].at.at_id);

  auto mid = pool.active(ItsTimestamp{w - 1});
  REQUIRE(mid.ok());
  CHECK((*mid)->at.at_id == (*tickets)[0].at.at_id);

  // exact boundary belongs to the next ticket
  auto boundary = pool.active(ItsTimestamp{w});
  REQUIRE(boundary.ok());
  CHECK((*boundary)->at.at_id == (*tickets)[1].at.at_id);

  CHECK(pool.active(ItsTimestamp{3 * w}).code() == Errc::POOL_EXHAUSTED);
  CHECK(PseudonymPool{}.active(ItsTimestamp{0}).code() == Errc::POOL_EXHAUSTED);
}

TEST_CASE("linkability requires the right and reconstructs the partition") {
  Pki pki = Pki::init(23);
  auto ec_a = pki.enroll(StationId{10}, ItsTimestamp{0});
  auto ec_b = pki.enroll(StationId{11}, ItsTimestamp{0});
  REQUIRE(ec_a.ok());
  REQUIRE(ec_b.ok());
  auto tickets_a = pki.issue_tickets(*ec_a, 2, ItsTimestamp{0});
  auto tickets_b = pki.issue_tickets(*ec_b, 1, ItsTimestamp{0});
  REQUIRE(tickets_a.ok());
  REQUIRE(tickets_b.ok());

  auto token = pki.issue_token("auditor", {kRightLinkability}, ItsTimestamp{0}, 60'000);
  REQUIRE(token.ok());

  std::vector<uint64_t> pseudonyms = {(*tickets_a)[0].at.at_id,
                                      (*tickets_b)[0].at.at_id,
                                      (*tickets_a)[1].at.at_id, 0xFFFF};
  auto partition = pki.link(pseudonyms, *token, ItsTimestamp{1});
  REQUIRE(partition.ok());
  REQUIRE(partition->size() == 3);

  size_t linked_groups = 0;
  for (const auto& group : *partition) {
    if (group.ec_id == ec_a->ec_id) {
      ++linked_groups;
      CHECK(group.pseudonyms.size() == 2);
    } else if (group.ec_id == ec_b->ec_id) {
      ++linked_groups;
      CHECK(group.pseudonyms.size() == 1);
    } else {
      CHECK(!group.ec_id.has_value());
      CHECK(group.pseudonyms == std::vector<uint64_t>{0xFFFF});
    }
  }
  CHECK(linked_groups == 2);

  auto weak_token = pki.issue_token("nobody", {"REPORTS"}, ItsTimestamp{0}, 60'000);
  REQUIRE(weak_token.ok());
  CHECK(pki.link(pseudonyms, *weak_token, ItsTimestamp{1}).code() == Errc::UNAUTHORIZED);
}

TEST_CASE("access tokens authorize by right and expiry") {
  Pki pki = Pki::init(29);
  auto token = pki.issue_token("ops", {kRightLinkability, "REPORTS"}, ItsTimestamp{0},
                               10'000);
  REQUIRE(token.ok());

  CHECK(pki.authorize(*token, kRightLinkability, ItsTimestamp{5000}).allow);
  CHECK(pki.authorize(*token, "REPORTS", ItsTimestamp{5000}).allow);

  auto denied = pki.authorize(*token, "ADMIN", ItsTimestamp{5000});
  CHECK(!denied.allow);
  CHECK(denied.reason == Errc::UNAUTHORIZED);

  auto expired = pki.authorize(*token, "REPORTS", ItsTimestamp{10'000});
  CHECK(!expired.allow);
  CHECK(expired.reason == Errc::EXPIRED);

  AccessToken tampered = *token;
  tampered.rights.insert("ADMIN");
  auto forged = pki.authorize(tampered, "ADMIN", ItsTimestamp{5000});
  CHECK(!forged.allow);
  CHECK(forged.reason == Errc::BAD_SIGNATURE);

  CHECK(!pki.issue_token("x", {}, ItsTimestamp{0}, 1000).ok());
}
