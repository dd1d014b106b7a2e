#include "v2x/security.hpp"

#include <sodium.h>

#include <algorithm>
#include <mutex>

#include "v2x/bytes.hpp"

namespace v2x {

namespace {

void ensure_sodium() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (sodium_init() < 0) std::abort();
  });
}

}  // namespace

KeyPair generate_keypair(Rng& rng) {
  ensure_sodium();
  auto seed = rng.seed_bytes();
  KeyPair kp;
  crypto_sign_seed_keypair(kp.pub.bytes.data(), kp.priv.bytes.data(), seed.data());
  return kp;
}

Signature sign_bytes(const PrivateKey& key, std::span<const uint8_t> message) {
  ensure_sodium();
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                       key.bytes.data());
  return sig;
}

bool verify_bytes(const PublicKey& key, std::span<const uint8_t> message,
                  std::span<const uint8_t> signature) {
  ensure_sodium();
  if (signature.size() != crypto_sign_BYTES) return false;
  return crypto_sign_verify_detached(signature.data(), message.data(),
                                     message.size(), key.bytes.data()) == 0;
}

std::vector<uint8_t> cert_tbs(const Certificate& cert) {
  ByteWriter w;
  w.u64(cert.cert_id);
  w.u8(static_cast<uint8_t>(cert.role));
  w.raw(cert.pubkey.bytes);
  w.u64(cert.valid_from.millis);
  w.u64(cert.valid_to.millis);
  w.u64(cert.issuer_id);
  return w.take();
}

std::vector<uint8_t> ec_tbs(const EnrolmentCredential& ec) {
  ByteWriter w;
  w.u64(ec.ec_id);
  w.u32(ec.canonical_station.value);
  w.raw(ec.pubkey.bytes);
  w.u64(ec.valid_from.millis);
  w.u64(ec.valid_to.millis);
  return w.take();
}

std::vector<uint8_t> at_tbs(const AuthorizationTicket& at) {
  ByteWriter w;
  w.u64(at.at_id);
  w.raw(at.pubkey.bytes);
  w.u8(static_cast<uint8_t>(at.permitted.size()));
  for (MsgKind kind : at.permitted) w.u8(static_cast<uint8_t>(kind));
  w.u64(at.valid_from.millis);
  w.u64(at.valid_to.millis);
  w.u64(at.issuer_id);
  return w.take();
}

std::vector<uint8_t> token_tbs(const AccessToken& token) {
  ByteWriter w;
  w.u16(static_cast<uint16_t>(token.subject.size()));
  w.raw(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(token.subject.data()), token.subject.size()));
  w.u16(static_cast<uint16_t>(token.rights.size()));
  for (const auto& right : token.rights) {
    w.u16(static_cast<uint16_t>(right.size()));
    w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(right.data()),
                                   right.size()));
  }
  w.u64(token.expiry.millis);
  return w.take();
}

Result<void> TrustStore::check_authority(const Certificate& cert) const {
  const Certificate* issuer = nullptr;
  if (cert.role == CertRole::ROOT)
    issuer = &root;
  else if (cert.issuer_id == root.cert_id)
    issuer = &root;
  if (issuer == nullptr)
    return Error{Errc::CHAIN_INVALID, "certificate issuer unknown"};
  if (!verify_bytes(issuer->pubkey, cert_tbs(cert), cert.signature))
    return Error{Errc::CHAIN_INVALID, "certificate signature invalid"};
  if (cert.role != CertRole::ROOT) {
    if (!verify_bytes(root.pubkey, cert_tbs(root), root.signature))
      return Error{Errc::CHAIN_INVALID, "root certificate invalid"};
  }
  return {};
}

const AuthorizationTicket* TrustStore::find_at(uint64_t at_id) const {
  auto it = at_directory.find(at_id);
  return it == at_directory.end() ? nullptr : &it->second;
}

Pki::Pki(uint64_t seed) : m_rng(seed) {}

Pki Pki::init(uint64_t seed) {
  ensure_sodium();
  Pki pki(seed);
  pki.m_root_keys = generate_keypair(pki.m_rng);
  pki.m_ea_keys = generate_keypair(pki.m_rng);
  pki.m_aa_keys = generate_keypair(pki.m_rng);
  pki.m_ua_keys = generate_keypair(pki.m_rng);

  // Authority lifetime far beyond any run; runs are desk-scale.
  ItsTimestamp from{0};
  ItsTimestamp to{365ull * 24 * 3600 * 1000};

  auto make_cert = [&](CertRole role, const PublicKey& pub, uint64_t issuer_id,
                       const PrivateKey& issuer_key) {
    Certificate cert;
    cert.cert_id = pki.m_rng.u64();
    cert.role = role;
    cert.pubkey = pub;
    cert.valid_from = from;
    cert.valid_to = to;
    cert.issuer_id = issuer_id;
    cert.signature = sign_bytes(issuer_key, cert_tbs(cert));
    return cert;
  };

  Certificate root;
  root.cert_id = pki.m_rng.u64();
  root.role = CertRole::ROOT;
  root.pubkey = pki.m_root_keys.pub;
  root.valid_from = from;
  root.valid_to = to;
  root.issuer_id = root.cert_id;  // self-signed
  root.signature = sign_bytes(pki.m_root_keys.priv, cert_tbs(root));
  pki.m_store.root = root;

  pki.m_store.ea =
      make_cert(CertRole::EA, pki.m_ea_keys.pub, root.cert_id, pki.m_root_keys.priv);
  pki.m_store.aa =
      make_cert(CertRole::AA, pki.m_aa_keys.pub, root.cert_id, pki.m_root_keys.priv);
  pki.m_store.ua =
      make_cert(CertRole::UA, pki.m_ua_keys.pub, root.cert_id, pki.m_root_keys.priv);
  return pki;
}

Result<EnrolmentCredential> Pki::enroll(StationId station, ItsTimestamp now) {
  if (m_deactivated.count(station.value))
    return Error{Errc::STATION_REVOKED, "station deactivated by administrator"};

  EnrolmentCredential ec;
  ec.ec_id = m_rng.u64();
  ec.canonical_station = station;
  ec.pubkey = generate_keypair(m_rng).pub;
  ec.valid_from = now;
  ec.valid_to = ItsTimestamp{now.millis + m_ec_validity_ms};
  ec.issuer_sig = sign_bytes(m_ea_keys.priv, ec_tbs(ec));
  m_directory[ec.ec_id] = EcRecord{ec};
  return ec;
}

Result<std::vector<IssuedTicket>> Pki::issue_tickets(const EnrolmentCredential& ec,
                                                     size_t n, ItsTimestamp now,
                                                     std::set<MsgKind> permitted) {
  if (!verify_bytes(m_store.ea.pubkey, ec_tbs(ec), ec.issuer_sig))
    return Error{Errc::EC_INVALID, "enrolment credential signature invalid"};
  if (now < ec.valid_from || now >= ec.valid_to)
    return Error{Errc::EC_INVALID, "enrolment credential expired"};
  if (m_crl.contains(ec.ec_id))
    return Error{Errc::EC_REVOKED, "enrolment credential revoked"};
  if (m_deactivated.count(ec.canonical_station.value))
    return Error{Errc::EC_REVOKED, "station deactivated"};

  std::vector<IssuedTicket> out;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    IssuedTicket issued;
    KeyPair keys = generate_keypair(m_rng);
    issued.priv = keys.priv;
    AuthorizationTicket& at = issued.at;
    at.at_id = m_rng.u64();
    at.pubkey = keys.pub;
    at.permitted = permitted;
    at.valid_from = ItsTimestamp{now.millis + k * m_ticket_validity_ms};
    at.valid_to = ItsTimestamp{now.millis + (k + 1) * m_ticket_validity_ms};
    at.issuer_id = m_store.aa.cert_id;
    at.issuer_sig = sign_bytes(m_aa_keys.priv, at_tbs(at));

    m_store.at_directory[at.at_id] = at;
    m_escrow[at.at_id] = ec.ec_id;
    out.push_back(std::move(issued));
  }
  return out;
}

void Pki::revoke(uint64_t cert_id, ItsTimestamp now) {
  m_crl.revoked.insert(cert_id);
  m_crl.issued_at = now;
}

Result<LinkPartition> Pki::link(const std::vector<uint64_t>& pseudonyms,
                                const AccessToken& token, ItsTimestamp now) const {
  AuthzDecision decision = authorize(token, kRightLinkability, now);
  if (!decision.allow)
    return Error{Errc::UNAUTHORIZED, "token lacks LINKABILITY or is invalid"};

  std::map<uint64_t, LinkGroup> by_ec;
  std::vector<LinkGroup> singletons;
  for (uint64_t at_id : pseudonyms) {
    auto it = m_escrow.find(at_id);
    if (it == m_escrow.end()) {
      singletons.push_back(LinkGroup{std::nullopt, {at_id}});
    } else {
      LinkGroup& group = by_ec[it->second];
      group.ec_id = it->second;
      group.pseudonyms.push_back(at_id);
    }
  }

  LinkPartition partition;
  for (auto& [ec_id, group] : by_ec) {
    std::sort(group.pseudonyms.begin(), group.pseudonyms.end());
    partition.push_back(std::move(group));
  }
  std::sort(singletons.begin(), singletons.end(),
            [](const LinkGroup& a, const LinkGroup& b) {
              return a.pseudonyms.front() < b.pseudonyms.front();
            });
  for (auto& g : singletons) partition.push_back(std::move(g));
  return partition;
}

Result<AccessToken> Pki::issue_token(const std::string& subject,
                                     std::set<std::string> rights, ItsTimestamp now,
                                     uint64_t validity_ms) {
  if (rights.empty())
    return Error{Errc::INVALID_FIELD, "token rights must be non-empty"};
  AccessToken token;
  token.subject = subject;
  token.rights = std::move(rights);
  token.expiry = ItsTimestamp{now.millis + validity_ms};
  token.signature = sign_bytes(m_ua_keys.priv, token_tbs(token));
  return token;
}

AuthzDecision Pki::authorize(const AccessToken& token, const std::string& action,
                             ItsTimestamp now) const {
  if (!verify_bytes(m_store.ua.pubkey, token_tbs(token), token.signature))
    return {false, Errc::BAD_SIGNATURE};
  if (now >= token.expiry) return {false, Errc::EXPIRED};
  if (!token.rights.count(action)) return {false, Errc::UNAUTHORIZED};
  return {true, Errc::UNAUTHORIZED};
}

Result<SecurityTrailer> sign_envelope(const Envelope& envelope,
                                      const IssuedTicket& ticket, ItsTimestamp now) {
  const AuthorizationTicket& at = ticket.at;
  if (now < at.valid_from || now >= at.valid_to)
    return Error{Errc::AT_EXPIRED, "ticket not valid at signing time"};
  if (!at.permitted.count(envelope.kind))
    return Error{Errc::KIND_NOT_PERMITTED,
                 std::string("ticket does not permit ") + msg_kind_name(envelope.kind)};

  auto body = canonical_bytes(envelope);
  if (!body) return body.error();

  SecurityTrailer trailer;
  trailer.at_id = at.at_id;
  Signature sig = sign_bytes(ticket.priv, *body);
  trailer.signature.assign(sig.begin(), sig.end());
  return trailer;
}

Result<void> verify_envelope(const Envelope& envelope, const TrustStore& store,
                             const Crl& crl, ItsTimestamp) {
  if (!envelope.trailer.has_value())
    return Error{Errc::BAD_SIGNATURE, "no security trailer"};
  const SecurityTrailer& trailer = *envelope.trailer;

  const AuthorizationTicket* at = store.find_at(trailer.at_id);
  if (at == nullptr)
    return Error{Errc::CHAIN_INVALID, "unknown authorization ticket"};

  auto body = canonical_bytes(envelope);
  if (!body) return body.error();
  if (!verify_bytes(at->pubkey, *body, trailer.signature))
    return Error{Errc::BAD_SIGNATURE, "trailer signature invalid"};

  if (at->issuer_id != store.aa.cert_id ||
      !verify_bytes(store.aa.pubkey, at_tbs(*at), at->issuer_sig))
    return Error{Errc::CHAIN_INVALID, "ticket does not chain to AA"};
  if (auto chain = store.check_authority(store.aa); !chain) return chain.error();

  if (envelope.generation_time < at->valid_from ||
      envelope.generation_time >= at->valid_to)
    return Error{Errc::EXPIRED, "ticket window does not contain generation time"};
  if (crl.contains(at->at_id))
    return Error{Errc::REVOKED, "ticket revoked"};
  if (!at->permitted.count(envelope.kind))
    return Error{Errc::KIND_NOT_PERMITTED, "kind not permitted by ticket"};
  return {};
}

Result<const IssuedTicket*> PseudonymPool::active(ItsTimestamp now) const {
  for (const auto& issued : m_tickets)
    if (now >= issued.at.valid_from && now < issued.at.valid_to) return &issued;
  return Error{Errc::POOL_EXHAUSTED, "no ticket window contains now"};
}

}  // namespace v2x
