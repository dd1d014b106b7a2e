#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "v2x/messages.hpp"
#include "v2x/rng.hpp"
#include "v2x/time.hpp"

namespace v2x {

// Signature primitive (Ed25519). Deterministic signing and seeded keypair
// generation keep runs reproducible; everything above this block is
// primitive-agnostic.

struct PublicKey {
  std::array<uint8_t, 32> bytes{};
  friend auto operator<=>(const PublicKey&, const PublicKey&) = default;
};

struct PrivateKey {
  std::array<uint8_t, 64> bytes{};
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

using Signature = std::array<uint8_t, 64>;

KeyPair generate_keypair(Rng& rng);
Signature sign_bytes(const PrivateKey& key, std::span<const uint8_t> message);
bool verify_bytes(const PublicKey& key, std::span<const uint8_t> message,
                  std::span<const uint8_t> signature);

enum class CertRole : uint8_t { ROOT = 0, EA = 1, AA = 2, UA = 3 };

/// Authority certificate. ROOT is self-signed; EA/AA/UA are signed by ROOT.
struct Certificate {
  uint64_t cert_id = 0;
  CertRole role = CertRole::ROOT;
  PublicKey pubkey;
  ItsTimestamp valid_from;
  ItsTimestamp valid_to;
  uint64_t issuer_id = 0;
  Signature signature{};
};

std::vector<uint8_t> cert_tbs(const Certificate& cert);

/// Long-term station identity issued by the Enrolment Authority.
struct EnrolmentCredential {
  uint64_t ec_id = 0;
  StationId canonical_station;
  PublicKey pubkey;
  ItsTimestamp valid_from;
  ItsTimestamp valid_to;
  Signature issuer_sig{};  // by EA
};

std::vector<uint8_t> ec_tbs(const EnrolmentCredential& ec);

/// Short-lived pseudonymous certificate used to sign ITS messages. Carries
/// no field derived from the enrolment credential; the at_id -> ec_id map
/// lives only in the linkability escrow.
struct AuthorizationTicket {
  uint64_t at_id = 0;
  PublicKey pubkey;
  std::set<MsgKind> permitted;
  ItsTimestamp valid_from;
  ItsTimestamp valid_to;
  uint64_t issuer_id = 0;  // AA cert id
  Signature issuer_sig{};
};

std::vector<uint8_t> at_tbs(const AuthorizationTicket& at);

/// Ticket plus its private key, held by the owning station only.
struct IssuedTicket {
  AuthorizationTicket at;
  PrivateKey priv;
};

struct Crl {
  std::set<uint64_t> revoked;
  ItsTimestamp issued_at;

  bool contains(uint64_t cert_id) const { return revoked.count(cert_id) > 0; }
};

/// Immutable verification snapshot: authority chain plus the published AT
/// directory (public ticket certificates, no identity linkage).
struct TrustStore {
  Certificate root;
  Certificate ea;
  Certificate aa;
  Certificate ua;
  std::map<uint64_t, AuthorizationTicket> at_directory;

  Result<void> check_authority(const Certificate& cert) const;
  const AuthorizationTicket* find_at(uint64_t at_id) const;
};

struct AccessToken {
  std::string subject;
  std::set<std::string> rights;
  ItsTimestamp expiry;
  Signature signature{};
};

std::vector<uint8_t> token_tbs(const AccessToken& token);

inline constexpr const char* kRightLinkability = "LINKABILITY";

struct LinkGroup {
  std::optional<uint64_t> ec_id;  // absent for unknown pseudonyms
  std::vector<uint64_t> pseudonyms;
};

using LinkPartition = std::vector<LinkGroup>;

struct AuthzDecision {
  bool allow = false;
  Errc reason = Errc::UNAUTHORIZED;  // meaningful when !allow
};

/// PKI authorities (root, enrolment, authorization, user access), the IAM
/// directory, the CRL and the linkability escrow. Deterministic given the
/// init seed.
class Pki {
 public:
  static Pki init(uint64_t seed);

  const TrustStore& trust_store() const { return m_store; }
  const Crl& crl() const { return m_crl; }

  /// STATION_REVOKED when the station was deactivated by the administrator.
  Result<EnrolmentCredential> enroll(StationId station, ItsTimestamp now);

  /// n tickets with consecutive half-open 5-minute windows starting at now,
  /// fresh keypair and random-looking at_id each. Publishes the public AT
  /// certificates and escrows the at->ec mapping. The permitted-kind set is
  /// a format constant shared by every ticket issued with it.
  Result<std::vector<IssuedTicket>> issue_tickets(
      const EnrolmentCredential& ec, size_t n, ItsTimestamp now,
      std::set<MsgKind> permitted = {MsgKind::CAM, MsgKind::DENM, MsgKind::CPM,
                                     MsgKind::SPATEM, MsgKind::MAPEM});

  void deactivate_station(StationId station) { m_deactivated.insert(station.value); }
  void reactivate_station(StationId station) { m_deactivated.erase(station.value); }

  /// Adds a certificate id (EC or AT) to the CRL.
  void revoke(uint64_t cert_id, ItsTimestamp now);

  /// Requires a token carrying the LINKABILITY right. Groups pseudonyms by
  /// escrowed ec_id; unknown pseudonyms come back as singletons.
  Result<LinkPartition> link(const std::vector<uint64_t>& pseudonyms,
                             const AccessToken& token, ItsTimestamp now) const;

  Result<AccessToken> issue_token(const std::string& subject,
                                  std::set<std::string> rights, ItsTimestamp now,
                                  uint64_t validity_ms);
  AuthzDecision authorize(const AccessToken& token, const std::string& action,
                          ItsTimestamp now) const;

  uint64_t ticket_validity_ms() const { return m_ticket_validity_ms; }

 private:
  Pki(uint64_t seed);

  Rng m_rng;
  KeyPair m_root_keys, m_ea_keys, m_aa_keys, m_ua_keys;
  TrustStore m_store;
  Crl m_crl;

  struct EcRecord {
    EnrolmentCredential ec;
  };
  std::map<uint64_t, EcRecord> m_directory;        // IAM: ec_id -> record
  std::map<uint64_t, uint64_t> m_escrow;           // at_id -> ec_id (linkability only)
  std::set<uint32_t> m_deactivated;                // admin-disabled stations
  uint64_t m_ticket_validity_ms = 5 * 60 * 1000;
  uint64_t m_ec_validity_ms = 24ull * 3600 * 1000;
};

/// Signs canonical_bytes of the envelope with the ticket key. AT_EXPIRED if
/// now is outside the ticket window, KIND_NOT_PERMITTED if the kind is not
/// covered.
Result<SecurityTrailer> sign_envelope(const Envelope& envelope,
                                      const IssuedTicket& ticket, ItsTimestamp now);

/// Full chain check: trailer signature over canonical bytes, AT chain to
/// root, AT window contains generation_time, AT not revoked, kind permitted.
Result<void> verify_envelope(const Envelope& envelope, const TrustStore& store,
                             const Crl& crl, ItsTimestamp now);

/// Station-side ticket pool; exactly one ticket is active at a time and
/// rotation happens exactly at window boundaries (half-open windows).
class PseudonymPool {
 public:
  PseudonymPool() = default;
  explicit PseudonymPool(std::vector<IssuedTicket> tickets)
      : m_tickets(std::move(tickets)) {}

  Result<const IssuedTicket*> active(ItsTimestamp now) const;
  const std::vector<IssuedTicket>& tickets() const { return m_tickets; }

 private:
  std::vector<IssuedTicket> m_tickets;
};

}  // namespace v2x
