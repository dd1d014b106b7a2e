#pragma once

#include <cassert>
#include <string>
#include <utility>
#include <variant>

namespace v2x {

/// Error codes shared by all modules. Names are part of the tool output
/// (diagnostics, event log) and stable.
enum class Errc {
  INVALID_FIELD,
  TRUNCATED,
  BAD_MAGIC,
  UNKNOWN_KIND,
  TIME_IN_PAST,
  DEST_NOT_ATTACHED,
  NO_CHANNEL_MEETS_QOS,
  SENDER_UNKNOWN,
  EXPIRED,
  NO_BROKER_FOR_POSITION,
  UNKNOWN_STATION,
  WRONG_SOURCE,
  TOO_FAR,
  OUT_OF_REGION,
  STATION_REVOKED,
  EC_INVALID,
  EC_REVOKED,
  AT_EXPIRED,
  KIND_NOT_PERMITTED,
  BAD_SIGNATURE,
  CHAIN_INVALID,
  REVOKED,
  UNAUTHORIZED,
  POOL_EXHAUSTED,
  SCENARIO_INVALID,
};

const char* errc_name(Errc code);

struct Error {
  Errc code;
  std::string message;
};

/// Minimal expected-style result. Holds either a value or an Error.
template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : m_state(std::move(value)) {}
  Result(Error err) : m_state(std::move(err)) {}
  Result(Errc code, std::string message = {})
      : m_state(Error{code, std::move(message)}) {}

  bool ok() const { return std::holds_alternative<T>(m_state); }
  explicit operator bool() const { return ok(); }

  T& value() {
    assert(ok());
    return std::get<T>(m_state);
  }
  const T& value() const {
    assert(ok());
    return std::get<T>(m_state);
  }
  T& operator*() { return value(); }
  const T& operator*() const { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

  const Error& error() const {
    assert(!ok());
    return std::get<Error>(m_state);
  }
  Errc code() const { return error().code; }

 private:
  std::variant<T, Error> m_state;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() = default;
  Result(Error err) : m_error(std::move(err)), m_failed(true) {}
  Result(Errc code, std::string message = {})
      : m_error{code, std::move(message)}, m_failed(true) {}

  bool ok() const { return !m_failed; }
  explicit operator bool() const { return ok(); }

  const Error& error() const {
    assert(m_failed);
    return m_error;
  }
  Errc code() const { return error().code; }

 private:
  Error m_error{};
  bool m_failed = false;
};

}  // namespace v2x
