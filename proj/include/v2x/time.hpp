#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

#include "v2x/messages.hpp"

namespace v2x {

/// Microseconds since run start. The event loop never observes it decreasing.
struct SimTime {
  uint64_t micros = 0;

  static constexpr SimTime from_us(uint64_t us) { return {us}; }
  static constexpr SimTime from_ms(uint64_t ms) { return {ms * 1000}; }

  constexpr uint64_t to_ms() const { return micros / 1000; }
  ItsTimestamp to_its() const { return ItsTimestamp{micros / 1000}; }

  constexpr SimTime plus_us(uint64_t us) const { return {micros + us}; }
  constexpr SimTime plus_ms(uint64_t ms) const { return {micros + ms * 1000}; }
  SimTime plus_ms(double ms) const {
    return {micros + static_cast<uint64_t>(std::llround(ms * 1000.0))};
  }

  friend auto operator<=>(const SimTime&, const SimTime&) = default;
};

}  // namespace v2x
