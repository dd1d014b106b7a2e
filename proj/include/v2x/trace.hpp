#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace v2x {

/// Ordered run log. Records are serialized immediately (nlohmann keeps object
/// keys sorted), so the byte stream and its hash are reproducible.
class TraceLog {
 public:
  void record(const nlohmann::json& event);

  const std::vector<std::string>& lines() const { return m_lines; }
  size_t size() const { return m_lines.size(); }

  /// FNV-1a over all lines; equal runs produce equal hashes.
  uint64_t determinism_hash() const { return m_hash; }

  /// Parsed view for analysis (tests, summary metrics).
  std::vector<nlohmann::json> parsed() const;

 private:
  std::vector<std::string> m_lines;
  uint64_t m_hash = 0xcbf29ce484222325ull;
};

/// Run-level invariant bookkeeping. Any recorded violation makes the CLI
/// exit with code 2.
struct Audit {
  uint64_t violations = 0;
  std::vector<std::string> notes;

  void violation(std::string note) {
    ++violations;
    notes.push_back(std::move(note));
  }
};

}  // namespace v2x
