#include "v2x/trace.hpp"

#include "v2x/bytes.hpp"

namespace v2x {

void TraceLog::record(const nlohmann::json& event) {
  std::string line = event.dump();
  m_hash = fnv1a(line, m_hash);
  m_hash = fnv1a(std::string("\n"), m_hash);
  m_lines.push_back(std::move(line));
}

std::vector<nlohmann::json> TraceLog::parsed() const {
  std::vector<nlohmann::json> out;
  out.reserve(m_lines.size());
  for (const auto& line : m_lines) out.push_back(nlohmann::json::parse(line));
  return out;
}

}  // namespace v2x
