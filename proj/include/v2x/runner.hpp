#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2x/scenario.hpp"
#include "v2x/security.hpp"
#include "v2x/trace.hpp"

namespace v2x {

struct RunOptions {
  std::optional<uint64_t> seed;
  std::optional<double> duration_s;
};

struct RunResult {
  nlohmann::json summary;
  TraceLog trace;
  int exit_code = 0;

  // Post-run audit material: the scenario's ground-truth pseudonym
  // assignment and the PKI/escrow state needed to replay link() against it.
  std::map<uint32_t, std::vector<uint64_t>> station_pseudonyms;
  std::optional<Pki> pki;
  std::optional<AccessToken> linkability_token;
};

/// Executes the full pipeline: PKI init, enrolment and ticket issuance, the
/// simulation loop (vehicle stepping, CAM triggering, hybrid send, G5 and
/// cellular delivery, central forwarding, broker matching, handovers,
/// perception fusion, supervision), then the metrics summary.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

}  // namespace v2x
