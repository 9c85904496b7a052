#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "wfc/protocol.hpp"

namespace wfc {

struct RoleEvent {
  enum class Dir { recv, send };
  Dir dir = Dir::send;
  int step_index = 0;
  std::string peer;
  TermPtr pattern;
};

struct GeneralizedRole {
  std::string agent;
  int index = 1;  // 1-based per agent
  std::vector<RoleEvent> events;

  std::string id() const { return agent + "_G^" + std::to_string(index); }
  const RoleEvent& last() const { return events.back(); }
  bool ends_in_send() const {
    return !events.empty() && events.back().dir == RoleEvent::Dir::send;
  }
};

struct ExtractionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-agent protocol views: one role per send step (the prefix up to it) plus
// the agent's complete event sequence when that ends with a receive. Receive
// payloads keep exactly what the agent can verify; everything else becomes a
// fresh variable, reused when the agent later forwards the same content. The
// agent's own fresh values carry the session index. Throws ExtractionError if
// an agent cannot construct one of its sends.
std::vector<GeneralizedRole> extract_roles(const Protocol& p);

std::string render_role(const GeneralizedRole& r);

struct GeneralizedMessageSet {
  std::vector<TermPtr> entries;  // deduplicated, first-occurrence order
  std::vector<TermPtr> raw;      // lifted entries before deduplication
};

// Every sent and received pattern across the protocol, one entry per event,
// atoms lifted to instance-tagged parameters and variables standardized apart
// per entry, deduplicated up to renaming.
GeneralizedMessageSet collect_generalized_messages(const Protocol& p,
                                                   const std::vector<GeneralizedRole>& roles);

// Structural identity up to a bijective renaming of variables and lifted
// parameters; sorts, session markers and concrete atoms must agree.
bool alpha_equivalent(const TermPtr& a, const TermPtr& b);

}  // namespace wfc
