#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wfc/lattice.hpp"
#include "wfc/term.hpp"

namespace wfc {

struct KeyDecl {
  std::string name;
  std::string inverse;  // == name for symmetric keys
  SecurityLevel level;
  bool symmetric = true;
  int line = 0;
};

struct FreshDecl {
  std::string name;
  Sort sort = Sort::nonce;
  std::string by;
  SecurityLevel level;  // BOT when declared public
  int line = 0;
};

struct Step {
  int index = 0;
  std::string sender;
  std::string receiver;
  TermPtr payload;
  int line = 0;
};

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  int line = 0;
  int col = 0;
  std::string message;
  std::string display() const;
};

struct Protocol {
  std::string name;
  std::vector<std::string> agents;
  std::vector<KeyDecl> keys;
  std::vector<FreshDecl> fresh;
  // Explicit knowledge overrides: replaces the agent's default long-term key
  // knowledge (identities always stay known). "I" names the intruder.
  std::map<std::string, std::vector<std::string>> knows;
  std::vector<Step> steps;
  std::vector<Atom> secrets;

  bool is_agent(const std::string& n) const;
  const KeyDecl* find_key(const std::string& n) const;
  const FreshDecl* find_fresh(const std::string& n) const;
  std::optional<Atom> atom_for(const std::string& n) const;  // untagged
  TypingContext context() const;
  std::set<Atom> initial_knowledge(const std::string& agent) const;
};

struct ParseResult {
  std::optional<Protocol> protocol;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return protocol.has_value(); }
};

ParseResult parse(std::string_view text);
ParseResult parse_file(const std::string& path);

// Structural checks beyond syntax: declaration consistency, step ordering,
// fresh values first occurring in a message their generator sends, secrets
// carrying a non-public level (warning otherwise).
std::vector<Diagnostic> validate(const Protocol& p);

std::string render(const Protocol& p);

// Parses a term against the protocol's declarations: declared names resolve
// to sorted atoms (fresh ones get the session index), unknown identifiers
// become variables, key-constrained when they sit in a key slot.
// Throws std::invalid_argument on syntax errors.
TermPtr parse_term_in(const Protocol& p, std::string_view text);

}  // namespace wfc
