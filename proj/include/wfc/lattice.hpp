#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wfc/term.hpp"

namespace wfc {

// Level = set of principals allowed to read; smaller set = higher level.
// Bottom is the whole principal universe (public) and stays symbolic, Top is
// the empty set. A finite level is canonically non-empty.
class SecurityLevel {
 public:
  static SecurityLevel bottom();
  static SecurityLevel top();
  static SecurityLevel of(std::set<std::string> names);

  bool is_bottom() const { return kind_ == Kind::bot; }
  bool is_top() const { return kind_ == Kind::top; }
  bool is_finite() const { return kind_ == Kind::finite; }
  const std::set<std::string>& principals() const { return names_; }

  bool operator==(const SecurityLevel& o) const {
    return kind_ == o.kind_ && names_ == o.names_;
  }
  bool operator!=(const SecurityLevel& o) const { return !(*this == o); }

  std::string display() const;

 private:
  enum class Kind { bot, top, finite };
  Kind kind_ = Kind::bot;
  std::set<std::string> names_;
};

SecurityLevel meet(const SecurityLevel& a, const SecurityLevel& b);  // set union
SecurityLevel join(const SecurityLevel& a, const SecurityLevel& b);  // set intersection
bool geq(const SecurityLevel& a, const SecurityLevel& b);            // subset test

// True iff some element of `levels` dominates `b`; false on an empty set.
bool set_geq(const std::vector<SecurityLevel>& levels, const SecurityLevel& b);

// Declared levels plus the key inverse relation. Levels are keyed by base
// atom name, so lifted parameters and concrete session instances share the
// level of the atom they came from. An undeclared principal-sorted atom is
// public; anything else undeclared has no level (the Unknown marker is a
// disengaged optional, distinct from both Bottom and Top).
struct TypingContext {
  std::map<std::string, SecurityLevel> levels;
  KeyTable keys;
  std::set<std::string> principals;
  std::vector<Atom> intruder_atoms;

  std::optional<SecurityLevel> level_of(const Atom& a) const;
  std::optional<SecurityLevel> level_of_inverse(const Atom& key) const;
  // Levels of everything the intruder initially holds (identities included).
  std::vector<SecurityLevel> intruder_levels() const;
};

}  // namespace wfc
