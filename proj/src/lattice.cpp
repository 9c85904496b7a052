#include "wfc/lattice.hpp"

#include <algorithm>
#include <sstream>

namespace wfc {

SecurityLevel SecurityLevel::bottom() { return SecurityLevel{}; }

SecurityLevel SecurityLevel::top() {
  SecurityLevel l;
  l.kind_ = Kind::top;
  return l;
}

SecurityLevel SecurityLevel::of(std::set<std::string> names) {
  if (names.empty()) return top();
  SecurityLevel l;
  l.kind_ = Kind::finite;
  l.names_ = std::move(names);
  return l;
}

std::string SecurityLevel::display() const {
  if (is_bottom()) return "BOT";
  if (is_top()) return "TOP";
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& n : names_) {
    os << (first ? "" : ",") << n;
    first = false;
  }
  os << "}";
  return os.str();
}

SecurityLevel meet(const SecurityLevel& a, const SecurityLevel& b) {
  if (a.is_bottom() || b.is_bottom()) return SecurityLevel::bottom();
  if (a.is_top()) return b;
  if (b.is_top()) return a;
  std::set<std::string> u = a.principals();
  u.insert(b.principals().begin(), b.principals().end());
  return SecurityLevel::of(std::move(u));
}

SecurityLevel join(const SecurityLevel& a, const SecurityLevel& b) {
  if (a.is_top() || b.is_top()) return SecurityLevel::top();
  if (a.is_bottom()) return b;
  if (b.is_bottom()) return a;
  std::set<std::string> i;
  std::set_intersection(a.principals().begin(), a.principals().end(),
                        b.principals().begin(), b.principals().end(),
                        std::inserter(i, i.begin()));
  return SecurityLevel::of(std::move(i));
}

bool geq(const SecurityLevel& a, const SecurityLevel& b) {
  if (b.is_bottom()) return true;
  if (a.is_top()) return true;
  if (a.is_bottom() || b.is_top()) return false;
  return std::includes(b.principals().begin(), b.principals().end(),
                       a.principals().begin(), a.principals().end());
}

bool set_geq(const std::vector<SecurityLevel>& levels, const SecurityLevel& b) {
  for (const auto& l : levels)
    if (geq(l, b)) return true;
  return false;
}

std::optional<SecurityLevel> TypingContext::level_of(const Atom& a) const {
  auto it = levels.find(a.name);
  if (it != levels.end()) return it->second;
  if (a.sort == Sort::principal) return SecurityLevel::bottom();
  return std::nullopt;
}

std::optional<SecurityLevel> TypingContext::level_of_inverse(const Atom& key) const {
  return level_of(keys.inverse(key));
}

std::vector<SecurityLevel> TypingContext::intruder_levels() const {
  std::vector<SecurityLevel> out;
  out.reserve(principals.size() + intruder_atoms.size());
  for (std::size_t i = 0; i < principals.size(); ++i) out.push_back(SecurityLevel::bottom());
  for (const Atom& a : intruder_atoms) {
    auto l = level_of(a);
    out.push_back(l ? *l : SecurityLevel::bottom());
  }
  return out;
}

}  // namespace wfc
