#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wfc/lattice.hpp"
#include "wfc/term.hpp"

namespace wfc {

enum class FunctionSelector { max, n, ek };

std::string to_string(FunctionSelector sel);
std::optional<FunctionSelector> selector_from_name(const std::string& name);

// A candidate key whose inverse has no declared level cannot be rated.
struct MissingLevel : std::runtime_error {
  explicit MissingLevel(const std::string& key)
      : std::runtime_error("no declared level for the inverse of key '" + key + "'") {}
};

// Removal of a set of variables; the result is normalized, so emptied
// pair and encryption slots collapse away.
TermPtr derive(const TermPtr& m, const std::set<Variable>& remove);

// Keeping an atom removes every variable; keeping a variable removes all the
// others.
TermPtr derive_keep(const TermPtr& m, const Atom& keep);
TermPtr derive_keep(const TermPtr& m, const Variable& keep);

// One protection candidate for one occurrence of the rated value: the key of
// an enclosing encryption together with the principal identities traveling
// under that same encryption.
struct ProtectionSite {
  Path occurrence;
  Atom candidate_key;
  std::set<std::string> neighborhood;
  // A non-protective key encloses this site; the value still counts but the
  // input deserves a second look.
  bool shadowed = false;
};

// For a value of known level, each occurrence contributes the outermost
// enclosing key whose inverse level dominates it, if any. For a value of
// unknown level (a variable block or an undeclared atom), every enclosing
// key of every occurrence is a candidate.
std::vector<ProtectionSite> protective_sites(const Atom& target, const TermPtr& m,
                                             const TypingContext& ctx);
std::vector<ProtectionSite> protective_sites(const Variable& target, const TermPtr& m,
                                             const TypingContext& ctx);

// Rates one value inside one message (or a set of messages, combined by
// meet). No occurrence rates top; an occurrence without any protection site
// rates bottom; otherwise sites combine by meet, each rated as
//   max: inverse-key level ⊓ neighborhood, n: neighborhood, ek: inverse-key level.
SecurityLevel evaluate_F(FunctionSelector sel, const Atom& target, const TermPtr& m,
                         const TypingContext& ctx);
SecurityLevel evaluate_F(FunctionSelector sel, const Variable& target, const TermPtr& m,
                         const TypingContext& ctx);
SecurityLevel evaluate_F(FunctionSelector sel, const Atom& target,
                         const std::vector<TermPtr>& ms, const TypingContext& ctx);
SecurityLevel evaluate_F(FunctionSelector sel, const Variable& target,
                         const std::vector<TermPtr>& ms, const TypingContext& ctx);

// Rates a subject against one origin entry and the mgu tying it to the
// analyzed send. The subject is rated in the entry's static part when the
// unifier places it there; when it only arrives inside the image of one of
// the entry's variables, that variable is rated as an opaque block instead.
// nullopt when the subject does not appear in the entry at all.
std::optional<SecurityLevel> F_on_derivative(FunctionSelector sel, const Atom& subject,
                                             const TermPtr& origin, const Substitution& mgu,
                                             const TypingContext& ctx);
std::optional<SecurityLevel> F_on_derivative(FunctionSelector sel, const Variable& subject,
                                             const TermPtr& origin, const Substitution& mgu,
                                             const TypingContext& ctx);

}  // namespace wfc
