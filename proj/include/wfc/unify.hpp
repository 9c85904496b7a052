#pragma once

#include <optional>
#include <vector>

#include "wfc/roles.hpp"

namespace wfc {

// Most general unifier under the sort discipline, or nullopt. Bindable
// symbols are Variables and parameter (instance-tagged) atoms; a parameter
// stands for a single atom of identical sort and session marker, a
// key-constrained Variable for key material, an unconstrained Variable for
// any term. Occurs check enforced; on rigidity ties the first argument's
// symbol is bound to the second's.
std::optional<Substitution> unify(const TermPtr& a, const TermPtr& b);

struct Origin {
  TermPtr entry;
  Substitution mgu;
};

// Entries unifiable with the query, in entry order, each with the mgu of
// unify(entry, query). Entries that are a bare variable unify with anything;
// they are reported only for atomic queries (atoms and variables), where the
// queried value itself may travel unprotected at the top level of a message.
std::vector<Origin> origins(const TermPtr& query, const GeneralizedMessageSet& mset);

}  // namespace wfc
