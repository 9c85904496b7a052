#pragma once

#include <string>
#include <variant>
#include <vector>

#include "wfc/safe_functions.hpp"
#include "wfc/unify.hpp"

namespace wfc {

// A rated value is either a concrete atom of the send or a variable block.
using Subject = std::variant<Atom, Variable>;

std::string display(const Subject& s);

// Rating of the subject in the static part of a single message.
SecurityLevel upper_bound(FunctionSelector sel, const Subject& subject, const TermPtr& m,
                          const TypingContext& ctx);

// Meet of the subject's rating over every origin of m; origins where the
// subject does not appear contribute nothing.
SecurityLevel lower_bound(FunctionSelector sel, const Subject& subject, const TermPtr& m,
                          const GeneralizedMessageSet& mset, const TypingContext& ctx);

// Right-hand side of the compliance inequality: declared level of the
// subject, met with the upper bounds over the receive prefix. A subject
// without a declared level contributes nothing and is flagged; the verdict
// then holds for every possible level.
struct Rhs {
  SecurityLevel level;
  bool includes_unknown = false;
};

enum class Verdict { ok, violation, vacuous };

std::string to_string(Verdict v);

struct StepVerdict {
  std::string role;
  Subject subject;
  std::vector<TermPtr> received;  // full receive prefix before the send
  TermPtr sent;
  SecurityLevel lower;
  Rhs rhs;
  Verdict verdict = Verdict::ok;
  std::vector<std::string> notes;
};

struct AnalysisReport {
  std::string protocol;
  FunctionSelector selector = FunctionSelector::max;
  std::vector<StepVerdict> rows;
  bool secure = true;  // every row Ok or Vacuous
};

// One compliance row: Ok iff the lower bound on the sent side dominates the
// rhs, Vacuous iff the rhs is already public. A missing key level turns into
// a Violation row carrying the diagnostic instead of an exception.
StepVerdict check_step(const GeneralizedRole& role, std::size_t send_index,
                       const Subject& subject, FunctionSelector sel, const TypingContext& ctx,
                       const GeneralizedMessageSet& mset);

// Rates the final send of every send-ending generalized role, one row per
// rated value: the send's variables in occurrence order, then its atoms
// excluding principal identities and keys that only ever sit in key position,
// then variables of the receive prefix not already covered.
AnalysisReport analyze(const Protocol& p, FunctionSelector sel);
AnalysisReport analyze(const Protocol& p, FunctionSelector sel, const TypingContext& ctx);

std::string render_table(const AnalysisReport& r);
std::string to_json(const AnalysisReport& r);

}  // namespace wfc
