#pragma once

#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "wfc/analysis.hpp"

namespace wfc {

struct ResourceBound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// How a knowledge element was obtained; premises point at other elements.
struct Derivation {
  enum class Rule { given, split_left, split_right, decrypt, pair, encrypt };
  Rule rule = Rule::given;
  TermPtr first, second;
  int round = 0;
};

struct Knowledge {
  std::map<TermPtr, Derivation, TermPtrLess> terms;

  bool contains(const TermPtr& t) const { return terms.count(t) > 0; }
  void add(TermPtr t) { terms.emplace(std::move(t), Derivation{}); }
  static Knowledge of(const std::vector<TermPtr>& ts);
};

// Saturation under pair-split, decrypt-with-known-inverse, and composition
// (pairing, encryption with a known key) for `depth` rounds or until a
// fixpoint. Composition only builds terms already present as subterms of the
// initial knowledge, which keeps the set finite; decomposition is
// unrestricted. Throws ResourceBound past `cap` elements. The two variants
// compute identical results; the parallel one fans each round out over
// OpenMP threads.
Knowledge closure_serial(const Knowledge& m, const KeyTable& keys, int depth,
                         std::size_t cap = 20000);
Knowledge closure_parallel(const Knowledge& m, const KeyTable& keys, int depth,
                           std::size_t cap = 20000);
Knowledge closure(const Knowledge& m, const KeyTable& keys, int depth, std::size_t cap = 20000);

// The protocol's step payloads with fresh values pinned to one concrete run.
std::vector<TermPtr> concrete_messages(const Protocol& p, int run = 1);

struct InvariantCounterexample {
  TermPtr m;
  Atom alpha;
  SecurityLevel on_m;
  SecurityLevel on_set;
};

// Rates (alpha, messages) as one level; lets tests swap in a deliberately
// broken function.
using Rater = std::function<SecurityLevel(const Atom&, const std::vector<TermPtr>&)>;

// Empirical check that deduction cannot lower the rating of any atom the
// intruder was not meant to read: every m derivable from M (plus the
// intruder's own atoms) must rate every contained atom at least as high as M
// does, unless the intruder's initial knowledge already dominates that atom's
// declared level.
std::vector<InvariantCounterexample> check_invariant_by_intruder(
    const Rater& rate, const std::vector<TermPtr>& M, const TypingContext& ctx, int depth,
    std::size_t cap = 20000);
std::vector<InvariantCounterexample> check_invariant_by_intruder(
    FunctionSelector sel, const std::vector<TermPtr>& M, const TypingContext& ctx, int depth,
    std::size_t cap = 20000);

struct SimOptions {
  int sessions = 2;
  int depth = 4;  // receive rounds explored breadth-first
  std::size_t cap = 20000;
  int candidates_per_receive = 16;
  std::size_t state_budget = 5000;
};

struct SimResult {
  std::size_t states = 0;
  std::set<Atom> leaked;  // concrete run-tagged secret atoms seen in clear
  bool truncated = false;
};

// Bounded Dolev-Yao exploration: all sessions of every agent interleaved, the
// network fully intruder-controlled. Sends fire eagerly (they only add
// knowledge); receives branch over deliverable instances of the expected
// pattern, synthesized from the current knowledge closure. A declared secret
// entering the closure in clear is reported as leaked. Exceeding the state
// budget only truncates the search; exceeding the knowledge cap throws
// ResourceBound.
SimResult simulate(const Protocol& p, const SimOptions& opt = {});

}  // namespace wfc
