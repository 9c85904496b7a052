#include "wfc/oracle.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wfc {

Knowledge Knowledge::of(const std::vector<TermPtr>& ts) {
  Knowledge k;
  for (const TermPtr& t : ts) k.add(normalize(t));
  return k;
}

namespace {

using TermUniverse = std::unordered_set<TermPtr, TermPtrHash, TermPtrEq>;

void collect_subterms(const TermPtr& t, TermUniverse& out) {
  if (!out.insert(t).second) return;
  if (t->kind() == TermKind::pair || t->kind() == TermKind::enc) {
    collect_subterms(t->left(), out);
    collect_subterms(t->right(), out);
  }
}

struct Candidate {
  TermPtr t;
  Derivation d;
};

// One-step consequences of the elements indexed [begin, end) of `snapshot`
// against the whole snapshot. Composition is kept inside the universe.
void derive_range(const std::vector<TermPtr>& snapshot, std::size_t begin, std::size_t end,
                  const KeyTable& keys, const TermUniverse& universe, int round,
                  std::vector<Candidate>& out) {
  auto known = [&](const TermPtr& t) {
    return std::binary_search(snapshot.begin(), snapshot.end(), t, TermPtrLess{});
  };
  for (std::size_t i = begin; i < end; ++i) {
    const TermPtr& a = snapshot[i];
    if (a->kind() == TermKind::pair) {
      out.push_back({a->left(), {Derivation::Rule::split_left, a, nullptr, round}});
      out.push_back({a->right(), {Derivation::Rule::split_right, a, nullptr, round}});
    }
    if (a->kind() == TermKind::enc && a->key()->kind() == TermKind::atom) {
      TermPtr inv = Term::make(keys.inverse(a->key()->atom()));
      if (known(inv))
        out.push_back({a->body(), {Derivation::Rule::decrypt, a, inv, round}});
    }
    for (const TermPtr& b : snapshot) {
      TermPtr paired = Term::pair_raw(a, b);
      if (universe.count(paired))
        out.push_back({paired, {Derivation::Rule::pair, a, b, round}});
      if (b->kind() == TermKind::atom && b->atom().sort == Sort::key) {
        TermPtr enced = Term::enc_raw(a, b);
        if (universe.count(enced))
          out.push_back({enced, {Derivation::Rule::encrypt, a, b, round}});
      }
    }
  }
}

int premise_rank(const Derivation& d) { return static_cast<int>(d.rule); }

// First-wins insertion over a canonically sorted candidate list keeps the
// result identical however the candidates were produced.
void absorb(Knowledge& k, std::vector<Candidate>& cands, std::size_t cap) {
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    if (int c = compare(x.t, y.t)) return c < 0;
    if (premise_rank(x.d) != premise_rank(y.d)) return premise_rank(x.d) < premise_rank(y.d);
    if (int c = compare(x.d.first, y.d.first)) return c < 0;
    return compare(x.d.second, y.d.second) < 0;
  });
  for (const Candidate& c : cands) {
    if (k.terms.count(c.t)) continue;
    if (k.terms.size() >= cap)
      throw ResourceBound("knowledge exceeded " + std::to_string(cap) + " terms");
    k.terms.emplace(c.t, c.d);
  }
}

template <bool Parallel>
Knowledge closure_impl(const Knowledge& m, const KeyTable& keys, int depth, std::size_t cap) {
  Knowledge k = m;
  TermUniverse universe;
  for (const auto& [t, d] : k.terms) collect_subterms(t, universe);

  for (int round = 1; round <= depth; ++round) {
    std::vector<TermPtr> snapshot;
    snapshot.reserve(k.terms.size());
    for (const auto& [t, d] : k.terms) snapshot.push_back(t);

    std::vector<Candidate> cands;
    if constexpr (Parallel) {
#ifdef _OPENMP
      int chunks = std::max(1, omp_get_max_threads());
#else
      int chunks = 1;
#endif
      std::size_t n = snapshot.size();
      std::vector<std::vector<Candidate>> parts(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
      for (int c = 0; c < chunks; ++c)
        derive_range(snapshot, n * c / chunks, n * (c + 1) / chunks, keys, universe, round,
                     parts[static_cast<std::size_t>(c)]);
      for (auto& part : parts)
        cands.insert(cands.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    } else {
      derive_range(snapshot, 0, snapshot.size(), keys, universe, round, cands);
    }

    std::size_t before = k.terms.size();
    absorb(k, cands, cap);
    if (k.terms.size() == before) break;
  }
  return k;
}

}  // namespace

Knowledge closure_serial(const Knowledge& m, const KeyTable& keys, int depth, std::size_t cap) {
  return closure_impl<false>(m, keys, depth, cap);
}

Knowledge closure_parallel(const Knowledge& m, const KeyTable& keys, int depth, std::size_t cap) {
#ifdef _OPENMP
  return closure_impl<true>(m, keys, depth, cap);
#else
  return closure_impl<false>(m, keys, depth, cap);
#endif
}

Knowledge closure(const Knowledge& m, const KeyTable& keys, int depth, std::size_t cap) {
  return closure_parallel(m, keys, depth, cap);
}

namespace {

TermPtr instantiate_run(const TermPtr& t, int run) {
  switch (t->kind()) {
    case TermKind::atom: {
      const Atom& a = t->atom();
      if (!a.session) return t;
      return Term::make(Atom{a.name, a.sort, false, {}, run});
    }
    case TermKind::pair: {
      TermPtr l = instantiate_run(t->left(), run);
      TermPtr r = instantiate_run(t->right(), run);
      return Term::pair(std::move(l), std::move(r));
    }
    case TermKind::enc: {
      TermPtr b = instantiate_run(t->body(), run);
      TermPtr key = instantiate_run(t->key(), run);
      return Term::enc(std::move(b), std::move(key));
    }
    default:
      return t;
  }
}

}  // namespace

namespace {

// Step payloads carry plain atoms; the fresh declarations decide run scope.
TermPtr pin_fresh(const Protocol& p, const TermPtr& t, int run) {
  switch (t->kind()) {
    case TermKind::atom: {
      const Atom& a = t->atom();
      if (!p.find_fresh(a.name)) return t;
      return Term::make(Atom{a.name, a.sort, false, {}, run});
    }
    case TermKind::pair: {
      TermPtr l = pin_fresh(p, t->left(), run);
      TermPtr r = pin_fresh(p, t->right(), run);
      return Term::pair(std::move(l), std::move(r));
    }
    case TermKind::enc: {
      TermPtr b = pin_fresh(p, t->body(), run);
      TermPtr key = pin_fresh(p, t->key(), run);
      return Term::enc(std::move(b), std::move(key));
    }
    default:
      return t;
  }
}

}  // namespace

std::vector<TermPtr> concrete_messages(const Protocol& p, int run) {
  std::vector<TermPtr> out;
  out.reserve(p.steps.size());
  for (const Step& s : p.steps) out.push_back(pin_fresh(p, s.payload, run));
  return out;
}

std::vector<InvariantCounterexample> check_invariant_by_intruder(const Rater& rate,
                                                                 const std::vector<TermPtr>& M,
                                                                 const TypingContext& ctx,
                                                                 int depth, std::size_t cap) {
  Knowledge base = Knowledge::of(M);
  for (const Atom& a : ctx.intruder_atoms) base.add(Term::make(a));
  Knowledge closed = closure(base, ctx.keys, depth, cap);

  std::vector<SecurityLevel> holder_levels = ctx.intruder_levels();
  std::map<Atom, SecurityLevel> on_set;
  std::vector<InvariantCounterexample> out;
  for (const auto& [m, d] : closed.terms) {
    for (const Atom& a : atoms_in_order(m)) {
      auto it = on_set.find(a);
      if (it == on_set.end()) it = on_set.emplace(a, rate(a, M)).first;
      SecurityLevel on_m = rate(a, {m});
      if (geq(on_m, it->second)) continue;
      std::optional<SecurityLevel> la = ctx.level_of(a);
      if (la && set_geq(holder_levels, *la)) continue;
      out.push_back({m, a, on_m, it->second});
    }
  }
  return out;
}

std::vector<InvariantCounterexample> check_invariant_by_intruder(FunctionSelector sel,
                                                                 const std::vector<TermPtr>& M,
                                                                 const TypingContext& ctx,
                                                                 int depth, std::size_t cap) {
  Rater rate = [sel, &ctx](const Atom& a, const std::vector<TermPtr>& ms) {
    return evaluate_F(sel, a, ms, ctx);
  };
  return check_invariant_by_intruder(rate, M, ctx, depth, cap);
}

namespace {

constexpr int kLeakClosureRounds = 8;

struct RoleInstance {
  std::vector<RoleEvent> events;  // patterns pinned to one run
  std::size_t pos = 0;
  Substitution env;
};

struct SimState {
  std::vector<RoleInstance> instances;
  Knowledge observed;

  std::string key() const {
    std::ostringstream os;
    for (const RoleInstance& ri : instances) os << ri.pos << "|" << ri.env.display() << ";";
    os << "#";
    for (const auto& [t, d] : observed.terms) os << render(t) << ",";
    return os.str();
  }
};

// Sends never wait: whatever an agent can emit goes straight to the network
// and therefore to the intruder.
void fire_sends(SimState& st) {
  for (RoleInstance& ri : st.instances) {
    while (ri.pos < ri.events.size() && ri.events[ri.pos].dir == RoleEvent::Dir::send) {
      TermPtr msg = substitute(ri.events[ri.pos].pattern, ri.env);
      if (!vars(msg).empty()) break;
      st.observed.add(msg);
      ++ri.pos;
    }
  }
}

bool match_closed(const TermPtr& pattern, const TermPtr& t, Substitution& env) {
  switch (pattern->kind()) {
    case TermKind::empty:
      return t->kind() == TermKind::empty;
    case TermKind::atom:
      return t->kind() == TermKind::atom && pattern->atom() == t->atom();
    case TermKind::var: {
      const Variable& v = pattern->var();
      if (std::optional<TermPtr> b = env.lookup(v)) return equal(*b, t);
      if (v.constraint != Sort::any &&
          (t->kind() != TermKind::atom || t->atom().sort != v.constraint))
        return false;
      env.bind(v, t);
      return true;
    }
    case TermKind::pair:
      return t->kind() == TermKind::pair && match_closed(pattern->left(), t->left(), env) &&
             match_closed(pattern->right(), t->right(), env);
    default:
      return t->kind() == TermKind::enc && match_closed(pattern->key(), t->key(), env) &&
             match_closed(pattern->body(), t->body(), env);
  }
}

struct Deliverable {
  TermPtr value;
  Substitution env;
};

// Instances of a receive pattern the intruder can put on the wire: replayed
// closure elements, or compositions of deliverable parts; an encryption can
// be forged only with a known key. Variables range over the closure, capped.
void deliverables(const TermPtr& pattern, const Substitution& env, const Knowledge& closed,
                  std::size_t cap, std::vector<Deliverable>& out) {
  if (out.size() >= cap) return;
  switch (pattern->kind()) {
    case TermKind::empty:
      out.push_back({Term::empty(), env});
      return;
    case TermKind::atom: {
      TermPtr t = Term::make(pattern->atom());
      if (closed.contains(t)) out.push_back({t, env});
      return;
    }
    case TermKind::var: {
      const Variable& v = pattern->var();
      if (std::optional<TermPtr> b = env.lookup(v)) {
        out.push_back({*b, env});
        return;
      }
      for (const auto& [t, d] : closed.terms) {
        if (out.size() >= cap) return;
        if (v.constraint != Sort::any &&
            (t->kind() != TermKind::atom || t->atom().sort != v.constraint))
          continue;
        Substitution e2 = env;
        e2.bind(v, t);
        out.push_back({t, std::move(e2)});
      }
      return;
    }
    case TermKind::pair: {
      std::vector<Deliverable> lefts;
      deliverables(pattern->left(), env, closed, cap, lefts);
      for (const Deliverable& l : lefts) {
        std::vector<Deliverable> rights;
        deliverables(pattern->right(), l.env, closed, cap, rights);
        for (Deliverable& r : rights) {
          if (out.size() >= cap) return;
          out.push_back({Term::pair(l.value, r.value), std::move(r.env)});
        }
      }
      return;
    }
    default: {
      for (const auto& [t, d] : closed.terms) {
        if (out.size() >= cap) return;
        if (t->kind() != TermKind::enc) continue;
        Substitution e2 = env;
        if (match_closed(pattern, t, e2)) out.push_back({t, std::move(e2)});
      }
      TermPtr key = substitute(pattern->key(), env);
      if (vars(key).empty() && closed.contains(key)) {
        std::vector<Deliverable> bodies;
        deliverables(pattern->body(), env, closed, cap, bodies);
        for (Deliverable& b : bodies) {
          if (out.size() >= cap) return;
          out.push_back({Term::enc(b.value, key), std::move(b.env)});
        }
      }
      return;
    }
  }
}

}  // namespace

SimResult simulate(const Protocol& p, const SimOptions& opt) {
  SimResult result;
  TypingContext ctx = p.context();
  std::vector<GeneralizedRole> roles = extract_roles(p);

  std::map<std::string, const GeneralizedRole*> full_view;
  for (const GeneralizedRole& r : roles) {
    const GeneralizedRole*& slot = full_view[r.agent];
    if (!slot || slot->events.size() < r.events.size()) slot = &r;
  }

  SimState init;
  for (int run = 1; run <= opt.sessions; ++run) {
    for (const std::string& agent : p.agents) {
      auto it = full_view.find(agent);
      if (it == full_view.end()) continue;
      RoleInstance ri;
      for (const RoleEvent& e : it->second->events)
        ri.events.push_back({e.dir, e.step_index, e.peer, instantiate_run(e.pattern, run)});
      init.instances.push_back(std::move(ri));
    }
  }

  for (const std::string& a : p.agents)
    init.observed.add(Term::make(Atom{a, Sort::principal, false, {}, {}}));
  for (const Atom& a : ctx.intruder_atoms) init.observed.add(Term::make(a));
  init.observed.add(Term::make(Atom{"ni1", Sort::nonce, false, {}, {}}));
  init.observed.add(Term::make(Atom{"ni2", Sort::nonce, false, {}, {}}));

  std::set<std::string> secret_names;
  for (const Atom& s : p.secrets) secret_names.insert(s.name);

  fire_sends(init);
  std::set<std::string> seen{init.key()};
  std::vector<SimState> frontier;
  frontier.push_back(std::move(init));

  for (int d = 0; d <= opt.depth && !frontier.empty(); ++d) {
    std::vector<SimState> next;
    for (SimState& st : frontier) {
      ++result.states;
      Knowledge closed = closure(st.observed, ctx.keys, kLeakClosureRounds, opt.cap);
      for (const auto& [t, dr] : closed.terms)
        if (t->kind() == TermKind::atom && secret_names.count(t->atom().name))
          result.leaked.insert(t->atom());
      if (!result.leaked.empty()) return result;
      if (d == opt.depth) continue;

      for (std::size_t i = 0; i < st.instances.size(); ++i) {
        const RoleInstance& ri = st.instances[i];
        if (ri.pos >= ri.events.size() || ri.events[ri.pos].dir != RoleEvent::Dir::recv)
          continue;
        std::vector<Deliverable> cands;
        deliverables(ri.events[ri.pos].pattern, ri.env, closed,
                     static_cast<std::size_t>(opt.candidates_per_receive), cands);
        for (Deliverable& c : cands) {
          if (seen.size() >= opt.state_budget) {
            result.truncated = true;
            break;
          }
          SimState child = st;
          child.instances[i].env = std::move(c.env);
          ++child.instances[i].pos;
          fire_sends(child);
          if (!seen.insert(child.key()).second) continue;
          next.push_back(std::move(child));
        }
        if (result.truncated) break;
      }
      if (result.truncated) break;
    }
    if (result.truncated) break;
    frontier = std::move(next);
  }
  return result;
}

}  // namespace wfc
