#include "wfc/roles.hpp"

#include <map>
#include <sstream>

namespace wfc {

namespace {

// Variable names follow the customary sequence, then cycle with a counter.
std::string nth_var_name(std::size_t i) {
  static const char* pool[] = {"X", "Y", "Z", "U", "V", "W"};
  if (i < 6) return pool[i];
  return std::string(pool[i % 6]) + std::to_string(i / 6);
}

struct AgentView {
  const Protocol* p;
  const TypingContext* ctx;
  std::string agent;
  std::set<Atom> knowledge;           // untagged atoms
  std::set<std::string> own_fresh;    // names of fresh values this agent mints
  std::set<std::string> generated;    // own fresh values already emitted
  std::vector<std::pair<TermPtr, Variable>> bindings;  // protocol subterm -> variable
  std::size_t* var_counter;

  bool knows_atom(const Atom& a) const {
    if (knowledge.count(a)) return true;
    return generated.count(a.name) > 0;
  }

  bool knows_key(const Atom& k) const {
    return knows_atom(k) || knowledge.count(ctx->keys.inverse(k)) > 0 ||
           (own_fresh.count(ctx->keys.inverse_name(k.name)) && generated.count(ctx->keys.inverse_name(k.name)));
  }

  Atom tag_own(const Atom& a) const {
    Atom out = a;
    if (own_fresh.count(a.name)) out.session = true;
    return out;
  }

  const Variable* bound(const TermPtr& t) const {
    for (const auto& [sub, v] : bindings)
      if (equal(sub, t)) return &v;
    return nullptr;
  }

  Variable bind_fresh(const TermPtr& t) {
    Variable v{nth_var_name((*var_counter)++), Sort::any, {}};
    bindings.emplace_back(t, v);
    return v;
  }

  // Receive side: keep what is verifiable, abstract the rest.
  TermPtr abstract(const TermPtr& t) {
    if (const Variable* v = bound(t)) return Term::make(*v);
    switch (t->kind()) {
      case TermKind::atom: {
        const Atom& a = t->atom();
        if (knows_atom(a)) return Term::make(tag_own(a));
        return Term::make(bind_fresh(t));
      }
      case TermKind::enc: {
        const Atom& k = t->key()->atom();
        if (knows_key(k)) {
          TermPtr body = abstract(t->body());
          return Term::enc(std::move(body), Term::make(tag_own(k)));
        }
        return Term::make(bind_fresh(t));
      }
      case TermKind::pair: {
        TermPtr l = abstract(t->left());
        TermPtr r = abstract(t->right());
        return Term::pair(std::move(l), std::move(r));
      }
      default:
        return t;
    }
  }

  // Send side: the agent must be able to construct everything it emits,
  // either from knowledge or by forwarding previously received content.
  TermPtr construct(const TermPtr& t, int step_index) {
    if (const Variable* v = bound(t)) return Term::make(*v);
    switch (t->kind()) {
      case TermKind::atom: {
        const Atom& a = t->atom();
        if (own_fresh.count(a.name)) {
          generated.insert(a.name);
          return Term::make(tag_own(a));
        }
        if (knows_atom(a)) return Term::make(a);
        throw ExtractionError("agent " + agent + " cannot produce atom '" + a.name +
                              "' in step " + std::to_string(step_index));
      }
      case TermKind::enc: {
        const Atom& k = t->key()->atom();
        if (own_fresh.count(k.name)) generated.insert(k.name);
        if (!knows_atom(k) && !(own_fresh.count(k.name) && generated.count(k.name)))
          throw ExtractionError("agent " + agent + " cannot encrypt with '" + k.name +
                                "' in step " + std::to_string(step_index));
        TermPtr body = construct(t->body(), step_index);
        return Term::enc(std::move(body), Term::make(tag_own(k)));
      }
      case TermKind::pair: {
        TermPtr l = construct(t->left(), step_index);
        TermPtr r = construct(t->right(), step_index);
        return Term::pair(std::move(l), std::move(r));
      }
      default:
        return t;
    }
  }
};

}  // namespace

std::vector<GeneralizedRole> extract_roles(const Protocol& p) {
  TypingContext ctx = p.context();
  std::size_t var_counter = 0;
  std::vector<GeneralizedRole> out;

  for (const std::string& agent : p.agents) {
    AgentView view{&p, &ctx, agent, p.initial_knowledge(agent), {}, {}, {}, &var_counter};
    for (const auto& f : p.fresh)
      if (f.by == agent) view.own_fresh.insert(f.name);

    std::vector<RoleEvent> events;
    for (const Step& s : p.steps) {
      if (s.sender == agent) {
        events.push_back({RoleEvent::Dir::send, s.index, s.receiver,
                          view.construct(s.payload, s.index)});
      } else if (s.receiver == agent) {
        TermPtr pat = view.abstract(s.payload);
        // Verified atoms are available from here on.
        for (const Atom& a : atoms(pat)) {
          Atom base = a;
          base.session = false;
          view.knowledge.insert(base);
        }
        events.push_back({RoleEvent::Dir::recv, s.index, s.sender, pat});
      }
    }

    int index = 1;
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (events[i].dir != RoleEvent::Dir::send) continue;
      GeneralizedRole r{agent, index++, {events.begin(), events.begin() + i + 1}};
      out.push_back(std::move(r));
    }
    if (!events.empty() && events.back().dir == RoleEvent::Dir::recv)
      out.push_back(GeneralizedRole{agent, index, events});
  }
  return out;
}

std::string render_role(const GeneralizedRole& r) {
  std::ostringstream os;
  os << r.id() << " = <";
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    const RoleEvent& e = r.events[i];
    os << (i ? ", " : "") << "⟨i." << e.step_index << ", ";
    if (e.dir == RoleEvent::Dir::send)
      os << r.agent << " → I(" << e.peer << ")";
    else
      os << "I(" << e.peer << ") → " << r.agent;
    os << " : " << render(e.pattern) << "⟩";
  }
  os << ">";
  return os.str();
}

namespace {

struct Lifter {
  std::map<std::string, int> atom_counter;
  std::map<std::string, int> var_counter;

  TermPtr lift_entry(const TermPtr& t) {
    std::map<Atom, Atom> atom_map;
    std::map<Variable, Variable> var_map;
    return lift(t, atom_map, var_map);
  }

 private:
  TermPtr lift(const TermPtr& t, std::map<Atom, Atom>& atom_map,
               std::map<Variable, Variable>& var_map) {
    switch (t->kind()) {
      case TermKind::atom: {
        const Atom& a = t->atom();
        auto it = atom_map.find(a);
        if (it == atom_map.end()) {
          Atom lifted = a;
          lifted.instance = ++atom_counter[a.name];
          it = atom_map.emplace(a, lifted).first;
        }
        return Term::make(it->second);
      }
      case TermKind::var: {
        const Variable& v = t->var();
        auto it = var_map.find(v);
        if (it == var_map.end()) {
          Variable lifted = v;
          lifted.instance = ++var_counter[v.name];
          it = var_map.emplace(v, lifted).first;
        }
        return Term::make(it->second);
      }
      case TermKind::pair: {
        TermPtr l = lift(t->left(), atom_map, var_map);
        TermPtr r = lift(t->right(), atom_map, var_map);
        return Term::pair(std::move(l), std::move(r));
      }
      case TermKind::enc: {
        TermPtr body = lift(t->body(), atom_map, var_map);
        TermPtr key = lift(t->key(), atom_map, var_map);
        return Term::enc(std::move(body), std::move(key));
      }
      default:
        return t;
    }
  }
};

bool alpha_rec(const TermPtr& a, const TermPtr& b, std::map<Atom, Atom>& af,
               std::map<Atom, Atom>& ab, std::map<Variable, Variable>& vf,
               std::map<Variable, Variable>& vb) {
  if (a->kind() != b->kind()) return false;
  switch (a->kind()) {
    case TermKind::empty:
      return true;
    case TermKind::atom: {
      const Atom& x = a->atom();
      const Atom& y = b->atom();
      if (!x.is_parameter() || !y.is_parameter()) return x == y;
      if (x.sort != y.sort || x.session != y.session || x.run != y.run) return false;
      auto fx = af.find(x);
      auto fy = ab.find(y);
      if (fx == af.end() && fy == ab.end()) {
        af.emplace(x, y);
        ab.emplace(y, x);
        return true;
      }
      return fx != af.end() && fy != ab.end() && fx->second == y && fy->second == x;
    }
    case TermKind::var: {
      const Variable& x = a->var();
      const Variable& y = b->var();
      if (x.constraint != y.constraint) return false;
      auto fx = vf.find(x);
      auto fy = vb.find(y);
      if (fx == vf.end() && fy == vb.end()) {
        vf.emplace(x, y);
        vb.emplace(y, x);
        return true;
      }
      return fx != vf.end() && fy != vb.end() && fx->second == y && fy->second == x;
    }
    case TermKind::pair:
    case TermKind::enc:
      return alpha_rec(a->left(), b->left(), af, ab, vf, vb) &&
             alpha_rec(a->right(), b->right(), af, ab, vf, vb);
  }
  return false;
}

}  // namespace

bool alpha_equivalent(const TermPtr& a, const TermPtr& b) {
  std::map<Atom, Atom> af, ab;
  std::map<Variable, Variable> vf, vb;
  return alpha_rec(a, b, af, ab, vf, vb);
}

GeneralizedMessageSet collect_generalized_messages(const Protocol& p,
                                                   const std::vector<GeneralizedRole>& roles) {
  GeneralizedMessageSet out;
  Lifter lifter;
  for (const std::string& agent : p.agents) {
    // The longest role of the agent carries its complete event sequence.
    const GeneralizedRole* complete = nullptr;
    for (const auto& r : roles)
      if (r.agent == agent && (!complete || r.events.size() > complete->events.size()))
        complete = &r;
    if (!complete) continue;
    for (const RoleEvent& e : complete->events) out.raw.push_back(lifter.lift_entry(e.pattern));
  }
  for (const TermPtr& entry : out.raw) {
    bool dup = false;
    for (const TermPtr& seen : out.entries)
      if (alpha_equivalent(entry, seen)) dup = true;
    if (!dup) out.entries.push_back(entry);
  }
  return out;
}

}  // namespace wfc
