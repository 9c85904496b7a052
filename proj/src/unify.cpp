#include "wfc/unify.hpp"

namespace wfc {

namespace {

bool is_param(const TermPtr& t) {
  return t->kind() == TermKind::atom && t->atom().is_parameter();
}

// 0 = variable, 1 = parameter, 2 = rigid. The less rigid side binds.
int rigidity(const TermPtr& t) {
  if (t->kind() == TermKind::var) return 0;
  if (is_param(t)) return 1;
  return 2;
}

// Resolves the head symbol through the bindings accumulated so far.
TermPtr walk(TermPtr t, const Substitution& s) {
  for (;;) {
    if (t->kind() == TermKind::var) {
      if (auto b = s.lookup(t->var())) {
        t = *b;
        continue;
      }
    } else if (is_param(t)) {
      if (auto b = s.lookup(t->atom())) {
        t = *b;
        continue;
      }
    }
    return t;
  }
}

bool occurs(const Variable& v, const TermPtr& t, const Substitution& s) {
  TermPtr w = walk(t, s);
  switch (w->kind()) {
    case TermKind::var:
      return w->var() == v;
    case TermKind::pair:
    case TermKind::enc:
      return occurs(v, w->left(), s) || occurs(v, w->right(), s);
    default:
      return false;
  }
}

bool admissible_var(const Variable& v, const TermPtr& t) {
  if (v.constraint == Sort::any) return true;
  if (t->kind() == TermKind::atom) return t->atom().sort == v.constraint;
  if (t->kind() == TermKind::var) return t->var().constraint == v.constraint;
  return false;
}

bool admissible_param(const Atom& p, const TermPtr& t) {
  if (t->kind() != TermKind::atom) return false;
  const Atom& a = t->atom();
  return a.sort == p.sort && a.session == p.session;
}

bool bind(const TermPtr& flex, const TermPtr& to, Substitution& s) {
  if (flex->kind() == TermKind::var) {
    const Variable& v = flex->var();
    if (!admissible_var(v, to) || occurs(v, to, s)) return false;
    s.bind(v, to);
    return true;
  }
  if (!admissible_param(flex->atom(), to)) return false;
  s.bind(flex->atom(), to);
  return true;
}

bool unify_rec(const TermPtr& ta, const TermPtr& tb, Substitution& s) {
  TermPtr a = walk(ta, s);
  TermPtr b = walk(tb, s);
  if (equal(a, b)) return true;
  int ra = rigidity(a);
  int rb = rigidity(b);
  if (ra == 2 && rb == 2) {
    if (a->kind() != b->kind()) return false;
    switch (a->kind()) {
      case TermKind::pair:
      case TermKind::enc:
        return unify_rec(a->left(), b->left(), s) &&
               unify_rec(a->right(), b->right(), s);
      default:
        return false;
    }
  }
  if (ra < rb) return bind(a, b, s);
  if (rb < ra) return bind(b, a, s);
  // Tie: first argument binds; fall back when its sort forbids the binding.
  return bind(a, b, s) || bind(b, a, s);
}

}  // namespace

std::optional<Substitution> unify(const TermPtr& a, const TermPtr& b) {
  Substitution s;
  if (!unify_rec(a, b, s)) return std::nullopt;
  // Flatten chains so that applying the result once is enough.
  for (;;) {
    Substitution next;
    bool changed = false;
    for (const auto& [v, t] : s.var_map()) {
      TermPtr r = substitute(t, s);
      if (!equal(r, t)) changed = true;
      next.bind(v, r);
    }
    for (const auto& [p, t] : s.param_map()) {
      TermPtr r = substitute(t, s);
      if (!equal(r, t)) changed = true;
      next.bind(p, r);
    }
    if (!changed) return s;
    s = std::move(next);
  }
}

std::vector<Origin> origins(const TermPtr& query, const GeneralizedMessageSet& mset) {
  bool atomic = query->kind() == TermKind::atom || query->kind() == TermKind::var;
  std::vector<Origin> out;
  for (const TermPtr& entry : mset.entries) {
    if (entry->kind() == TermKind::var && !atomic) continue;
    if (auto s = unify(entry, query)) out.push_back({entry, *s});
  }
  return out;
}

}  // namespace wfc
