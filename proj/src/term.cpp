#include "wfc/term.hpp"

#include <cassert>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace wfc {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t hash_string(const std::string& s) { return std::hash<std::string>{}(s); }

std::size_t hash_atom(const Atom& a) {
  std::size_t h = hash_string(a.name);
  h = mix(h, static_cast<std::size_t>(a.sort));
  h = mix(h, a.session ? 1u : 0u);
  h = mix(h, a.instance ? static_cast<std::size_t>(*a.instance) + 1 : 0u);
  h = mix(h, a.run ? static_cast<std::size_t>(*a.run) + 1 : 0u);
  return h;
}

std::size_t hash_var(const Variable& v) {
  std::size_t h = mix(hash_string(v.name), static_cast<std::size_t>(v.constraint));
  h = mix(h, v.instance ? static_cast<std::size_t>(*v.instance) + 1 : 0u);
  return h;
}

bool key_shaped(const TermPtr& k) {
  if (!k) return false;
  if (k->kind() == TermKind::atom) return k->atom().sort == Sort::key;
  if (k->kind() == TermKind::var) {
    Sort c = k->var().constraint;
    return c == Sort::key || c == Sort::any;
  }
  return false;
}

}  // namespace

std::string to_string(Sort s) {
  switch (s) {
    case Sort::principal: return "principal";
    case Sort::nonce: return "nonce";
    case Sort::key: return "key";
    case Sort::any: return "any";
  }
  return "?";
}

std::string Atom::display() const {
  std::string out = name;
  if (instance) out += "_" + std::to_string(*instance);
  if (session) out += "^i";
  if (run) out += "^" + std::to_string(*run);
  return out;
}

std::string Variable::display() const {
  std::string out = name;
  if (instance) out += "_" + std::to_string(*instance);
  return out;
}

const TermPtr& Term::empty() {
  static const TermPtr e = [] {
    auto t = std::shared_ptr<Term>(new Term());
    t->kind_ = TermKind::empty;
    t->hash_ = 0x5eed;
    return TermPtr(t);
  }();
  return e;
}

TermPtr Term::make(Atom a) {
  auto t = std::shared_ptr<Term>(new Term());
  t->kind_ = TermKind::atom;
  t->hash_ = mix(1, hash_atom(a));
  t->data_ = std::move(a);
  return t;
}

TermPtr Term::make(Variable v) {
  auto t = std::shared_ptr<Term>(new Term());
  t->kind_ = TermKind::var;
  t->hash_ = mix(2, hash_var(v));
  t->data_ = std::move(v);
  return t;
}

TermPtr Term::pair_raw(TermPtr l, TermPtr r) {
  assert(l && r);
  auto t = std::shared_ptr<Term>(new Term());
  t->kind_ = TermKind::pair;
  t->hash_ = mix(mix(3, l->hash()), r->hash());
  t->left_ = std::move(l);
  t->right_ = std::move(r);
  return t;
}

TermPtr Term::enc_raw(TermPtr body, TermPtr key) {
  assert(body && key);
  auto t = std::shared_ptr<Term>(new Term());
  t->kind_ = TermKind::enc;
  t->hash_ = mix(mix(4, body->hash()), key->hash());
  t->left_ = std::move(body);
  t->right_ = std::move(key);
  return t;
}

TermPtr Term::pair(TermPtr l, TermPtr r) {
  if (l->kind() == TermKind::empty) return r;
  if (r->kind() == TermKind::empty) return l;
  return pair_raw(std::move(l), std::move(r));
}

TermPtr Term::enc(TermPtr body, TermPtr key) {
  if (!key_shaped(key))
    throw std::invalid_argument("encryption key slot requires a key atom or key variable, got " +
                                render(key));
  if (body->kind() == TermKind::empty) return empty();
  return enc_raw(std::move(body), std::move(key));
}

bool equal(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->hash() != b->hash() || a->kind() != b->kind()) return false;
  switch (a->kind()) {
    case TermKind::empty: return true;
    case TermKind::atom: return a->atom() == b->atom();
    case TermKind::var: return a->var() == b->var();
    case TermKind::pair:
    case TermKind::enc: return equal(a->left(), b->left()) && equal(a->right(), b->right());
  }
  return false;
}

int compare(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return 0;
  auto rank = [](TermKind k) { return static_cast<int>(k); };
  if (rank(a->kind()) != rank(b->kind())) return rank(a->kind()) < rank(b->kind()) ? -1 : 1;
  switch (a->kind()) {
    case TermKind::empty: return 0;
    case TermKind::atom: {
      if (a->atom() == b->atom()) return 0;
      return a->atom() < b->atom() ? -1 : 1;
    }
    case TermKind::var: {
      if (a->var() == b->var()) return 0;
      return a->var() < b->var() ? -1 : 1;
    }
    case TermKind::pair:
    case TermKind::enc: {
      int c = compare(a->left(), b->left());
      if (c != 0) return c;
      return compare(a->right(), b->right());
    }
  }
  return 0;
}

std::size_t term_size(const TermPtr& t) {
  switch (t->kind()) {
    case TermKind::pair:
    case TermKind::enc: return 1 + term_size(t->left()) + term_size(t->right());
    default: return 1;
  }
}

void KeyTable::declare_symmetric(const std::string& k) { inv_[k] = k; }

void KeyTable::declare_pair(const std::string& k, const std::string& kinv) {
  inv_[k] = kinv;
  inv_[kinv] = k;
}

bool KeyTable::declared(const std::string& k) const { return inv_.count(k) > 0; }

std::string KeyTable::inverse_name(const std::string& k) const {
  auto it = inv_.find(k);
  return it == inv_.end() ? k : it->second;
}

Atom KeyTable::inverse(const Atom& k) const {
  Atom out = k;
  out.name = inverse_name(k.name);
  return out;
}

TermPtr normalize(const TermPtr& t) {
  switch (t->kind()) {
    case TermKind::empty:
    case TermKind::atom:
    case TermKind::var: return t;
    case TermKind::pair: {
      TermPtr l = normalize(t->left());
      TermPtr r = normalize(t->right());
      if (l.get() == t->left().get() && r.get() == t->right().get() &&
          l->kind() != TermKind::empty && r->kind() != TermKind::empty)
        return t;
      return Term::pair(std::move(l), std::move(r));
    }
    case TermKind::enc: {
      TermPtr b = normalize(t->body());
      if (b->kind() == TermKind::empty) return Term::empty();
      if (b.get() == t->body().get()) return t;
      return Term::enc_raw(std::move(b), t->key());
    }
  }
  return t;
}

TermPtr dec(const TermPtr& m, const TermPtr& key, const KeyTable& keys) {
  if (m->kind() == TermKind::enc && key->kind() == TermKind::atom &&
      m->key()->kind() == TermKind::atom && keys.inverse(m->key()->atom()) == key->atom())
    return m->body();
  throw std::invalid_argument("dec applies only to an encryption under the inverse key");
}

TermPtr subterm_at(const TermPtr& t, const Path& p) {
  TermPtr cur = t;
  for (auto step : p) {
    assert(cur->kind() == TermKind::pair || cur->kind() == TermKind::enc);
    cur = step == 0 ? cur->left() : cur->right();
  }
  return cur;
}

namespace {

template <typename F>
void walk(const TermPtr& t, const F& f) {
  f(t);
  if (t->kind() == TermKind::pair || t->kind() == TermKind::enc) {
    walk(t->left(), f);
    walk(t->right(), f);
  }
}

}  // namespace

std::set<Atom> atoms(const TermPtr& t) {
  std::set<Atom> out;
  walk(t, [&](const TermPtr& s) {
    if (s->kind() == TermKind::atom) out.insert(s->atom());
  });
  return out;
}

std::set<Variable> vars(const TermPtr& t) {
  std::set<Variable> out;
  walk(t, [&](const TermPtr& s) {
    if (s->kind() == TermKind::var) out.insert(s->var());
  });
  return out;
}

std::vector<Atom> atoms_in_order(const TermPtr& t) {
  std::vector<Atom> out;
  walk(t, [&](const TermPtr& s) {
    if (s->kind() == TermKind::atom) {
      const Atom& a = s->atom();
      for (const Atom& seen : out)
        if (seen == a) return;
      out.push_back(a);
    }
  });
  return out;
}

std::vector<Variable> vars_in_order(const TermPtr& t) {
  std::vector<Variable> out;
  walk(t, [&](const TermPtr& s) {
    if (s->kind() == TermKind::var) {
      const Variable& v = s->var();
      for (const Variable& seen : out)
        if (seen == v) return;
      out.push_back(v);
    }
  });
  return out;
}

namespace {

template <typename Pred>
void payload_walk(const TermPtr& t, Path& here, const Pred& pred, std::vector<Path>& out) {
  switch (t->kind()) {
    case TermKind::empty: return;
    case TermKind::atom:
    case TermKind::var:
      if (pred(t)) out.push_back(here);
      return;
    case TermKind::pair:
      here.push_back(0);
      payload_walk(t->left(), here, pred, out);
      here.back() = 1;
      payload_walk(t->right(), here, pred, out);
      here.pop_back();
      return;
    case TermKind::enc:
      // The key slot is not a data position.
      here.push_back(0);
      payload_walk(t->body(), here, pred, out);
      here.pop_back();
      return;
  }
}

}  // namespace

std::vector<Path> payload_occurrences(const TermPtr& t, const Atom& a) {
  std::vector<Path> out;
  Path here;
  payload_walk(t, here, [&](const TermPtr& s) {
    return s->kind() == TermKind::atom && s->atom() == a;
  }, out);
  return out;
}

std::vector<Path> payload_occurrences(const TermPtr& t, const Variable& v) {
  std::vector<Path> out;
  Path here;
  payload_walk(t, here, [&](const TermPtr& s) {
    return s->kind() == TermKind::var && s->var() == v;
  }, out);
  return out;
}

bool occurs_in_key_position(const TermPtr& t, const Atom& a) {
  bool found = false;
  walk(t, [&](const TermPtr& s) {
    if (s->kind() == TermKind::enc && s->key()->kind() == TermKind::atom &&
        s->key()->atom() == a)
      found = true;
  });
  return found;
}

void Substitution::bind(const Variable& v, TermPtr t) { vars_[v] = std::move(t); }
void Substitution::bind(const Atom& parameter, TermPtr t) { params_[parameter] = std::move(t); }

std::optional<TermPtr> Substitution::lookup(const Variable& v) const {
  auto it = vars_.find(v);
  if (it == vars_.end()) return std::nullopt;
  return it->second;
}

std::optional<TermPtr> Substitution::lookup(const Atom& a) const {
  auto it = params_.find(a);
  if (it == params_.end()) return std::nullopt;
  return it->second;
}

std::string Substitution::display() const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [v, t] : vars_) {
    os << (first ? "" : ", ") << v.display() << " -> " << render(t);
    first = false;
  }
  for (const auto& [a, t] : params_) {
    os << (first ? "" : ", ") << a.display() << " -> " << render(t);
    first = false;
  }
  os << "}";
  return os.str();
}

namespace {

TermPtr substitute_rec(const TermPtr& t, const Substitution& s) {
  switch (t->kind()) {
    case TermKind::empty: return t;
    case TermKind::atom: {
      if (auto r = s.lookup(t->atom())) return *r;
      return t;
    }
    case TermKind::var: {
      if (auto r = s.lookup(t->var())) return *r;
      return t;
    }
    case TermKind::pair:
      return Term::pair(substitute_rec(t->left(), s), substitute_rec(t->right(), s));
    case TermKind::enc: {
      TermPtr body = substitute_rec(t->body(), s);
      TermPtr key = substitute_rec(t->key(), s);
      if (body->kind() == TermKind::empty) return Term::empty();
      return Term::enc(std::move(body), std::move(key));  // rechecks the key slot
    }
  }
  return t;
}

}  // namespace

TermPtr substitute(const TermPtr& t, const Substitution& s) {
  return normalize(substitute_rec(t, s));
}

std::string render(const TermPtr& t) {
  switch (t->kind()) {
    case TermKind::empty: return "eps";
    case TermKind::atom: return t->atom().display();
    case TermKind::var: return t->var().display();
    case TermKind::pair: return render(t->left()) + "." + render(t->right());
    case TermKind::enc: return "{" + render(t->body()) + "}" + render(t->key());
  }
  return "?";
}

}  // namespace wfc
