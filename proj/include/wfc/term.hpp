#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace wfc {

enum class Sort { principal, nonce, key, any };

std::string to_string(Sort s);

// Named constant of the algebra. Tags distinguish otherwise equal names:
// `session` is the symbolic per-session index, `instance` marks lifted
// generalized-message parameters, `run` marks concrete simulator sessions.
struct Atom {
  std::string name;
  Sort sort = Sort::nonce;
  bool session = false;
  std::optional<int> instance;
  std::optional<int> run;

  auto tie() const { return std::tie(name, sort, session, instance, run); }
  bool operator==(const Atom& o) const { return tie() == o.tie(); }
  bool operator!=(const Atom& o) const { return !(*this == o); }
  bool operator<(const Atom& o) const { return tie() < o.tie(); }
  bool is_parameter() const { return instance.has_value(); }
  std::string display() const;
};

struct Variable {
  std::string name;
  Sort constraint = Sort::any;
  std::optional<int> instance;

  auto tie() const { return std::tie(name, constraint, instance); }
  bool operator==(const Variable& o) const { return tie() == o.tie(); }
  bool operator!=(const Variable& o) const { return !(*this == o); }
  bool operator<(const Variable& o) const { return tie() < o.tie(); }
  std::string display() const;
};

enum class TermKind { empty, atom, var, pair, enc };

class Term;
using TermPtr = std::shared_ptr<const Term>;

// Immutable term. Pairs are right-nested; an encryption holds its payload and
// a key slot that is always an atom- or variable-term of key sort.
class Term {
 public:
  TermKind kind() const { return kind_; }
  const Atom& atom() const { return std::get<Atom>(data_); }
  const Variable& var() const { return std::get<Variable>(data_); }
  const TermPtr& left() const { return left_; }
  const TermPtr& right() const { return right_; }
  const TermPtr& body() const { return left_; }
  const TermPtr& key() const { return right_; }
  std::size_t hash() const { return hash_; }

  static const TermPtr& empty();
  static TermPtr make(Atom a);
  static TermPtr make(Variable v);
  // Raw constructors keep whatever children they are given.
  static TermPtr pair_raw(TermPtr l, TermPtr r);
  static TermPtr enc_raw(TermPtr body, TermPtr key);
  // Normalizing constructors; these are what everything but the
  // normalization tests should use. enc() rejects non-key key slots.
  static TermPtr pair(TermPtr l, TermPtr r);
  static TermPtr enc(TermPtr body, TermPtr key);

 private:
  Term() = default;
  TermKind kind_ = TermKind::empty;
  std::variant<std::monostate, Atom, Variable> data_;
  TermPtr left_, right_;
  std::size_t hash_ = 0;
};

bool equal(const TermPtr& a, const TermPtr& b);
// Total structural order, used wherever output must be deterministic.
int compare(const TermPtr& a, const TermPtr& b);
std::size_t term_size(const TermPtr& t);

struct TermPtrEq {
  bool operator()(const TermPtr& a, const TermPtr& b) const { return equal(a, b); }
};
struct TermPtrHash {
  std::size_t operator()(const TermPtr& t) const { return t ? t->hash() : 0; }
};
struct TermPtrLess {
  bool operator()(const TermPtr& a, const TermPtr& b) const { return compare(a, b) < 0; }
};

// Involutive inverse relation over base key names. Keys never declared are
// treated as symmetric (self-inverse).
class KeyTable {
 public:
  void declare_symmetric(const std::string& k);
  void declare_pair(const std::string& k, const std::string& kinv);
  bool declared(const std::string& k) const;
  std::string inverse_name(const std::string& k) const;
  Atom inverse(const Atom& k) const;  // preserves tags

 private:
  std::map<std::string, std::string> inv_;
};

// Collapses Empty out of composites: (m, eps) -> m, {eps}k -> eps. Total and
// idempotent; the normalizing constructors apply it on the fly.
TermPtr normalize(const TermPtr& t);

// Decryption exists only as a construction-time redex, so the internal
// representation never stores it. Throws std::invalid_argument unless m is an
// encryption whose key is the inverse of `key`.
TermPtr dec(const TermPtr& m, const TermPtr& key, const KeyTable& keys);

// A path selects a subterm: 0 = pair left / enc body, 1 = pair right / enc key.
using Path = std::vector<std::uint8_t>;

TermPtr subterm_at(const TermPtr& t, const Path& p);

std::set<Atom> atoms(const TermPtr& t);       // every atom, key slots included
std::set<Variable> vars(const TermPtr& t);
std::vector<Atom> atoms_in_order(const TermPtr& t);  // first-occurrence order
std::vector<Variable> vars_in_order(const TermPtr& t);

// Positions where the target occurs as payload; occurrences in key slots are
// not data occurrences and are never returned.
std::vector<Path> payload_occurrences(const TermPtr& t, const Atom& a);
std::vector<Path> payload_occurrences(const TermPtr& t, const Variable& v);
bool occurs_in_key_position(const TermPtr& t, const Atom& a);

class Substitution {
 public:
  void bind(const Variable& v, TermPtr t);
  void bind(const Atom& parameter, TermPtr t);
  const std::map<Variable, TermPtr>& var_map() const { return vars_; }
  const std::map<Atom, TermPtr>& param_map() const { return params_; }
  bool empty() const { return vars_.empty() && params_.empty(); }
  std::optional<TermPtr> lookup(const Variable& v) const;
  std::optional<TermPtr> lookup(const Atom& a) const;
  std::string display() const;

 private:
  std::map<Variable, TermPtr> vars_;
  std::map<Atom, TermPtr> params_;
};

// Applies the substitution and normalizes. Only variables and parameter
// (instance-tagged) atoms are replaceable. Throws std::invalid_argument if a
// key slot would receive a non-key term.
TermPtr substitute(const TermPtr& t, const Substitution& s);

std::string render(const TermPtr& t);

}  // namespace wfc
