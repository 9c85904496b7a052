#include <doctest.h>

#include "wfc/oracle.hpp"

using namespace wfc;

namespace {

struct Fixture {
  Protocol p;
  TypingContext ctx;
};

Fixture load(const char* name = "/woolam.wl") {
  ParseResult r = parse_file(std::string(WFC_FIXTURE_DIR) + name);
  REQUIRE(r.ok());
  Fixture f{*r.protocol, {}};
  f.ctx = f.p.context();
  return f;
}

TermPtr atom(const char* n, Sort s) { return Term::make(Atom{n, s, false, {}, {}}); }
TermPtr key(const char* n) { return atom(n, Sort::key); }
TermPtr nonce(const char* n) { return atom(n, Sort::nonce); }

SecurityLevel lv(std::initializer_list<std::string> names) { return SecurityLevel::of(names); }

std::set<std::string> renders(const Knowledge& k) {
  std::set<std::string> out;
  for (const auto& [t, d] : k.terms) out.insert(render(t));
  return out;
}

bool subset(const Knowledge& a, const Knowledge& b) {
  for (const auto& [t, d] : a.terms)
    if (!b.contains(t)) return false;
  return true;
}

// All protocol messages of both runs plus what the network gives away.
std::vector<TermPtr> observable(const Fixture& f) {
  std::vector<TermPtr> out = concrete_messages(f.p, 1);
  for (const TermPtr& t : concrete_messages(f.p, 2)) out.push_back(t);
  for (const Atom& a : f.ctx.intruder_atoms) out.push_back(Term::make(a));
  return out;
}

}  // namespace

TEST_CASE("closure splits pairs and decrypts with known inverses") {
  KeyTable sym;
  sym.declare_symmetric("k");

  Knowledge m = Knowledge::of({Term::enc(nonce("a"), key("k")), key("k")});
  Knowledge c = closure(m, sym, 1);
  REQUIRE(c.contains(nonce("a")));
  const Derivation& d = c.terms.at(nonce("a"));
  CHECK(d.rule == Derivation::Rule::decrypt);
  CHECK(equal(d.first, Term::enc(nonce("a"), key("k"))));
  CHECK(equal(d.second, key("k")));
  CHECK(d.round == 1);

  KeyTable asym;
  asym.declare_pair("pk", "sk");
  Knowledge c2 = closure(Knowledge::of({Term::enc(nonce("a"), key("pk")), key("sk")}), asym, 1);
  CHECK(c2.contains(nonce("a")));

  Knowledge c3 = closure(Knowledge::of({Term::pair(nonce("a"), nonce("b"))}), sym, 1);
  CHECK(c3.contains(nonce("a")));
  CHECK(c3.contains(nonce("b")));
  CHECK(c3.terms.at(nonce("a")).rule == Derivation::Rule::split_left);
  CHECK(c3.terms.at(nonce("b")).rule == Derivation::Rule::split_right);
}

TEST_CASE("closure leaves an undecryptable blob opaque") {
  KeyTable keys;
  keys.declare_symmetric("kas");
  TermPtr blob = Term::enc(Term::pair(atom("B", Sort::principal), key("kab")), key("kas"));
  Knowledge c = closure(Knowledge::of({blob}), keys, 6);
  CHECK(c.terms.size() == 1);
  CHECK(!c.contains(key("kab")));
}

TEST_CASE("closure composes only shapes already observed") {
  KeyTable keys;
  keys.declare_symmetric("k");
  keys.declare_symmetric("kas");

  TermPtr inner = Term::enc(nonce("a"), key("k"));
  TermPtr outer = Term::enc(Term::pair(inner, nonce("b")), key("kas"));
  Knowledge c =
      closure(Knowledge::of({outer, nonce("a"), key("k"), key("kas")}), keys, 3);

  CHECK(c.terms.size() == 7);
  REQUIRE(c.contains(inner));
  const Derivation& d = c.terms.at(inner);
  CHECK(d.rule == Derivation::Rule::encrypt);
  CHECK(equal(d.first, nonce("a")));
  CHECK(equal(d.second, key("k")));
  CHECK(d.round == 1);
  CHECK(!c.contains(Term::pair(nonce("a"), key("k"))));
  CHECK(!c.contains(Term::enc(nonce("a"), key("kas"))));
}

TEST_CASE("closure is monotone and stops at a fixpoint") {
  Fixture f = load();
  std::vector<TermPtr> all = observable(f);
  std::vector<TermPtr> some(all.begin(), all.begin() + 3);

  Knowledge big = closure(Knowledge::of(all), f.ctx.keys, 3);
  CHECK(subset(closure(Knowledge::of(some), f.ctx.keys, 3), big));
  CHECK(subset(closure(Knowledge::of(all), f.ctx.keys, 2), big));

  Knowledge fixed = closure(Knowledge::of(all), f.ctx.keys, 6);
  CHECK(renders(closure(fixed, f.ctx.keys, 6)) == renders(fixed));
  CHECK(renders(closure(fixed, f.ctx.keys, 0)) == renders(fixed));
}

TEST_CASE("every derivation in a closure replays") {
  Fixture f = load();
  Knowledge given = Knowledge::of(observable(f));
  int depth = 3;
  Knowledge c = closure(given, f.ctx.keys, depth);

  for (const auto& [t, d] : c.terms) {
    CHECK(d.round <= depth);
    if (d.rule == Derivation::Rule::given) {
      CHECK(given.contains(t));
      continue;
    }
    REQUIRE(d.first);
    REQUIRE(c.contains(d.first));
    CHECK(c.terms.at(d.first).round < d.round);
    if (d.second) {
      REQUIRE(c.contains(d.second));
      CHECK(c.terms.at(d.second).round < d.round);
    }
    switch (d.rule) {
      case Derivation::Rule::split_left:
        CHECK(equal(t, d.first->left()));
        break;
      case Derivation::Rule::split_right:
        CHECK(equal(t, d.first->right()));
        break;
      case Derivation::Rule::decrypt:
        REQUIRE(d.first->kind() == TermKind::enc);
        CHECK(equal(t, d.first->body()));
        CHECK(equal(d.second, Term::make(f.ctx.keys.inverse(d.first->key()->atom()))));
        break;
      case Derivation::Rule::pair:
        CHECK(equal(t, Term::pair(d.first, d.second)));
        break;
      case Derivation::Rule::encrypt:
        CHECK(equal(t, Term::enc(d.first, d.second)));
        break;
      default:
        break;
    }
  }
}

TEST_CASE("serial and parallel closures agree exactly") {
  Fixture f = load();
  Knowledge given = Knowledge::of(observable(f));
  Knowledge s = closure_serial(given, f.ctx.keys, 3);
  Knowledge p = closure_parallel(given, f.ctx.keys, 3);

  REQUIRE(s.terms.size() == p.terms.size());
  auto it = p.terms.begin();
  for (const auto& [t, d] : s.terms) {
    CHECK(equal(t, it->first));
    CHECK(d.rule == it->second.rule);
    CHECK(d.round == it->second.round);
    CHECK(compare(d.first, it->second.first) == 0);
    CHECK(compare(d.second, it->second.second) == 0);
    ++it;
  }
}

TEST_CASE("closure refuses to grow past its cap") {
  TermPtr t = nonce("a0");
  for (int i = 1; i < 8; ++i) t = Term::pair(t, nonce(("a" + std::to_string(i)).c_str()));
  CHECK_THROWS_AS(closure(Knowledge::of({t}), KeyTable{}, 6, 3), ResourceBound);
}

TEST_CASE("concrete messages pin fresh values to a run") {
  Fixture f = load();
  std::vector<TermPtr> run1 = concrete_messages(f.p, 1);
  REQUIRE(run1.size() == 5);
  CHECK(render(run1[0]) == "A");
  CHECK(render(run1[1]) == "Nb^1");
  CHECK(render(run1[2]) == "{B.kab^1}kas");
  CHECK(render(run1[3]) == "{A.Nb^1.{B.kab^1}kas}kbs");
  CHECK(render(concrete_messages(f.p, 2)[2]) == "{B.kab^2}kas");
  for (const TermPtr& m : run1) CHECK(vars(m).empty());
}

TEST_CASE("deduction never lowers a rating on the fixture messages") {
  Fixture f = load();
  std::vector<TermPtr> M = observable(f);
  for (FunctionSelector sel :
       {FunctionSelector::max, FunctionSelector::n, FunctionSelector::ek}) {
    std::vector<InvariantCounterexample> bad = check_invariant_by_intruder(sel, M, f.ctx, 3);
    CHECK(bad.empty());
  }
}

TEST_CASE("a rating function that forgets encryption is caught") {
  TypingContext ctx;
  ctx.principals = {"A", "B"};
  ctx.levels["a"] = lv({"A"});
  ctx.levels["k"] = lv({"B"});
  ctx.keys.declare_symmetric("k");
  std::vector<TermPtr> M = {Term::enc(nonce("a"), key("k")), key("k")};

  // Rates an atom low only when it is the whole message, so unpacking one
  // layer of encryption "raises" its level; no sound rating may do that.
  Rater broken = [](const Atom& a, const std::vector<TermPtr>& ms) {
    for (const TermPtr& m : ms)
      if (m->kind() == TermKind::atom && m->atom() == a) return SecurityLevel::bottom();
    return SecurityLevel::top();
  };

  std::vector<InvariantCounterexample> bad = check_invariant_by_intruder(broken, M, ctx, 2);
  REQUIRE(bad.size() == 1);
  CHECK(render(bad[0].m) == "a");
  CHECK(bad[0].alpha.name == "a");
  CHECK(bad[0].on_m.is_bottom());
  CHECK(bad[0].on_set.is_top());

  CHECK(check_invariant_by_intruder(FunctionSelector::max, M, ctx, 2).empty());

  // A public atom escapes: the intruder may learn what it is cleared for.
  TypingContext pub = ctx;
  pub.levels["a"] = SecurityLevel::bottom();
  CHECK(check_invariant_by_intruder(broken, M, pub, 2).empty());
}

TEST_CASE("simulation keeps the repaired exchange tight") {
  Fixture f = load();
  SimResult r = simulate(f.p);
  CHECK(r.leaked.empty());
  CHECK(r.states > 0);
}

TEST_CASE("simulation exposes the cleartext variant") {
  Fixture f = load("/woolam_leak.wl");
  SimResult r = simulate(f.p);
  REQUIRE(!r.leaked.empty());
  CHECK(r.leaked.begin()->name == "kab");
  CHECK(r.leaked.begin()->run.has_value());
}

TEST_CASE("simulation at depth zero only fires the opening sends") {
  Fixture f = load();
  SimOptions opt;
  opt.depth = 0;
  SimResult r = simulate(f.p, opt);
  CHECK(r.states == 1);
  CHECK(r.leaked.empty());
  CHECK(!r.truncated);
}

TEST_CASE("simulation results are reproducible") {
  Fixture f = load("/woolam_leak.wl");
  SimResult a = simulate(f.p);
  SimResult b = simulate(f.p);
  CHECK(a.states == b.states);
  CHECK(a.truncated == b.truncated);
  CHECK(a.leaked == b.leaked);
}
