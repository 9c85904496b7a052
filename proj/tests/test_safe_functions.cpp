#include <doctest.h>

#include <random>

#include "wfc/safe_functions.hpp"
#include "wfc/unify.hpp"

using namespace wfc;

namespace {

struct Fixture {
  Protocol p;
  std::vector<GeneralizedRole> roles;
  GeneralizedMessageSet mset;
  TypingContext ctx;
};

Fixture load() {
  ParseResult r = parse_file(WFC_FIXTURE_DIR "/woolam.wl");
  REQUIRE(r.ok());
  Fixture f{*r.protocol, {}, {}, {}};
  f.roles = extract_roles(f.p);
  f.mset = collect_generalized_messages(f.p, f.roles);
  f.ctx = f.p.context();
  return f;
}

TermPtr term(const Fixture& f, const char* text) { return parse_term_in(f.p, text); }

SecurityLevel lv(std::set<std::string> names) { return SecurityLevel::of(std::move(names)); }

// A deputy identity D next to the usual three; alpha is the rated nonce.
TypingContext deputy_ctx() {
  TypingContext ctx;
  ctx.levels["alpha"] = lv({"A", "B", "S"});
  ctx.levels["kab"] = lv({"A", "B"});
  ctx.levels["kas"] = lv({"A", "S"});
  ctx.keys.declare_symmetric("kab");
  ctx.keys.declare_symmetric("kas");
  ctx.principals = {"A", "B", "S", "D"};
  return ctx;
}

TermPtr principal(const char* n) { return Term::make(Atom{n, Sort::principal, false, {}, {}}); }
TermPtr nonce(const char* n) { return Term::make(Atom{n, Sort::nonce, false, {}, {}}); }
TermPtr key(const char* n) { return Term::make(Atom{n, Sort::key, false, {}, {}}); }
TermPtr var(const char* n, Sort c = Sort::any) { return Term::make(Variable{n, c, {}}); }

const std::vector<FunctionSelector> kSelectors = {FunctionSelector::max, FunctionSelector::n,
                                                  FunctionSelector::ek};

}  // namespace

TEST_CASE("selector names round-trip") {
  for (FunctionSelector sel : kSelectors) CHECK(selector_from_name(to_string(sel)) == sel);
  CHECK_FALSE(selector_from_name("min").has_value());
}

TEST_CASE("derivation removes exactly the chosen variables") {
  Fixture f = load();
  TermPtr m = term(f, "{A, U, {B, V}kas}kbs");

  TermPtr dv = derive(m, {Variable{"V", Sort::any, {}}});
  CHECK(render(dv) == "{A.U.{B}kas}kbs");

  CHECK(render(derive(m, {Variable{"U", Sort::any, {}}, Variable{"V", Sort::any, {}}})) ==
        "{A.{B}kas}kbs");
  CHECK(equal(derive(m, {}), m));
  CHECK(equal(derive(var("X"), {Variable{"X", Sort::any, {}}}), Term::empty()));
  CHECK(equal(derive(nonce("a"), {Variable{"X", Sort::any, {}}}), nonce("a")));
}

TEST_CASE("derivation keeping one symbol") {
  Fixture f = load();
  Atom kab_i{"kab", Sort::key, true, {}, {}};

  CHECK(equal(derive_keep(var("X"), kab_i), Term::empty()));
  TermPtr kept = term(f, "{A, Nb, Y}kbs");
  CHECK(equal(derive_keep(kept, Variable{"Y", Sort::any, {}}), kept));
  CHECK(render(derive_keep(term(f, "{U, {A, V}kbs}kbs"), Variable{"V", Sort::any, {}})) ==
        "{{A.V}kbs}kbs");
  CHECK(render(derive_keep(term(f, "{B, kab, U}kas"), kab_i)) == "{B.kab^i}kas");
}

TEST_CASE("a removed key-slot variable erases its whole block") {
  TermPtr m = Term::enc(principal("A"), var("X", Sort::key));
  CHECK(equal(derive(m, {Variable{"X", Sort::key, {}}}), Term::empty()));
  CHECK(equal(derive(m, {Variable{"Y", Sort::key, {}}}), m));
}

TEST_CASE("protection site of a rated nonce under two keys") {
  TypingContext ctx = deputy_ctx();
  TermPtr m = Term::enc(
      Term::pair(principal("A"),
                 Term::enc(Term::pair(principal("S"), Term::pair(nonce("alpha"), principal("D"))),
                           key("kas"))),
      key("kab"));

  auto sites = protective_sites(Atom{"alpha", Sort::nonce, false, {}, {}}, m, ctx);
  REQUIRE(sites.size() == 1);
  CHECK(sites[0].candidate_key.name == "kab");
  CHECK(sites[0].neighborhood == std::set<std::string>{"A", "S", "D"});
  CHECK_FALSE(sites[0].shadowed);

  CHECK(evaluate_F(FunctionSelector::max, Atom{"alpha", Sort::nonce, false, {}, {}}, m, ctx) ==
        lv({"A", "B", "S", "D"}));
  CHECK(evaluate_F(FunctionSelector::n, Atom{"alpha", Sort::nonce, false, {}, {}}, m, ctx) ==
        lv({"A", "S", "D"}));
  CHECK(evaluate_F(FunctionSelector::ek, Atom{"alpha", Sort::nonce, false, {}, {}}, m, ctx) ==
        lv({"A", "B"}));
}

TEST_CASE("every enclosing key rates an unknown-level block") {
  Fixture f = load();
  TermPtr m = term(f, "{A, {B, V}kas}kbs");
  auto sites = protective_sites(Variable{"V", Sort::any, {}}, m, f.ctx);
  REQUIRE(sites.size() == 2);
  std::set<std::string> keys{sites[0].candidate_key.name, sites[1].candidate_key.name};
  CHECK(keys == std::set<std::string>{"kas", "kbs"});

  CHECK(protective_sites(Atom{"alpha", Sort::nonce, false, {}, {}},
                         Term::make(Atom{"alpha", Sort::nonce, false, {}, {}}), deputy_ctx())
            .empty());
}

TEST_CASE("rating the fixture session key inside its transport message") {
  Fixture f = load();
  Atom kab_i{"kab", Sort::key, true, {}, {}};
  TermPtr m = term(f, "{B, kab}kas");
  CHECK(evaluate_F(FunctionSelector::max, kab_i, m, f.ctx) == lv({"A", "B", "S"}));
  CHECK(evaluate_F(FunctionSelector::n, kab_i, m, f.ctx) == lv({"B"}));
  CHECK(evaluate_F(FunctionSelector::ek, kab_i, m, f.ctx) == lv({"A", "S"}));

  CHECK(evaluate_F(FunctionSelector::max, kab_i, Term::empty(), f.ctx).is_top());
  CHECK(evaluate_F(FunctionSelector::max, Variable{"Y", Sort::any, {}}, var("Y"), f.ctx)
            .is_bottom());
}

TEST_CASE("unknown-level blocks in the relayed server input") {
  Fixture f = load();
  TermPtr m = term(f, "{A, U, {B, V}kas}kbs");
  CHECK(evaluate_F(FunctionSelector::max, Variable{"V", Sort::any, {}}, m, f.ctx) ==
        lv({"A", "B", "S"}));
  CHECK(evaluate_F(FunctionSelector::max, Variable{"U", Sort::any, {}},
                   derive_keep(m, Variable{"U", Sort::any, {}}), f.ctx) == lv({"A", "B", "S"}));
}

TEST_CASE("missing inverse-key level is reported only when consulted") {
  TypingContext ctx = deputy_ctx();
  TermPtr m = Term::enc(nonce("alpha"), key("kx"));
  CHECK_THROWS_WITH_AS(evaluate_F(FunctionSelector::max, Atom{"alpha", Sort::nonce, false, {}, {}},
                                  m, ctx),
                       "no declared level for the inverse of key 'kx'", MissingLevel);

  // An unknown-level subject under the N selector never needs key levels.
  TermPtr blocked = Term::enc(var("V"), key("kx"));
  CHECK(evaluate_F(FunctionSelector::n, Variable{"V", Sort::any, {}}, blocked, ctx).is_top());
  CHECK_THROWS_AS(evaluate_F(FunctionSelector::ek, Variable{"V", Sort::any, {}}, blocked, ctx),
                  MissingLevel);
}

TEST_CASE("protective key found below a non-protective one is flagged") {
  TypingContext ctx = deputy_ctx();
  ctx.levels["kweak"] = SecurityLevel::bottom();
  ctx.keys.declare_symmetric("kweak");
  TermPtr m = Term::enc(Term::enc(nonce("alpha"), key("kab")), key("kweak"));

  auto sites = protective_sites(Atom{"alpha", Sort::nonce, false, {}, {}}, m, ctx);
  REQUIRE(sites.size() == 1);
  CHECK(sites[0].candidate_key.name == "kab");
  CHECK(sites[0].shadowed);
  CHECK(evaluate_F(FunctionSelector::ek, Atom{"alpha", Sort::nonce, false, {}, {}}, m, ctx) ==
        lv({"A", "B"}));
}

namespace {

// Random closed terms over the deputy context's vocabulary.
struct Gen {
  std::mt19937 rng{20240831};
  std::vector<TermPtr> leaves{principal("A"), principal("B"), principal("S"), principal("D"),
                              nonce("alpha"), nonce("beta"), key("kab"), key("kas")};

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  TermPtr closed(int depth) {
    if (depth == 0 || pick(4) == 0) return leaves[pick((int)leaves.size())];
    if (pick(2) == 0) return Term::pair(closed(depth - 1), closed(depth - 1));
    return Term::enc(closed(depth - 1), pick(2) == 0 ? key("kab") : key("kas"));
  }

  TermPtr open(int depth) {
    int r = pick(5);
    if (depth == 0 || r == 0) return leaves[pick((int)leaves.size())];
    if (r == 1) return var(pick(2) == 0 ? "X" : "Y");
    if (r <= 3) return Term::pair(open(depth - 1), open(depth - 1));
    return Term::enc(open(depth - 1), pick(2) == 0 ? key("kab") : key("kas"));
  }
};

}  // namespace

TEST_CASE("well-built axioms hold on random closed terms") {
  TypingContext ctx = deputy_ctx();
  ctx.levels["beta"] = lv({"B", "D"});
  Gen g;
  Atom alpha{"alpha", Sort::nonce, false, {}, {}};
  for (int i = 0; i < 500; ++i) {
    TermPtr m1 = g.closed(3);
    TermPtr m2 = g.closed(3);
    for (FunctionSelector sel : kSelectors) {
      CHECK(evaluate_F(sel, alpha, std::vector<TermPtr>{Term::make(alpha)}, ctx).is_bottom());
      SecurityLevel joint = evaluate_F(sel, alpha, std::vector<TermPtr>{m1, m2}, ctx);
      CHECK(joint == meet(evaluate_F(sel, alpha, m1, ctx), evaluate_F(sel, alpha, m2, ctx)));
      Atom absent{"gamma", Sort::nonce, false, {}, {}};
      CHECK(evaluate_F(sel, absent, std::vector<TermPtr>{m1, m2}, ctx).is_top());
    }
  }
}

TEST_CASE("the combined function never rates above its two parts") {
  TypingContext ctx = deputy_ctx();
  ctx.levels["beta"] = lv({"B", "D"});
  Gen g;
  Atom alpha{"alpha", Sort::nonce, false, {}, {}};
  for (int i = 0; i < 500; ++i) {
    TermPtr m = g.closed(4);
    SecurityLevel fmax = evaluate_F(FunctionSelector::max, alpha, m, ctx);
    CHECK(geq(evaluate_F(FunctionSelector::ek, alpha, m, ctx), fmax));
    CHECK(geq(evaluate_F(FunctionSelector::n, alpha, m, ctx), fmax));
  }
}

TEST_CASE("derivation never introduces symbols") {
  Gen g;
  for (int i = 0; i < 500; ++i) {
    TermPtr m = g.open(4);
    std::set<Variable> remove;
    if (g.pick(2) == 0) remove.insert(Variable{"X", Sort::any, {}});
    if (g.pick(2) == 0) remove.insert(Variable{"Y", Sort::any, {}});
    TermPtr d = derive(m, remove);

    std::set<Atom> before = atoms(m);
    for (const Atom& a : atoms(d)) CHECK(before.count(a));
    std::set<Variable> expected = vars(m);
    for (const Variable& v : remove) expected.erase(v);
    for (const Variable& v : vars(d)) CHECK(expected.count(v));
    CHECK(equal(derive(d, remove), d));
  }
}

TEST_CASE("rating a subject through its origin entry") {
  Fixture f = load();
  Atom kab_i{"kab", Sort::key, true, {}, {}};

  // Static case: the session key sits in the transport entry itself.
  TermPtr query = f.roles[1].last().pattern;
  auto sigma = unify(f.mset.entries[2], query);
  REQUIRE(sigma.has_value());
  auto got = F_on_derivative(FunctionSelector::max, kab_i, f.mset.entries[2], *sigma, f.ctx);
  REQUIRE(got.has_value());
  CHECK(*got == lv({"A", "B", "S"}));

  // Block case: V arrives only inside the image of the relay entry's variable.
  TermPtr server_send = f.roles[5].last().pattern;
  auto sigma2 = unify(f.mset.entries[5], server_send);
  REQUIRE(sigma2.has_value());
  auto blocked = F_on_derivative(FunctionSelector::max, Variable{"V", Sort::any, {}},
                                 f.mset.entries[5], *sigma2, f.ctx);
  REQUIRE(blocked.has_value());
  CHECK(*blocked == lv({"A", "B", "S"}));

  auto direct = F_on_derivative(FunctionSelector::max, Variable{"V", Sort::any, {}},
                                f.mset.entries[7], *unify(f.mset.entries[7], server_send), f.ctx);
  REQUIRE(direct.has_value());
  CHECK(*direct == lv({"A", "B", "S"}));

  // Absent subject.
  CHECK_FALSE(F_on_derivative(FunctionSelector::max, Atom{"Nq", Sort::nonce, false, {}, {}},
                              f.mset.entries[2], *sigma, f.ctx)
                  .has_value());
}

TEST_CASE("a bare-variable origin rates everything bottom") {
  Fixture f = load();
  Atom kab_i{"kab", Sort::key, true, {}, {}};
  TermPtr entry = f.mset.entries[1];
  REQUIRE(entry->kind() == TermKind::var);
  auto sigma = unify(entry, Term::make(kab_i));
  REQUIRE(sigma.has_value());
  auto got = F_on_derivative(FunctionSelector::max, kab_i, entry, *sigma, f.ctx);
  REQUIRE(got.has_value());
  CHECK(got->is_bottom());
}

TEST_CASE("a variable bound to a composite is rated as one opaque block") {
  Fixture f = load();
  TermPtr query = f.roles[3].last().pattern;  // {A.Nb^i.Y}kbs
  Variable y{"Y", Sort::any, {}};

  auto s6 = unify(f.mset.entries[6], query);
  REQUIRE(s6.has_value());
  REQUIRE((*s6->lookup(y))->kind() == TermKind::enc);
  auto opaque = F_on_derivative(FunctionSelector::max, y, f.mset.entries[6], *s6, f.ctx);
  REQUIRE(opaque.has_value());
  CHECK(*opaque == lv({"A", "B", "S"}));

  auto s4 = unify(f.mset.entries[4], query);
  REQUIRE(s4.has_value());
  auto carried = F_on_derivative(FunctionSelector::max, y, f.mset.entries[4], *s4, f.ctx);
  REQUIRE(carried.has_value());
  CHECK(*carried == lv({"A", "B", "S"}));
}
