#include "wfc/safe_functions.hpp"

#include <functional>

namespace wfc {

std::string to_string(FunctionSelector sel) {
  switch (sel) {
    case FunctionSelector::max: return "max";
    case FunctionSelector::n: return "n";
    default: return "ek";
  }
}

std::optional<FunctionSelector> selector_from_name(const std::string& name) {
  if (name == "max") return FunctionSelector::max;
  if (name == "n") return FunctionSelector::n;
  if (name == "ek") return FunctionSelector::ek;
  return std::nullopt;
}

namespace {

TermPtr derive_rec(const TermPtr& m, const std::set<Variable>& remove) {
  switch (m->kind()) {
    case TermKind::var:
      return remove.count(m->var()) ? Term::empty() : m;
    case TermKind::pair: {
      TermPtr l = derive_rec(m->left(), remove);
      TermPtr r = derive_rec(m->right(), remove);
      return Term::pair(std::move(l), std::move(r));
    }
    case TermKind::enc:
      // A removed variable in the key slot takes the whole block with it.
      if (m->key()->kind() == TermKind::var && remove.count(m->key()->var()))
        return Term::empty();
      return Term::enc(derive_rec(m->body(), remove), m->key());
    default:
      return m;
  }
}

}  // namespace

TermPtr derive(const TermPtr& m, const std::set<Variable>& remove) {
  return derive_rec(m, remove);
}

TermPtr derive_keep(const TermPtr& m, const Atom&) {
  return derive_rec(m, vars(m));
}

TermPtr derive_keep(const TermPtr& m, const Variable& keep) {
  std::set<Variable> remove = vars(m);
  remove.erase(keep);
  return derive_rec(m, remove);
}

namespace {

// Encryption nodes crossed on the way to a payload position, outermost first.
std::vector<TermPtr> enclosing_encryptions(const TermPtr& m, const Path& p) {
  std::vector<TermPtr> out;
  TermPtr cur = m;
  for (std::uint8_t step : p) {
    if (cur->kind() == TermKind::enc && step == 0) out.push_back(cur);
    cur = step == 0 ? cur->left() : cur->right();
  }
  return out;
}

std::set<std::string> neighborhood_of(const TermPtr& enc_node, const Atom* excluded) {
  std::set<std::string> out;
  for (const Atom& a : atoms(enc_node->body()))
    if (a.sort == Sort::principal && !(excluded && a == *excluded)) out.insert(a.name);
  return out;
}

SecurityLevel inverse_level(const Atom& key, const TypingContext& ctx) {
  std::optional<SecurityLevel> l = ctx.level_of_inverse(key);
  if (!l) throw MissingLevel(key.display());
  return *l;
}

// Shared by the atom and variable entry points. An unknown target level makes
// every enclosing key a candidate.
std::vector<ProtectionSite> sites_at(const std::vector<Path>& occurrences,
                                     const TermPtr& m,
                                     const std::optional<SecurityLevel>& target_level,
                                     const Atom* excluded, const TypingContext& ctx) {
  std::vector<ProtectionSite> out;
  for (const Path& occ : occurrences) {
    bool skipped_outer = false;
    for (const TermPtr& enc_node : enclosing_encryptions(m, occ)) {
      // A variable in the key slot is not a rateable protection.
      if (enc_node->key()->kind() != TermKind::atom) {
        skipped_outer = true;
        continue;
      }
      const Atom& key = enc_node->key()->atom();
      if (target_level && !geq(inverse_level(key, ctx), *target_level)) {
        skipped_outer = true;
        continue;
      }
      out.push_back({occ, key, neighborhood_of(enc_node, excluded), skipped_outer});
      if (target_level) break;  // only the outermost protective key counts
    }
  }
  return out;
}

SecurityLevel rate_sites(FunctionSelector sel, const std::vector<Path>& occurrences,
                         const std::vector<ProtectionSite>& sites, const TypingContext& ctx) {
  SecurityLevel acc = SecurityLevel::top();
  for (const Path& occ : occurrences) {
    bool covered = false;
    for (const ProtectionSite& site : sites) {
      if (site.occurrence != occ) continue;
      covered = true;
      SecurityLevel value;
      switch (sel) {
        case FunctionSelector::max:
          value = meet(inverse_level(site.candidate_key, ctx),
                       SecurityLevel::of(site.neighborhood));
          break;
        case FunctionSelector::n:
          value = SecurityLevel::of(site.neighborhood);
          break;
        default:
          value = inverse_level(site.candidate_key, ctx);
      }
      acc = meet(acc, value);
    }
    if (!covered) return SecurityLevel::bottom();
  }
  return acc;
}

}  // namespace

std::vector<ProtectionSite> protective_sites(const Atom& target, const TermPtr& m,
                                             const TypingContext& ctx) {
  return sites_at(payload_occurrences(m, target), m, ctx.level_of(target), &target, ctx);
}

std::vector<ProtectionSite> protective_sites(const Variable& target, const TermPtr& m,
                                             const TypingContext& ctx) {
  return sites_at(payload_occurrences(m, target), m, std::nullopt, nullptr, ctx);
}

SecurityLevel evaluate_F(FunctionSelector sel, const Atom& target, const TermPtr& m,
                         const TypingContext& ctx) {
  std::vector<Path> occs = payload_occurrences(m, target);
  if (occs.empty()) return SecurityLevel::top();
  return rate_sites(sel, occs, sites_at(occs, m, ctx.level_of(target), &target, ctx), ctx);
}

SecurityLevel evaluate_F(FunctionSelector sel, const Variable& target, const TermPtr& m,
                         const TypingContext& ctx) {
  std::vector<Path> occs = payload_occurrences(m, target);
  if (occs.empty()) return SecurityLevel::top();
  return rate_sites(sel, occs, sites_at(occs, m, std::nullopt, nullptr, ctx), ctx);
}

namespace {

template <typename T>
SecurityLevel evaluate_set(FunctionSelector sel, const T& target,
                           const std::vector<TermPtr>& ms, const TypingContext& ctx) {
  SecurityLevel acc = SecurityLevel::top();
  for (const TermPtr& m : ms) acc = meet(acc, evaluate_F(sel, target, m, ctx));
  return acc;
}

}  // namespace

SecurityLevel evaluate_F(FunctionSelector sel, const Atom& target,
                         const std::vector<TermPtr>& ms, const TypingContext& ctx) {
  return evaluate_set(sel, target, ms, ctx);
}

SecurityLevel evaluate_F(FunctionSelector sel, const Variable& target,
                         const std::vector<TermPtr>& ms, const TypingContext& ctx) {
  return evaluate_set(sel, target, ms, ctx);
}

namespace {

Substitution params_only(const Substitution& s) {
  Substitution out;
  for (const auto& [p, t] : s.param_map()) out.bind(p, t);
  return out;
}

// Payload positions of the origin whose full image under the mgu equals the
// wanted image; matched subtrees are not descended into.
void image_positions(const TermPtr& origin, const Substitution& mgu,
                     const TermPtr& wanted, Path& here, std::vector<Path>& out) {
  if (equal(substitute(origin, mgu), wanted)) {
    out.push_back(here);
    return;
  }
  if (origin->kind() == TermKind::pair) {
    here.push_back(0);
    image_positions(origin->left(), mgu, wanted, here, out);
    here.back() = 1;
    image_positions(origin->right(), mgu, wanted, here, out);
    here.pop_back();
  } else if (origin->kind() == TermKind::enc) {
    here.push_back(0);
    image_positions(origin->body(), mgu, wanted, here, out);
    here.pop_back();
  }
}

TermPtr replace_at(const TermPtr& m, const Path& p, std::size_t i, const TermPtr& repl) {
  if (i == p.size()) return repl;
  if (m->kind() == TermKind::pair) {
    if (p[i] == 0) return Term::pair(replace_at(m->left(), p, i + 1, repl), m->right());
    return Term::pair(m->left(), replace_at(m->right(), p, i + 1, repl));
  }
  return Term::enc(replace_at(m->body(), p, i + 1, repl), m->key());
}

// Rates a composite image as one opaque unit sitting at its positions in the
// origin; its contents stay invisible to the neighborhood.
SecurityLevel rate_opaque_block(FunctionSelector sel, const TermPtr& origin,
                                const Substitution& mgu, const TermPtr& image,
                                const TypingContext& ctx) {
  std::vector<Path> paths;
  Path here;
  image_positions(origin, mgu, image, here, paths);
  // A bound image always comes from somewhere in the origin; stay low if the
  // position cannot be reconstructed.
  if (paths.empty()) return SecurityLevel::bottom();
  Variable mask{"_block", Sort::any, {}};
  TermPtr masked = origin;
  for (const Path& p : paths) masked = replace_at(masked, p, 0, Term::make(mask));
  TermPtr st = substitute(masked, params_only(mgu));
  return evaluate_F(sel, mask, derive_keep(st, mask), ctx);
}

}  // namespace

std::optional<SecurityLevel> F_on_derivative(FunctionSelector sel, const Atom& subject,
                                             const TermPtr& origin, const Substitution& mgu,
                                             const TypingContext& ctx) {
  TermPtr st = substitute(origin, params_only(mgu));
  TermPtr stat = derive_keep(st, subject);
  if (!payload_occurrences(stat, subject).empty())
    return evaluate_F(sel, subject, stat, ctx);
  std::optional<SecurityLevel> acc;
  for (const Variable& x : vars(st)) {
    std::optional<TermPtr> img = mgu.lookup(x);
    if (!img || !atoms(*img).count(subject)) continue;
    SecurityLevel v = evaluate_F(sel, x, derive_keep(st, x), ctx);
    acc = acc ? meet(*acc, v) : v;
  }
  return acc;
}

std::optional<SecurityLevel> F_on_derivative(FunctionSelector sel, const Variable& subject,
                                             const TermPtr& origin, const Substitution& mgu,
                                             const TypingContext& ctx) {
  Substitution sp = params_only(mgu);
  TermPtr st = substitute(origin, sp);
  if (std::optional<TermPtr> img = mgu.lookup(subject)) {
    TermPtr t = substitute(*img, sp);
    if (t->kind() == TermKind::atom)
      return evaluate_F(sel, t->atom(), derive_keep(st, t->atom()), ctx);
    if (t->kind() == TermKind::var)
      return evaluate_F(sel, t->var(), derive_keep(st, t->var()), ctx);
    return rate_opaque_block(sel, origin, mgu, substitute(*img, mgu), ctx);
  }
  if (vars(origin).count(subject))
    return evaluate_F(sel, subject, derive_keep(st, subject), ctx);
  std::optional<SecurityLevel> acc;
  for (const Variable& x : vars(st)) {
    std::optional<TermPtr> img = mgu.lookup(x);
    if (!img) continue;
    bool carries = (*img)->kind() == TermKind::var && (*img)->var() == subject;
    if (!carries && !vars(*img).count(subject)) continue;
    SecurityLevel v = evaluate_F(sel, x, derive_keep(st, x), ctx);
    acc = acc ? meet(*acc, v) : v;
  }
  return acc;
}

}  // namespace wfc
