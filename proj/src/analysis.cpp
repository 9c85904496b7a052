#include "wfc/analysis.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <sstream>

namespace wfc {

std::string display(const Subject& s) {
  return std::visit([](const auto& v) { return v.display(); }, s);
}

SecurityLevel upper_bound(FunctionSelector sel, const Subject& subject, const TermPtr& m,
                          const TypingContext& ctx) {
  return std::visit(
      [&](const auto& v) { return evaluate_F(sel, v, derive_keep(m, v), ctx); }, subject);
}

SecurityLevel lower_bound(FunctionSelector sel, const Subject& subject, const TermPtr& m,
                          const GeneralizedMessageSet& mset, const TypingContext& ctx) {
  SecurityLevel acc = SecurityLevel::top();
  for (const Origin& o : origins(m, mset)) {
    std::optional<SecurityLevel> v = std::visit(
        [&](const auto& s) { return F_on_derivative(sel, s, o.entry, o.mgu, ctx); }, subject);
    if (v) acc = meet(acc, *v);
  }
  return acc;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ok: return "Ok";
    case Verdict::violation: return "Violation";
    default: return "Vacuous";
  }
}

StepVerdict check_step(const GeneralizedRole& role, std::size_t send_index,
                       const Subject& subject, FunctionSelector sel, const TypingContext& ctx,
                       const GeneralizedMessageSet& mset) {
  StepVerdict row;
  row.role = role.id();
  row.subject = subject;
  for (std::size_t i = 0; i < send_index; ++i)
    if (role.events[i].dir == RoleEvent::Dir::recv)
      row.received.push_back(role.events[i].pattern);
  row.sent = role.events[send_index].pattern;

  try {
    std::optional<SecurityLevel> declared;
    if (const Atom* a = std::get_if<Atom>(&subject)) declared = ctx.level_of(*a);
    row.rhs.includes_unknown = !declared.has_value();
    SecurityLevel rhs = declared ? *declared : SecurityLevel::top();
    for (const TermPtr& m : row.received) rhs = meet(rhs, upper_bound(sel, subject, m, ctx));
    row.rhs.level = rhs;

    row.lower = lower_bound(sel, subject, row.sent, mset, ctx);
    if (row.rhs.level.is_bottom())
      row.verdict = Verdict::vacuous;
    else
      row.verdict = geq(row.lower, row.rhs.level) ? Verdict::ok : Verdict::violation;
  } catch (const MissingLevel& e) {
    row.lower = SecurityLevel::bottom();
    row.rhs = {SecurityLevel::top(), true};
    row.verdict = Verdict::violation;
    row.notes.push_back(e.what());
  }
  return row;
}

namespace {

std::vector<Subject> subjects_for(const GeneralizedRole& role, std::size_t send_index) {
  const TermPtr& sent = role.events[send_index].pattern;
  std::vector<Subject> out;
  for (const Variable& v : vars_in_order(sent)) out.push_back(v);
  for (const Atom& a : atoms_in_order(sent)) {
    if (a.sort == Sort::principal) continue;
    if (payload_occurrences(sent, a).empty()) continue;  // key position only
    out.push_back(a);
  }
  std::set<Variable> covered = vars(sent);
  for (std::size_t i = 0; i < send_index; ++i) {
    if (role.events[i].dir != RoleEvent::Dir::recv) continue;
    for (const Variable& v : vars_in_order(role.events[i].pattern))
      if (covered.insert(v).second) out.push_back(v);
  }
  return out;
}

}  // namespace

AnalysisReport analyze(const Protocol& p, FunctionSelector sel) {
  return analyze(p, sel, p.context());
}

AnalysisReport analyze(const Protocol& p, FunctionSelector sel, const TypingContext& ctx) {
  AnalysisReport report;
  report.protocol = p.name;
  report.selector = sel;
  std::vector<GeneralizedRole> roles = extract_roles(p);
  GeneralizedMessageSet mset = collect_generalized_messages(p, roles);

  for (const GeneralizedRole& role : roles) {
    if (!role.ends_in_send()) continue;
    std::size_t send_index = role.events.size() - 1;
    for (const Subject& s : subjects_for(role, send_index))
      report.rows.push_back(check_step(role, send_index, s, sel, ctx, mset));
  }
  report.secure = std::none_of(report.rows.begin(), report.rows.end(),
                               [](const StepVerdict& r) { return r.verdict == Verdict::violation; });
  return report;
}

namespace {

std::string join_terms(const std::vector<TermPtr>& ts) {
  std::string out;
  for (const TermPtr& t : ts) {
    if (!out.empty()) out += ", ";
    out += render(t);
  }
  return out;
}

}  // namespace

std::string render_table(const AnalysisReport& r) {
  std::vector<std::array<std::string, 8>> cells;
  cells.push_back({"#", "alpha", "role", "R-", "r+", "lower", "rhs", "verdict"});
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const StepVerdict& row = r.rows[i];
    cells.push_back({std::to_string(i + 1), display(row.subject), row.role,
                     join_terms(row.received), render(row.sent), row.lower.display(),
                     row.rhs.level.display(), to_string(row.verdict)});
  }
  std::array<std::size_t, 8> width{};
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());

  std::ostringstream os;
  os << r.protocol << " under F_" << to_string(r.selector) << "\n";
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      os << line[c];
      if (c + 1 < line.size())
        os << std::string(width[c] - line[c].size(), ' ') << "  ";
    }
    os << "\n";
  }
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    for (const std::string& n : r.rows[i].notes) os << "note (row " << i + 1 << "): " << n << "\n";
  os << "overall: " << (r.secure ? "Secure" : "NotProved") << "\n";
  return os.str();
}

std::string to_json(const AnalysisReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const StepVerdict& row : r.rows) {
    nlohmann::json received = nlohmann::json::array();
    for (const TermPtr& t : row.received) received.push_back(render(t));
    nlohmann::json j{{"role", row.role},
                     {"atom", display(row.subject)},
                     {"received", received},
                     {"sent", render(row.sent)},
                     {"lower", row.lower.display()},
                     {"rhs", row.rhs.level.display()},
                     {"verdict", to_string(row.verdict)}};
    if (row.rhs.includes_unknown) j["rhs_includes_unknown"] = true;
    if (!row.notes.empty()) j["notes"] = row.notes;
    rows.push_back(std::move(j));
  }
  nlohmann::json j{{"protocol", r.protocol},
                   {"function", to_string(r.selector)},
                   {"rows", std::move(rows)},
                   {"overall", r.secure ? "Secure" : "NotProved"}};
  return j.dump(2);
}

}  // namespace wfc
