#include <CLI11.hpp>

#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "wfc/oracle.hpp"

using namespace wfc;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kBadInput = 2;
constexpr int kResourceBound = 3;

// Warnings go to stderr either way; errors mean there is no protocol.
std::optional<Protocol> load(const std::string& path) {
  ParseResult r = parse_file(path);
  for (const Diagnostic& d : r.diagnostics) std::cerr << path << ":" << d.display() << "\n";
  return r.protocol;
}

FunctionSelector selector(const std::string& name) { return *selector_from_name(name); }

int run_analyze(const std::string& path, const std::string& fn, const std::string& format,
                const std::string& context_path) {
  std::optional<Protocol> p = load(path);
  if (!p) return kBadInput;
  TypingContext ctx;
  if (context_path.empty()) {
    ctx = p->context();
  } else {
    std::optional<Protocol> cp = load(context_path);
    if (!cp) return kBadInput;
    ctx = cp->context();
  }
  AnalysisReport report = analyze(*p, selector(fn), ctx);
  std::cout << (format == "json" ? to_json(report) : render_table(report)) << "\n";
  return report.secure ? kOk : kViolation;
}

int run_roles(const std::string& path) {
  std::optional<Protocol> p = load(path);
  if (!p) return kBadInput;
  for (const GeneralizedRole& r : extract_roles(*p)) std::cout << render_role(r) << "\n";
  return kOk;
}

int run_origins(const std::string& path, const std::string& term_text) {
  std::optional<Protocol> p = load(path);
  if (!p) return kBadInput;
  TermPtr query = parse_term_in(*p, term_text);
  GeneralizedMessageSet mset = collect_generalized_messages(*p, extract_roles(*p));
  std::vector<Origin> found = origins(query, mset);
  std::cout << found.size() << (found.size() == 1 ? " origin" : " origins") << " of "
            << render(query) << "\n";
  for (const Origin& o : found)
    std::cout << "  " << render(o.entry) << "\n    " << o.mgu.display() << "\n";
  return kOk;
}

int run_eval(const std::string& context_path, const std::string& fn, const std::string& atom_name,
             const std::string& term_text) {
  std::optional<Protocol> p = load(context_path);
  if (!p) return kBadInput;
  std::optional<Atom> a = p->atom_for(atom_name);
  if (!a) {
    std::cerr << "'" << atom_name << "' is not a declared atom\n";
    return kBadInput;
  }
  if (p->find_fresh(atom_name)) a->session = true;
  TermPtr m = parse_term_in(*p, term_text);
  SecurityLevel level = evaluate_F(selector(fn), *a, m, p->context());
  std::cout << "F_" << fn << "(" << a->display() << ", " << render(m) << ") = " << level.display()
            << "\n";
  return kOk;
}

int run_oracle(const std::string& path, const std::string& fn, const std::string& format,
               int sessions, int depth, bool check_invariant) {
  std::optional<Protocol> p = load(path);
  if (!p) return kBadInput;

  if (check_invariant) {
    std::vector<TermPtr> M;
    for (int run = 1; run <= sessions; ++run)
      for (const TermPtr& m : concrete_messages(*p, run)) M.push_back(m);
    std::vector<InvariantCounterexample> bad =
        check_invariant_by_intruder(selector(fn), M, p->context(), depth);
    if (format == "json") {
      nlohmann::ordered_json j;
      j["protocol"] = p->name;
      j["mode"] = "invariant";
      j["function"] = fn;
      j["sessions"] = sessions;
      j["depth"] = depth;
      j["counterexamples"] = nlohmann::ordered_json::array();
      for (const InvariantCounterexample& c : bad)
        j["counterexamples"].push_back({{"message", render(c.m)},
                                        {"atom", c.alpha.display()},
                                        {"on_message", c.on_m.display()},
                                        {"on_set", c.on_set.display()}});
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << p->name << ": invariant check, F_" << fn << ", " << sessions << " sessions, depth "
                << depth << "\n";
      for (const InvariantCounterexample& c : bad)
        std::cout << "  " << c.alpha.display() << " in " << render(c.m) << ": rating drops from "
                  << c.on_set.display() << " to " << c.on_m.display() << "\n";
      std::cout << (bad.empty() ? "no counterexamples\n" : "");
    }
    return bad.empty() ? kOk : kViolation;
  }

  SimOptions opt;
  opt.sessions = sessions;
  opt.depth = depth;
  SimResult r = simulate(*p, opt);
  if (format == "json") {
    nlohmann::ordered_json j;
    j["protocol"] = p->name;
    j["mode"] = "simulate";
    j["sessions"] = sessions;
    j["depth"] = depth;
    j["states"] = r.states;
    j["truncated"] = r.truncated;
    j["leaked"] = nlohmann::ordered_json::array();
    for (const Atom& a : r.leaked) j["leaked"].push_back(a.display());
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << p->name << ": explored " << r.states << " states (" << sessions
              << " sessions, depth " << depth << ")"
              << (r.truncated ? ", truncated at state budget" : "") << "\n";
    if (r.leaked.empty()) {
      std::cout << "no secrets leaked\n";
    } else {
      std::cout << "leaked:";
      for (const Atom& a : r.leaked) std::cout << " " << a.display();
      std::cout << "\n";
    }
  }
  return r.leaked.empty() ? kOk : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Static secrecy analysis of key distribution protocols"};
  app.set_version_flag("--version", "wfcheck 1.0.0");
  app.require_subcommand(1);

  std::string path, fn = "max", format = "table", context_path, atom_name, term_text;
  int sessions = 2, depth = 4;
  bool check_invariant = false;
  auto is_fn = CLI::IsMember({"max", "n", "ek"});
  auto is_format = CLI::IsMember({"table", "json"});

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Verdict table for every send step");
  analyze_cmd->add_option("file", path, "protocol file")->required();
  analyze_cmd->add_option("--function", fn, "safe function")->check(is_fn);
  analyze_cmd->add_option("--format", format, "output format")->check(is_format);
  analyze_cmd->add_option("--context", context_path, "take levels from this protocol file");

  CLI::App* roles_cmd = app.add_subcommand("roles", "Print the generalized roles");
  roles_cmd->add_option("file", path, "protocol file")->required();

  CLI::App* origins_cmd = app.add_subcommand("origins", "Entries a message unifies with");
  origins_cmd->add_option("file", path, "protocol file")->required();
  origins_cmd->add_option("--term", term_text, "query message")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "Rate one atom in one message");
  eval_cmd->add_option("--context", context_path, "protocol file declaring the levels")
      ->required();
  eval_cmd->add_option("--function", fn, "safe function")->check(is_fn);
  eval_cmd->add_option("--atom", atom_name, "atom to rate")->required();
  eval_cmd->add_option("--term", term_text, "message to rate it in")->required();

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "Bounded intruder exploration");
  oracle_cmd->add_option("file", path, "protocol file")->required();
  oracle_cmd->add_option("--sessions", sessions, "concurrent runs")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--depth", depth, "receive rounds / closure depth")
      ->check(CLI::NonNegativeNumber);
  oracle_cmd->add_flag("--check-invariant", check_invariant,
                       "check that deduction cannot lower ratings");
  oracle_cmd->add_option("--function", fn, "safe function")->check(is_fn);
  oracle_cmd->add_option("--format", format, "output format")->check(is_format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }

  try {
    if (app.got_subcommand(analyze_cmd)) return run_analyze(path, fn, format, context_path);
    if (app.got_subcommand(roles_cmd)) return run_roles(path);
    if (app.got_subcommand(origins_cmd)) return run_origins(path, term_text);
    if (app.got_subcommand(eval_cmd)) return run_eval(context_path, fn, atom_name, term_text);
    return run_oracle(path, fn, format, sessions, depth, check_invariant);
  } catch (const ResourceBound& e) {
    std::cerr << "resource bound exceeded: " << e.what() << "\n";
    return kResourceBound;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kBadInput;
  }
}
