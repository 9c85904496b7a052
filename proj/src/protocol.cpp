#include "wfc/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wfc {

namespace {

struct Tok {
  enum Kind { ident, number, punct, end };
  Kind kind = end;
  std::string text;
  int col = 0;
};

struct LineError {
  int col;
  std::string message;
};

std::vector<Tok> lex_line(const std::string& line) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    int col = static_cast<int>(i) + 1;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_'))
        ++j;
      out.push_back({Tok::ident, line.substr(i, j - i), col});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      out.push_back({Tok::number, line.substr(i, j - i), col});
      i = j;
    } else if (c == '-' && i + 1 < line.size() && line[i + 1] == '>') {
      out.push_back({Tok::punct, "->", col});
      i += 2;
    } else if (c == '{' || c == '}' || c == ',' || c == ':') {
      out.push_back({Tok::punct, std::string(1, c), col});
      ++i;
    } else {
      throw LineError{col, std::string("unexpected character '") + c + "'"};
    }
  }
  out.push_back({Tok::end, "", static_cast<int>(line.size()) + 1});
  return out;
}

struct Cursor {
  const std::vector<Tok>* toks;
  std::size_t at = 0;
  const Tok& peek() const { return (*toks)[at]; }
  Tok take() { return (*toks)[at == toks->size() - 1 ? at : at++]; }
  bool at_end() const { return peek().kind == Tok::end; }

  std::string expect_ident(const char* what) {
    if (peek().kind != Tok::ident)
      throw LineError{peek().col, std::string("expected ") + what};
    return take().text;
  }
  int expect_number(const char* what) {
    if (peek().kind != Tok::number)
      throw LineError{peek().col, std::string("expected ") + what};
    return std::stoi(take().text);
  }
  void expect_punct(const std::string& p) {
    if (peek().kind != Tok::punct || peek().text != p)
      throw LineError{peek().col, "expected '" + p + "'"};
    take();
  }
  bool accept_punct(const std::string& p) {
    if (peek().kind == Tok::punct && peek().text == p) {
      take();
      return true;
    }
    return false;
  }
  void expect_keyword(const char* kw) {
    if (peek().kind != Tok::ident || peek().text != kw)
      throw LineError{peek().col, std::string("expected '") + kw + "'"};
    take();
  }
  void expect_done() {
    if (!at_end()) throw LineError{peek().col, "trailing input"};
  }
};

// Resolves identifiers while a payload term is being parsed. The protocol
// payload resolver rejects unknown names; the query resolver turns them into
// variables instead.
struct TermResolver {
  virtual TermPtr resolve(const std::string& name, bool key_slot, int col) const = 0;
  virtual ~TermResolver() = default;
};

TermPtr parse_term(Cursor& c, const TermResolver& r);

TermPtr parse_elem(Cursor& c, const TermResolver& r) {
  if (c.accept_punct("{")) {
    TermPtr body = parse_term(c, r);
    c.expect_punct("}");
    int col = c.peek().col;
    std::string key = c.expect_ident("key name after '}'");
    return Term::enc(body, r.resolve(key, true, col));
  }
  int col = c.peek().col;
  std::string id = c.expect_ident("term");
  return r.resolve(id, false, col);
}

TermPtr parse_term(Cursor& c, const TermResolver& r) {
  std::vector<TermPtr> elems;
  elems.push_back(parse_elem(c, r));
  while (c.accept_punct(",")) elems.push_back(parse_elem(c, r));
  TermPtr t = elems.back();
  for (std::size_t i = elems.size() - 1; i-- > 0;) t = Term::pair(elems[i], t);
  return t;
}

struct ProtocolResolver : TermResolver {
  const Protocol* p;
  explicit ProtocolResolver(const Protocol& pr) : p(&pr) {}
  TermPtr resolve(const std::string& name, bool key_slot, int col) const override {
    auto a = p->atom_for(name);
    if (!a) throw LineError{col, "undeclared identifier '" + name + "'"};
    if (key_slot && a->sort != Sort::key)
      throw LineError{col, "'" + name + "' is not a key"};
    return Term::make(*a);
  }
};

struct QueryResolver : TermResolver {
  const Protocol* p;
  explicit QueryResolver(const Protocol& pr) : p(&pr) {}
  TermPtr resolve(const std::string& name, bool key_slot, int col) const override {
    auto a = p->atom_for(name);
    if (a) {
      if (key_slot && a->sort != Sort::key)
        throw LineError{col, "'" + name + "' is not a key"};
      Atom out = *a;
      if (p->find_fresh(name)) out.session = true;
      return Term::make(out);
    }
    return Term::make(Variable{name, key_slot ? Sort::key : Sort::any, {}});
  }
};

SecurityLevel parse_level_set(Cursor& c, const Protocol& p) {
  c.expect_punct("{");
  std::set<std::string> names;
  while (true) {
    int col = c.peek().col;
    std::string id = c.expect_ident("principal name");
    if (!p.is_agent(id) && id != "I")
      throw LineError{col, "undeclared principal '" + id + "' in level set"};
    names.insert(id);
    if (!c.accept_punct(",")) break;
  }
  c.expect_punct("}");
  return SecurityLevel::of(std::move(names));
}

}  // namespace

std::string Diagnostic::display() const {
  std::ostringstream os;
  os << (severity == Severity::error ? "error" : "warning") << " at " << line << ":" << col
     << ": " << message;
  return os.str();
}

bool Protocol::is_agent(const std::string& n) const {
  return std::find(agents.begin(), agents.end(), n) != agents.end();
}

const KeyDecl* Protocol::find_key(const std::string& n) const {
  for (const auto& k : keys)
    if (k.name == n) return &k;
  return nullptr;
}

const FreshDecl* Protocol::find_fresh(const std::string& n) const {
  for (const auto& f : fresh)
    if (f.name == n) return &f;
  return nullptr;
}

std::optional<Atom> Protocol::atom_for(const std::string& n) const {
  if (is_agent(n)) return Atom{n, Sort::principal, false, {}, {}};
  if (const KeyDecl* k = find_key(n)) {
    (void)k;
    return Atom{n, Sort::key, false, {}, {}};
  }
  if (const FreshDecl* f = find_fresh(n)) return Atom{n, f->sort, false, {}, {}};
  return std::nullopt;
}

TypingContext Protocol::context() const {
  TypingContext ctx;
  for (const auto& a : agents) {
    ctx.levels.emplace(a, SecurityLevel::bottom());
    ctx.principals.insert(a);
  }
  for (const auto& k : keys) {
    ctx.levels.emplace(k.name, k.level);
    if (k.symmetric)
      ctx.keys.declare_symmetric(k.name);
    else
      ctx.keys.declare_pair(k.name, k.inverse);
  }
  for (const auto& f : fresh) ctx.levels.emplace(f.name, f.level);
  auto it = knows.find("I");
  if (it != knows.end())
    for (const auto& n : it->second)
      if (auto a = atom_for(n)) ctx.intruder_atoms.push_back(*a);
  return ctx;
}

std::set<Atom> Protocol::initial_knowledge(const std::string& agent) const {
  std::set<Atom> out;
  for (const auto& a : agents) out.insert(Atom{a, Sort::principal, false, {}, {}});
  auto it = knows.find(agent);
  if (it != knows.end()) {
    for (const auto& n : it->second)
      if (auto a = atom_for(n)) out.insert(*a);
    return out;
  }
  for (const auto& k : keys) {
    bool party = k.level.is_bottom() ||
                 (k.level.is_finite() && k.level.principals().count(agent) > 0);
    if (party) out.insert(Atom{k.name, Sort::key, false, {}, {}});
  }
  return out;
}

ParseResult parse(std::string_view text) {
  Protocol p;
  std::vector<Diagnostic> diags;
  bool saw_header = false;
  int last_index = 0;

  auto error = [&](int line, int col, std::string msg) {
    diags.push_back({Diagnostic::Severity::error, line, col, std::move(msg)});
  };

  std::map<std::string, int> declared;  // name -> declaration line
  auto declare = [&](const std::string& name, int line) {
    auto [it, fresh_name] = declared.emplace(name, line);
    if (!fresh_name)
      throw LineError{1, "duplicate declaration of '" + name + "' (first at line " +
                             std::to_string(it->second) + ")"};
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::vector<Tok> toks;
    try {
      toks = lex_line(raw);
    } catch (const LineError& e) {
      error(lineno, e.col, e.message);
      continue;
    }
    Cursor c{&toks};
    if (c.at_end()) continue;
    try {
      std::string head = c.expect_ident("directive");
      if (head == "protocol") {
        if (saw_header) throw LineError{c.peek().col, "duplicate protocol header"};
        p.name = c.expect_ident("protocol name");
        saw_header = true;
      } else if (head == "agents") {
        if (!p.agents.empty()) throw LineError{c.peek().col, "duplicate agents line"};
        while (!c.at_end()) {
          int col = c.peek().col;
          std::string a = c.expect_ident("agent name");
          (void)col;
          declare(a, lineno);
          p.agents.push_back(a);
        }
        if (p.agents.empty()) throw LineError{c.peek().col, "agents line needs at least one name"};
      } else if (head == "symkey" || head == "asymkey") {
        KeyDecl k;
        k.line = lineno;
        k.name = c.expect_ident("key name");
        if (head == "asymkey") {
          k.inverse = c.expect_ident("inverse key name");
          k.symmetric = false;
        } else {
          k.inverse = k.name;
        }
        c.expect_keyword("level");
        k.level = parse_level_set(c, p);
        declare(k.name, lineno);
        p.keys.push_back(std::move(k));
      } else if (head == "fresh") {
        FreshDecl f;
        f.line = lineno;
        std::string sort = c.expect_ident("'nonce' or 'key'");
        if (sort == "nonce")
          f.sort = Sort::nonce;
        else if (sort == "key")
          f.sort = Sort::key;
        else
          throw LineError{c.peek().col, "fresh sort must be 'nonce' or 'key'"};
        f.name = c.expect_ident("fresh value name");
        c.expect_keyword("by");
        int bycol = c.peek().col;
        f.by = c.expect_ident("generating agent");
        if (!p.is_agent(f.by)) throw LineError{bycol, "undeclared agent '" + f.by + "'"};
        c.expect_keyword("level");
        if (c.peek().kind == Tok::ident && c.peek().text == "public") {
          c.take();
          f.level = SecurityLevel::bottom();
        } else {
          f.level = parse_level_set(c, p);
        }
        declare(f.name, lineno);
        p.fresh.push_back(std::move(f));
      } else if (head == "knows") {
        int col = c.peek().col;
        std::string who = c.expect_ident("agent name");
        if (!p.is_agent(who) && who != "I")
          throw LineError{col, "undeclared agent '" + who + "'"};
        c.expect_punct(":");
        std::vector<std::string> names;
        while (true) {
          int acol = c.peek().col;
          std::string n = c.expect_ident("atom name");
          if (!p.atom_for(n)) throw LineError{acol, "undeclared identifier '" + n + "'"};
          names.push_back(n);
          if (!c.accept_punct(",")) break;
        }
        p.knows[who] = std::move(names);
      } else if (head == "msg") {
        Step s;
        s.line = lineno;
        int icol = c.peek().col;
        s.index = c.expect_number("step index");
        if (s.index <= last_index)
          throw LineError{icol, "step index " + std::to_string(s.index) +
                                    " does not increase (previous " +
                                    std::to_string(last_index) + ")"};
        int scol = c.peek().col;
        s.sender = c.expect_ident("sender");
        if (!p.is_agent(s.sender)) throw LineError{scol, "undeclared agent '" + s.sender + "'"};
        c.expect_punct("->");
        int rcol = c.peek().col;
        s.receiver = c.expect_ident("receiver");
        if (!p.is_agent(s.receiver))
          throw LineError{rcol, "undeclared agent '" + s.receiver + "'"};
        if (s.receiver == s.sender)
          throw LineError{rcol, "sender and receiver must differ"};
        c.expect_punct(":");
        ProtocolResolver r{p};
        s.payload = parse_term(c, r);
        last_index = s.index;
        p.steps.push_back(std::move(s));
      } else if (head == "secret") {
        while (true) {
          int col = c.peek().col;
          std::string n = c.expect_ident("atom name");
          auto a = p.atom_for(n);
          if (!a) throw LineError{col, "undeclared identifier '" + n + "'"};
          p.secrets.push_back(*a);
          if (!c.accept_punct(",")) break;
        }
      } else {
        throw LineError{1, "unknown directive '" + head + "'"};
      }
      c.expect_done();
    } catch (const LineError& e) {
      error(lineno, e.col, e.message);
    }
  }

  if (!saw_header) error(lineno, 1, "missing 'protocol' header");

  for (const auto& d : diags)
    if (d.severity == Diagnostic::Severity::error) return {std::nullopt, diags};
  return {std::move(p), diags};
}

ParseResult parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return {std::nullopt,
            {{Diagnostic::Severity::error, 0, 0, "cannot open '" + path + "'"}}};
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<Diagnostic> validate(const Protocol& p) {
  std::vector<Diagnostic> out;
  auto error = [&](int line, std::string msg) {
    out.push_back({Diagnostic::Severity::error, line, 0, std::move(msg)});
  };
  auto warning = [&](int line, std::string msg) {
    out.push_back({Diagnostic::Severity::warning, line, 0, std::move(msg)});
  };

  for (const auto& k : p.keys) {
    if (k.symmetric) continue;
    const KeyDecl* inv = p.find_key(k.inverse);
    if (!inv)
      error(k.line, "inverse key '" + k.inverse + "' of '" + k.name + "' is not declared");
    else if (inv->inverse != k.name)
      error(k.line, "keys '" + k.name + "' and '" + k.inverse + "' do not form an inverse pair");
  }

  int last = 0;
  for (const auto& s : p.steps) {
    if (s.index <= last) error(s.line, "step indices must be strictly increasing");
    last = s.index;
    if (!p.is_agent(s.sender) || !p.is_agent(s.receiver))
      error(s.line, "steps must connect declared agents");
    else if (s.sender == s.receiver)
      error(s.line, "sender and receiver must differ");
    for (const Atom& a : atoms(s.payload))
      if (!p.atom_for(a.name)) error(s.line, "undeclared atom '" + a.name + "' in payload");
  }

  // A fresh value enters the run in a message its generator sends.
  for (const auto& f : p.fresh) {
    for (const auto& s : p.steps) {
      bool occurs = false;
      for (const Atom& a : atoms(s.payload))
        if (a.name == f.name) occurs = true;
      if (!occurs) continue;
      if (s.sender != f.by)
        error(s.line, "fresh value '" + f.name + "' first appears in a message sent by '" +
                          s.sender + "', not its generator '" + f.by + "'");
      break;
    }
  }

  for (const Atom& sec : p.secrets) {
    if (!p.atom_for(sec.name)) {
      error(0, "secret '" + sec.name + "' is not declared");
      continue;
    }
    auto lvl = p.context().level_of(sec);
    if (lvl && lvl->is_bottom())
      warning(0, "secret '" + sec.name + "' has a public level");
  }

  return out;
}

namespace {

std::string render_dsl_term(const TermPtr& t) {
  switch (t->kind()) {
    case TermKind::atom: return t->atom().name;
    case TermKind::var: return t->var().display();
    case TermKind::pair: return render_dsl_term(t->left()) + ", " + render_dsl_term(t->right());
    case TermKind::enc:
      return "{" + render_dsl_term(t->body()) + "}" + render_dsl_term(t->key());
    default: return "eps";
  }
}

std::string render_level(const SecurityLevel& l) {
  if (l.is_bottom()) return "public";
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& n : l.principals()) {
    os << (first ? "" : ",") << n;
    first = false;
  }
  os << "}";
  return os.str();
}

}  // namespace

std::string render(const Protocol& p) {
  std::ostringstream os;
  os << "protocol " << p.name << "\n";
  os << "agents";
  for (const auto& a : p.agents) os << " " << a;
  os << "\n";
  for (const auto& k : p.keys) {
    if (k.symmetric)
      os << "symkey " << k.name << " level " << render_level(k.level) << "\n";
    else
      os << "asymkey " << k.name << " " << k.inverse << " level " << render_level(k.level)
         << "\n";
  }
  for (const auto& f : p.fresh)
    os << "fresh " << (f.sort == Sort::nonce ? "nonce" : "key") << " " << f.name << " by "
       << f.by << " level " << render_level(f.level) << "\n";
  for (const auto& [who, names] : p.knows) {
    os << "knows " << who << " :";
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? ", " : " ") << names[i];
    os << "\n";
  }
  for (const auto& s : p.steps)
    os << "msg " << s.index << " " << s.sender << " -> " << s.receiver << " : "
       << render_dsl_term(s.payload) << "\n";
  if (!p.secrets.empty()) {
    os << "secret";
    for (std::size_t i = 0; i < p.secrets.size(); ++i)
      os << (i ? ", " : " ") << p.secrets[i].name;
    os << "\n";
  }
  return os.str();
}

TermPtr parse_term_in(const Protocol& p, std::string_view text) {
  std::vector<Tok> toks;
  try {
    toks = lex_line(std::string(text));
    Cursor c{&toks};
    QueryResolver r{p};
    TermPtr t = parse_term(c, r);
    c.expect_done();
    return t;
  } catch (const LineError& e) {
    throw std::invalid_argument("term syntax error at column " + std::to_string(e.col) + ": " +
                                e.message);
  }
}

}  // namespace wfc
