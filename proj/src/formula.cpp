#include "jointgibbs/formula.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>

namespace jointgibbs::formula {

// ---------------------------------------------------------------------------
// Function registry

FunctionRegistry::FunctionRegistry() {
  auto unary = [this](const char* name, double (*f)(double)) {
    add(name, 1, [f](std::span<const double> a) { return f(a[0]); });
  };
  unary("log", [](double x) { return std::log(x); });
  unary("exp", [](double x) { return std::exp(x); });
  unary("sqrt", [](double x) { return std::sqrt(x); });
  unary("abs", [](double x) { return std::fabs(x); });
  unary("sin", [](double x) { return std::sin(x); });
  unary("cos", [](double x) { return std::cos(x); });
  unary("I", [](double x) { return x; });
}

const FunctionRegistry& FunctionRegistry::builtin() {
  static const FunctionRegistry registry;
  return registry;
}

void FunctionRegistry::add(const std::string& name, std::size_t arity, Fn fn) {
  if (name == "Surv") throw ConfigError("cannot register reserved function name 'Surv'");
  entries_[name] = Entry{arity, std::move(fn)};
}

bool FunctionRegistry::contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

std::size_t FunctionRegistry::arity(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown function '" + std::string(name) + "'");
  return it->second.arity;
}

const FunctionRegistry::Fn& FunctionRegistry::function(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown function '" + std::string(name) + "'");
  return it->second.fn;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
  End,
  Ident,
  Number,
  String,
  Tilde,
  Plus,
  Minus,
  Star,
  Slash,
  Caret,
  Colon,
  Bar,
  LParen,
  RParen,
  Comma,
  Eq,
  Ne,
  Lt,
  Gt,
  Le,
  Ge,
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t offset = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '.' || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_'; }

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t{Tok::End, {}, 0.0, i};
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        }
      }
      std::string num(s.substr(i, j - i));
      char* end = nullptr;
      t.number = std::strtod(num.c_str(), &end);
      if (end != num.c_str() + num.size()) throw FormulaError("malformed number '" + num + "'", i);
      t.kind = Tok::Number;
      t.text = num;
      i = j;
    } else if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (c == '`') {
      std::size_t j = s.find('`', i + 1);
      if (j == std::string_view::npos) throw FormulaError("unterminated backquoted name", i);
      t.kind = Tok::Ident;
      t.text = std::string(s.substr(i + 1, j - i - 1));
      i = j + 1;
    } else if (c == '"' || c == '\'') {
      std::size_t j = s.find(c, i + 1);
      if (j == std::string_view::npos) throw FormulaError("unterminated string literal", i);
      t.kind = Tok::String;
      t.text = std::string(s.substr(i + 1, j - i - 1));
      i = j + 1;
    } else {
      auto two = s.substr(i, 2);
      if (two == "==") t.kind = Tok::Eq;
      else if (two == "!=") t.kind = Tok::Ne;
      else if (two == "<=") t.kind = Tok::Le;
      else if (two == ">=") t.kind = Tok::Ge;
      if (t.kind != Tok::End) {
        i += 2;
      } else {
        switch (c) {
          case '~': t.kind = Tok::Tilde; break;
          case '+': t.kind = Tok::Plus; break;
          case '-': t.kind = Tok::Minus; break;
          case '*': t.kind = Tok::Star; break;
          case '/': t.kind = Tok::Slash; break;
          case '^': t.kind = Tok::Caret; break;
          case ':': t.kind = Tok::Colon; break;
          case '|': t.kind = Tok::Bar; break;
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          case ',': t.kind = Tok::Comma; break;
          case '<': t.kind = Tok::Lt; break;
          case '>': t.kind = Tok::Gt; break;
          default:
            throw FormulaError(std::string("unexpected character '") + c + "'", i);
        }
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  out.push_back(Token{Tok::End, {}, 0.0, s.size()});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

// Random-effects groups are parsed as a transient node kind and pulled out
// of the top-level sum afterwards.
constexpr auto kRandomGroup = static_cast<TermNode::Kind>(100);

class Parser {
 public:
  Parser(std::string_view text, const ParseOptions& opt)
      : toks_(tokenize(text)),
        opt_(opt),
        fns_(opt.functions ? *opt.functions : FunctionRegistry::builtin()) {}

  FormulaAst formula() {
    FormulaAst ast;
    if (peek().kind == Tok::Tilde) {
      if (!opt_.allow_one_sided) throw FormulaError("formula has no response", peek().offset);
      next();
    } else {
      ast.response = response();
      expect(Tok::Tilde, "'~'");
    }
    TermNode rhs = sum(true);
    if (peek().kind == Tok::Bar) throw FormulaError("'|' outside parentheses", peek().offset);
    expect(Tok::End, "end of formula");
    split_random(std::move(rhs), ast);
    ast.intercept = expand_terms(ast.fixed).intercept;
    return ast;
  }

  RandomPart random_formula() {
    if (peek().kind == Tok::Tilde) next();
    RandomPart part;
    part.terms = sum(false);
    expect(Tok::Bar, "'|'");
    Token g = expect(Tok::Ident, "grouping variable");
    part.group = g.text;
    expect(Tok::End, "end of random-effects formula");
    return part;
  }

  ArithExpr arith_only() {
    ArithExpr e = comparison();
    expect(Tok::End, "end of expression");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (peek().kind == k) {
      ++pos_;
      return true;
    }
    return false;
  }
  Token expect(Tok k, const char* what) {
    if (peek().kind != k) {
      throw FormulaError(std::string("expected ") + what +
                             (peek().kind == Tok::End ? " but reached end" : " near '" + peek().text + "'"),
                         peek().offset);
    }
    return next();
  }

  ResponseSpec response() {
    ResponseSpec r;
    Token t = expect(Tok::Ident, "response variable");
    if (t.text == "Surv" && peek().kind == Tok::LParen) {
      next();
      Token time = expect(Tok::Ident, "survival time variable");
      expect(Tok::Comma, "','");
      ArithExpr ev = comparison();
      expect(Tok::RParen, "')'");
      r.kind = ResponseSpec::Kind::Survival;
      r.variable = time.text;
      r.event = std::move(ev);
      return r;
    }
    if (peek().kind == Tok::LParen) {
      throw FormulaError("only plain variables or Surv(time, event) are supported as response", t.offset);
    }
    r.kind = ResponseSpec::Kind::Variable;
    r.variable = t.text;
    return r;
  }

  static TermNode binary(TermNode::Kind k, TermNode a, TermNode b) {
    TermNode n;
    n.kind = k;
    n.children.push_back(std::move(a));
    n.children.push_back(std::move(b));
    return n;
  }

  // sum := ['-'] cross (('+'|'-') cross)*
  TermNode sum(bool allow_random) {
    TermNode lhs;
    if (peek().kind == Tok::Minus) {
      next();
      TermNode operand = cross(allow_random);
      lhs.kind = TermNode::Kind::Remove;
      lhs.children.push_back(std::move(operand));
    } else {
      lhs = cross(allow_random);
    }
    for (;;) {
      if (accept(Tok::Plus)) {
        lhs = binary(TermNode::Kind::Sum, std::move(lhs), cross(allow_random));
      } else if (accept(Tok::Minus)) {
        lhs = binary(TermNode::Kind::Remove, std::move(lhs), cross(allow_random));
      } else {
        return lhs;
      }
    }
  }

  TermNode cross(bool allow_random) {
    TermNode lhs = colon(allow_random);
    while (peek().kind == Tok::Star) {
      std::size_t at = next().offset;
      TermNode rhs = colon(allow_random);
      if (lhs.kind == kRandomGroup || rhs.kind == kRandomGroup)
        throw FormulaError("random-effects group cannot be crossed", at);
      lhs = binary(TermNode::Kind::Cross, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  TermNode colon(bool allow_random) {
    TermNode lhs = power(allow_random);
    while (peek().kind == Tok::Colon) {
      std::size_t at = next().offset;
      TermNode rhs = power(allow_random);
      if (lhs.kind == kRandomGroup || rhs.kind == kRandomGroup)
        throw FormulaError("random-effects group cannot be interacted", at);
      lhs = binary(TermNode::Kind::Colon, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  TermNode power(bool allow_random) {
    TermNode base = primary(allow_random);
    if (peek().kind == Tok::Caret) {
      std::size_t at = next().offset;
      Token k = expect(Tok::Number, "interaction order after '^'");
      if (base.kind == kRandomGroup) throw FormulaError("random-effects group cannot be raised to a power", at);
      TermNode n;
      n.kind = TermNode::Kind::Power;
      n.number = k.number;
      n.children.push_back(std::move(base));
      return n;
    }
    return base;
  }

  TermNode primary(bool allow_random) {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        TermNode n;
        n.kind = TermNode::Kind::Literal;
        n.number = next().number;
        return n;
      }
      case Tok::Ident: {
        Token id = next();
        if (peek().kind == Tok::LParen) return call(id);
        TermNode n;
        n.kind = TermNode::Kind::Variable;
        n.name = id.text;
        return n;
      }
      case Tok::LParen: {
        std::size_t at = next().offset;
        TermNode inner = sum(allow_random);
        if (peek().kind == Tok::Bar) {
          if (!allow_random) throw FormulaError("nested random-effects group", peek().offset);
          next();
          if (peek().kind != Tok::Ident) throw FormulaError("expected grouping variable after '|'", peek().offset);
          Token g = next();
          if (peek().kind == Tok::Slash) throw FormulaError("nested grouping '/' is not supported", peek().offset);
          expect(Tok::RParen, "')'");
          TermNode rg;
          rg.kind = kRandomGroup;
          rg.name = g.text;
          rg.number = static_cast<double>(at);
          rg.children.push_back(std::move(inner));
          return rg;
        }
        expect(Tok::RParen, "')'");
        return inner;
      }
      default:
        throw FormulaError(t.kind == Tok::End ? "unexpected end of formula" : "unexpected token '" + t.text + "'",
                           t.offset);
    }
  }

  TermNode call(const Token& id) {
    if (id.text == "Surv") throw FormulaError("Surv() is only allowed as the response", id.offset);
    if (opt_.strict && !fns_.contains(id.text)) throw FormulaError("unknown function '" + id.text + "'", id.offset);
    expect(Tok::LParen, "'('");
    TermNode n;
    n.kind = TermNode::Kind::Call;
    n.name = id.text;
    if (peek().kind != Tok::RParen) {
      n.args.push_back(additive());
      while (accept(Tok::Comma)) n.args.push_back(additive());
    }
    expect(Tok::RParen, "')'");
    if (fns_.contains(id.text) && fns_.arity(id.text) != n.args.size()) {
      throw FormulaError("function '" + id.text + "' expects " + std::to_string(fns_.arity(id.text)) + " argument(s)",
                         id.offset);
    }
    return n;
  }

  // Arithmetic grammar --------------------------------------------------

  static ArithExpr node(ArithExpr::Kind k, ArithExpr a, ArithExpr b) {
    ArithExpr e;
    e.kind = k;
    e.args.push_back(std::move(a));
    e.args.push_back(std::move(b));
    return e;
  }

  ArithExpr comparison() {
    ArithExpr lhs = additive();
    ArithExpr::Kind k;
    switch (peek().kind) {
      case Tok::Eq: k = ArithExpr::Kind::Equal; break;
      case Tok::Ne: k = ArithExpr::Kind::NotEqual; break;
      case Tok::Lt: k = ArithExpr::Kind::Less; break;
      case Tok::Gt: k = ArithExpr::Kind::Greater; break;
      case Tok::Le: k = ArithExpr::Kind::LessEqual; break;
      case Tok::Ge: k = ArithExpr::Kind::GreaterEqual; break;
      default: return lhs;
    }
    next();
    ArithExpr rhs;
    if (peek().kind == Tok::String) {
      rhs.kind = ArithExpr::Kind::String;
      rhs.text = next().text;
    } else {
      rhs = additive();
    }
    return node(k, std::move(lhs), std::move(rhs));
  }

  ArithExpr additive() {
    ArithExpr lhs = multiplicative();
    for (;;) {
      if (accept(Tok::Plus)) lhs = node(ArithExpr::Kind::Add, std::move(lhs), multiplicative());
      else if (accept(Tok::Minus)) lhs = node(ArithExpr::Kind::Subtract, std::move(lhs), multiplicative());
      else return lhs;
    }
  }

  ArithExpr multiplicative() {
    ArithExpr lhs = unary();
    for (;;) {
      if (accept(Tok::Star)) lhs = node(ArithExpr::Kind::Multiply, std::move(lhs), unary());
      else if (accept(Tok::Slash)) lhs = node(ArithExpr::Kind::Divide, std::move(lhs), unary());
      else return lhs;
    }
  }

  ArithExpr unary() {
    if (accept(Tok::Minus)) {
      ArithExpr e;
      e.kind = ArithExpr::Kind::Negate;
      e.args.push_back(unary());
      return e;
    }
    if (accept(Tok::Plus)) return unary();
    return pow_expr();
  }

  ArithExpr pow_expr() {
    ArithExpr base = atom();
    if (accept(Tok::Caret)) return node(ArithExpr::Kind::Power, std::move(base), unary());
    return base;
  }

  ArithExpr atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        ArithExpr e;
        e.kind = ArithExpr::Kind::Number;
        e.number = next().number;
        return e;
      }
      case Tok::Ident: {
        Token id = next();
        ArithExpr e;
        if (peek().kind == Tok::LParen) {
          if (id.text == "Surv") throw FormulaError("Surv() is only allowed as the response", id.offset);
          if (opt_.strict && !fns_.contains(id.text))
            throw FormulaError("unknown function '" + id.text + "'", id.offset);
          next();
          e.kind = ArithExpr::Kind::Call;
          e.text = id.text;
          if (peek().kind != Tok::RParen) {
            e.args.push_back(additive());
            while (accept(Tok::Comma)) e.args.push_back(additive());
          }
          expect(Tok::RParen, "')'");
          if (fns_.contains(id.text) && fns_.arity(id.text) != e.args.size())
            throw FormulaError("function '" + id.text + "' has wrong number of arguments", id.offset);
          return e;
        }
        e.kind = ArithExpr::Kind::Variable;
        e.text = id.text;
        return e;
      }
      case Tok::LParen: {
        next();
        ArithExpr e = additive();
        expect(Tok::RParen, "')'");
        return e;
      }
      default:
        throw FormulaError(t.kind == Tok::End ? "unexpected end of expression" : "unexpected token '" + t.text + "'",
                           t.offset);
    }
  }

  static void flatten_sum(TermNode&& n, std::vector<TermNode>& out) {
    if (n.kind == TermNode::Kind::Sum) {
      for (auto& c : n.children) flatten_sum(std::move(c), out);
    } else {
      out.push_back(std::move(n));
    }
  }

  static void check_no_random(const TermNode& n) {
    if (n.kind == kRandomGroup)
      throw FormulaError("random-effects group must be a top-level term", static_cast<std::size_t>(n.number));
    for (const auto& c : n.children) check_no_random(c);
  }

  static void split_random(TermNode rhs, FormulaAst& ast) {
    std::vector<TermNode> parts;
    flatten_sum(std::move(rhs), parts);
    std::vector<TermNode> fixed;
    for (auto& p : parts) {
      if (p.kind == kRandomGroup) {
        RandomPart rp;
        rp.group = p.name;
        rp.terms = std::move(p.children.front());
        check_no_random(rp.terms);
        ast.random_parts.push_back(std::move(rp));
      } else {
        check_no_random(p);
        fixed.push_back(std::move(p));
      }
    }
    if (fixed.empty()) {
      TermNode one;
      one.kind = TermNode::Kind::Literal;
      one.number = 1.0;
      fixed.push_back(one);
    }
    TermNode acc = std::move(fixed.front());
    for (std::size_t i = 1; i < fixed.size(); ++i) acc = binary(TermNode::Kind::Sum, std::move(acc), std::move(fixed[i]));
    ast.fixed = std::move(acc);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ParseOptions opt_;
  const FunctionRegistry& fns_;
};

}  // namespace

FormulaAst parse_formula(std::string_view text, const ParseOptions& options) {
  Parser p(text, options);
  return p.formula();
}

RandomPart parse_random(std::string_view text, const ParseOptions& options) {
  Parser p(text, options);
  return p.random_formula();
}

ArithExpr parse_arith(std::string_view text, const ParseOptions& options) {
  Parser p(text, options);
  return p.arith_only();
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string format_number(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

int arith_prec(const ArithExpr& e) {
  using K = ArithExpr::Kind;
  switch (e.kind) {
    case K::Equal:
    case K::NotEqual:
    case K::Less:
    case K::Greater:
    case K::LessEqual:
    case K::GreaterEqual:
      return 1;
    case K::Add:
    case K::Subtract:
      return 2;
    case K::Multiply:
    case K::Divide:
      return 3;
    case K::Negate:
      return 4;
    case K::Power:
      return 5;
    default:
      return 6;
  }
}

std::string render_arith(const ArithExpr& e);

std::string wrap(const ArithExpr& e, bool parens) {
  std::string s = render_arith(e);
  return parens ? "(" + s + ")" : s;
}

std::string render_arith(const ArithExpr& e) {
  using K = ArithExpr::Kind;
  const int p = arith_prec(e);
  auto bin = [&](const char* op) {
    const ArithExpr& a = e.args[0];
    const ArithExpr& b = e.args[1];
    bool right_assoc = e.kind == K::Power;
    bool pa = right_assoc ? arith_prec(a) <= p : arith_prec(a) < p;
    bool pb = right_assoc ? arith_prec(b) < p && b.kind != K::Negate : arith_prec(b) <= p;
    if (p == 1) pa = arith_prec(a) <= p;  // comparisons do not chain
    return wrap(a, pa) + op + wrap(b, pb);
  };
  switch (e.kind) {
    case K::Number:
      return format_number(e.number);
    case K::String:
      return "\"" + e.text + "\"";
    case K::Variable:
      return e.text;
    case K::Negate:
      return "-" + wrap(e.args[0], arith_prec(e.args[0]) < p);
    case K::Add:
      return bin(" + ");
    case K::Subtract:
      return bin(" - ");
    case K::Multiply:
      return bin(" * ");
    case K::Divide:
      return bin("/");
    case K::Power:
      return bin("^");
    case K::Equal:
      return bin(" == ");
    case K::NotEqual:
      return bin(" != ");
    case K::Less:
      return bin(" < ");
    case K::Greater:
      return bin(" > ");
    case K::LessEqual:
      return bin(" <= ");
    case K::GreaterEqual:
      return bin(" >= ");
    case K::Call: {
      std::string s = e.text + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) s += ", ";
        s += render_arith(e.args[i]);
      }
      return s + ")";
    }
  }
  return {};
}

int term_prec(const TermNode& n) {
  using K = TermNode::Kind;
  switch (n.kind) {
    case K::Sum:
    case K::Remove:
      return 1;
    case K::Cross:
      return 2;
    case K::Colon:
      return 3;
    case K::Power:
      return 4;
    default:
      return 5;
  }
}

std::string render_term(const TermNode& n) {
  using K = TermNode::Kind;
  auto child = [&](const TermNode& c, bool right) {
    bool paren = right ? term_prec(c) <= term_prec(n) : term_prec(c) < term_prec(n);
    std::string s = render_term(c);
    return paren ? "(" + s + ")" : s;
  };
  switch (n.kind) {
    case K::Variable:
      return n.name;
    case K::Literal:
      return format_number(n.number);
    case K::Call: {
      std::string s = n.name + "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) s += ", ";
        s += render_arith(n.args[i]);
      }
      return s + ")";
    }
    case K::Sum:
      return child(n.children[0], false) + " + " + child(n.children[1], true);
    case K::Remove:
      if (n.children.size() == 1) return "-" + child(n.children[0], true);
      return child(n.children[0], false) + " - " + child(n.children[1], true);
    case K::Cross:
      return child(n.children[0], false) + " * " + child(n.children[1], true);
    case K::Colon:
      return child(n.children[0], false) + ":" + child(n.children[1], true);
    case K::Power: {
      const TermNode& b = n.children[0];
      std::string s = render_term(b);
      if (term_prec(b) <= term_prec(n)) s = "(" + s + ")";
      return s + "^" + format_number(n.number);
    }
  }
  return {};
}

}  // namespace

std::string render(const ArithExpr& expr) { return render_arith(expr); }

std::string render(const TermNode& node) { return render_term(node); }

std::string render(const FormulaAst& ast) {
  std::string s;
  switch (ast.response.kind) {
    case ResponseSpec::Kind::None:
      break;
    case ResponseSpec::Kind::Variable:
      s = ast.response.variable + " ";
      break;
    case ResponseSpec::Kind::Survival:
      s = "Surv(" + ast.response.variable + ", " + render_arith(ast.response.event) + ") ";
      break;
  }
  s += "~ " + render_term(ast.fixed);
  for (const auto& rp : ast.random_parts) s += " + (" + render_term(rp.terms) + " | " + rp.group + ")";
  return s;
}

// ---------------------------------------------------------------------------
// Term algebra

Term Term::from_factors(std::vector<Factor> factors) {
  // keep first-appearance order, drop repeats (a:a is a)
  std::vector<Factor> out;
  for (auto& f : factors)
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(std::move(f));
  return Term{std::move(out)};
}

std::string Term::name() const {
  std::string s;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) s += ":";
    s += factors[i].label;
  }
  return s;
}

bool Term::operator==(const Term& o) const {
  if (factors.size() != o.factors.size()) return false;
  for (const auto& f : factors)
    if (std::find(o.factors.begin(), o.factors.end(), f) == o.factors.end()) return false;
  return true;
}

std::vector<std::string> TermList::names() const {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(t.name());
  return out;
}

namespace {

struct Expansion {
  std::vector<Term> terms;
  std::optional<bool> intercept;
};

void add_unique(std::vector<Term>& into, const Term& t) {
  if (std::find(into.begin(), into.end(), t) == into.end()) into.push_back(t);
}

Expansion interact(const Expansion& a, const Expansion& b) {
  Expansion out;
  for (const auto& ta : a.terms) {
    for (const auto& tb : b.terms) {
      std::vector<Factor> f = ta.factors;
      f.insert(f.end(), tb.factors.begin(), tb.factors.end());
      add_unique(out.terms, Term::from_factors(std::move(f)));
    }
  }
  return out;
}

Expansion unite(Expansion a, const Expansion& b) {
  for (const auto& t : b.terms) add_unique(a.terms, t);
  if (b.intercept) a.intercept = b.intercept;
  return a;
}

Expansion expand_node(const TermNode& n) {
  using K = TermNode::Kind;
  Expansion e;
  switch (n.kind) {
    case K::Literal:
      if (n.number == 0.0) e.intercept = false;
      else if (n.number == 1.0) e.intercept = true;
      else throw ConfigError("numeric literal " + format_number(n.number) + " is not a valid term");
      return e;
    case K::Variable:
    case K::Call: {
      Factor f{n, render_term(n)};
      e.terms.push_back(Term{{f}});
      return e;
    }
    case K::Sum:
      return unite(expand_node(n.children[0]), expand_node(n.children[1]));
    case K::Remove: {
      Expansion rhs = expand_node(n.children.back());
      if (n.children.size() == 2) e = expand_node(n.children[0]);
      std::erase_if(e.terms, [&](const Term& t) {
        return std::find(rhs.terms.begin(), rhs.terms.end(), t) != rhs.terms.end();
      });
      if (rhs.intercept) e.intercept = false;  // "- 1" (or "- 0")
      return e;
    }
    case K::Colon:
      return interact(expand_node(n.children[0]), expand_node(n.children[1]));
    case K::Cross: {
      Expansion a = expand_node(n.children[0]);
      Expansion b = expand_node(n.children[1]);
      return unite(unite(a, b), interact(a, b));
    }
    case K::Power: {
      double k = n.number;
      if (k < 1.0 || std::floor(k) != k)
        throw ConfigError("interaction order '^" + format_number(k) + "' must be a positive integer");
      Expansion base = expand_node(n.children[0]);
      Expansion acc = base;
      for (int i = 1; i < static_cast<int>(k); ++i) acc = unite(unite(acc, base), interact(acc, base));
      return acc;
    }
  }
  return e;
}

TermList finish(Expansion e) {
  std::stable_sort(e.terms.begin(), e.terms.end(),
                   [](const Term& a, const Term& b) { return a.order() < b.order(); });
  TermList out;
  out.intercept = e.intercept.value_or(true);
  out.terms = std::move(e.terms);
  return out;
}

void collect_vars(const ArithExpr& e, std::set<std::string>& out) {
  if (e.kind == ArithExpr::Kind::Variable) out.insert(e.text);
  for (const auto& a : e.args) collect_vars(a, out);
}

}  // namespace

TermList expand_terms(const TermNode& node) { return finish(expand_node(node)); }

TermList expand_terms(const FormulaAst& ast) { return expand_terms(ast.fixed); }

TermList expand_random_terms(const RandomPart& part) { return expand_terms(part.terms); }

std::set<std::string> expr_dependencies(const ArithExpr& expr) {
  std::set<std::string> out;
  collect_vars(expr, out);
  return out;
}

std::set<std::string> factor_dependencies(const Factor& factor) {
  std::set<std::string> out;
  if (factor.leaf.kind == TermNode::Kind::Variable) {
    out.insert(factor.leaf.name);
  } else {
    for (const auto& a : factor.leaf.args) collect_vars(a, out);
  }
  return out;
}

std::set<std::string> term_dependencies(const Term& term) {
  std::set<std::string> out;
  for (const auto& f : term.factors) {
    auto d = factor_dependencies(f);
    out.insert(d.begin(), d.end());
  }
  return out;
}

bool is_plain_variable(const Factor& factor) { return factor.leaf.kind == TermNode::Kind::Variable; }

ArithExpr leaf_to_expr(const TermNode& leaf) {
  ArithExpr e;
  if (leaf.kind == TermNode::Kind::Variable) {
    e.kind = ArithExpr::Kind::Variable;
    e.text = leaf.name;
    return e;
  }
  if (leaf.kind != TermNode::Kind::Call) throw ConfigError("term '" + render_term(leaf) + "' is not a factor");
  if (leaf.name == "I" && leaf.args.size() == 1) return leaf.args[0];
  e.kind = ArithExpr::Kind::Call;
  e.text = leaf.name;
  e.args = leaf.args;
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

double evaluate(const ArithExpr& e, const EvalContext& ctx, const FunctionRegistry& functions) {
  using K = ArithExpr::Kind;
  auto compare = [&](auto cmp) -> double {
    const ArithExpr& a = e.args[0];
    const ArithExpr& b = e.args[1];
    if (b.kind == K::String) {
      if (a.kind != K::Variable) throw ConfigError("string comparison requires a variable on the left");
      auto lab = ctx.label(a.text);
      if (!lab) throw ConfigError("variable '" + a.text + "' is not categorical");
      return cmp(lab->compare(b.text), 0) ? 1.0 : 0.0;
    }
    return cmp(evaluate(a, ctx, functions), evaluate(b, ctx, functions)) ? 1.0 : 0.0;
  };
  switch (e.kind) {
    case K::Number:
      return e.number;
    case K::String:
      throw ConfigError("string literal used as a number");
    case K::Variable:
      return ctx.number(e.text);
    case K::Negate:
      return -evaluate(e.args[0], ctx, functions);
    case K::Add:
      return evaluate(e.args[0], ctx, functions) + evaluate(e.args[1], ctx, functions);
    case K::Subtract:
      return evaluate(e.args[0], ctx, functions) - evaluate(e.args[1], ctx, functions);
    case K::Multiply:
      return evaluate(e.args[0], ctx, functions) * evaluate(e.args[1], ctx, functions);
    case K::Divide:
      return evaluate(e.args[0], ctx, functions) / evaluate(e.args[1], ctx, functions);
    case K::Power:
      return std::pow(evaluate(e.args[0], ctx, functions), evaluate(e.args[1], ctx, functions));
    case K::Call: {
      std::vector<double> args;
      for (const auto& a : e.args) args.push_back(evaluate(a, ctx, functions));
      return functions.function(e.text)(args);
    }
    case K::Equal:
      return compare([](auto x, auto y) { return x == y; });
    case K::NotEqual:
      return compare([](auto x, auto y) { return x != y; });
    case K::Less:
      return compare([](auto x, auto y) { return x < y; });
    case K::Greater:
      return compare([](auto x, auto y) { return x > y; });
    case K::LessEqual:
      return compare([](auto x, auto y) { return x <= y; });
    case K::GreaterEqual:
      return compare([](auto x, auto y) { return x >= y; });
  }
  return 0.0;
}

CompiledExpr CompiledExpr::compile(const ArithExpr& expr,
                                   const std::function<std::size_t(const std::string&)>& slot_of,
                                   const FunctionRegistry& functions) {
  CompiledExpr out;
  std::function<void(const ArithExpr&)> emit = [&](const ArithExpr& e) {
    using K = ArithExpr::Kind;
    switch (e.kind) {
      case K::Number:
        out.code_.push_back({Op::Const, e.number});
        return;
      case K::Variable: {
        std::size_t s = slot_of(e.text);
        out.code_.push_back({Op::Slot, 0.0, s});
        if (std::find(out.slots_.begin(), out.slots_.end(), s) == out.slots_.end()) out.slots_.push_back(s);
        return;
      }
      case K::Negate:
        emit(e.args[0]);
        out.code_.push_back({Op::Neg});
        return;
      case K::Add:
      case K::Subtract:
      case K::Multiply:
      case K::Divide:
      case K::Power: {
        emit(e.args[0]);
        emit(e.args[1]);
        Op op = e.kind == K::Add        ? Op::Add
                : e.kind == K::Subtract ? Op::Sub
                : e.kind == K::Multiply ? Op::Mul
                : e.kind == K::Divide   ? Op::Div
                                        : Op::Pow;
        out.code_.push_back({op});
        return;
      }
      case K::Call: {
        for (const auto& a : e.args) emit(a);
        out.fns_.push_back(functions.function(e.text));
        out.code_.push_back({Op::Call, 0.0, out.fns_.size() - 1, e.args.size()});
        return;
      }
      default:
        throw ConfigError("expression '" + render_arith(e) + "' cannot be used as a numeric term");
    }
  };
  emit(expr);
  return out;
}

double CompiledExpr::eval(std::span<const double> slots) const {
  double stack[64];
  std::size_t top = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::Const:
        stack[top++] = in.value;
        break;
      case Op::Slot:
        stack[top++] = slots[in.index];
        break;
      case Op::Neg:
        stack[top - 1] = -stack[top - 1];
        break;
      case Op::Add:
        --top;
        stack[top - 1] += stack[top];
        break;
      case Op::Sub:
        --top;
        stack[top - 1] -= stack[top];
        break;
      case Op::Mul:
        --top;
        stack[top - 1] *= stack[top];
        break;
      case Op::Div:
        --top;
        stack[top - 1] /= stack[top];
        break;
      case Op::Pow:
        --top;
        stack[top - 1] = std::pow(stack[top - 1], stack[top]);
        break;
      case Op::Call: {
        top -= in.nargs;
        double r = fns_[in.index](std::span<const double>(stack + top, in.nargs));
        stack[top++] = r;
        break;
      }
    }
  }
  return top ? stack[top - 1] : 0.0;
}

}  // namespace jointgibbs::formula
