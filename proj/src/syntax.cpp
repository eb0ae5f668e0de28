#include "aam/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>

namespace aam {

FreeVarError::FreeVarError(std::vector<std::pair<std::string, Label>> vs)
    : std::runtime_error([&vs] {
        std::string m = "unbound variable";
        if (vs.size() > 1) m += "s";
        m += ":";
        for (auto& [n, l] : vs) m += " " + n + "@" + std::to_string(l);
        return m;
      }()),
      vars(std::move(vs)) {}

// --- lexer ---

namespace {

struct Token {
  enum Kind { LParen, RParen, Sym, False, End } kind;
  std::string text;
  SourcePos pos;
};

bool sym_start(char ch) {
  return std::isalpha((unsigned char)ch) || ch == '-' || ch == '_' || ch == '!' || ch == '?';
}
bool sym_char(char ch) { return sym_start(ch) || std::isdigit((unsigned char)ch); }

struct Lexer {
  const std::string& src;
  size_t i = 0;
  SourcePos pos;

  explicit Lexer(const std::string& s) : src(s) {}

  char peek() const { return i < src.size() ? src[i] : '\0'; }

  void advance() {
    if (i >= src.size()) return;
    if (src[i] == '\n') {
      pos.line++;
      pos.col = 1;
    } else {
      pos.col++;
    }
    i++;
  }

  void skip_space() {
    for (;;) {
      char ch = peek();
      if (ch == ';') {
        while (peek() != '\n' && peek() != '\0') advance();
      } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
        advance();
      } else {
        return;
      }
    }
  }

  Token next() {
    skip_space();
    SourcePos at = pos;
    char ch = peek();
    if (ch == '\0') return {Token::End, "", at};
    if (ch == '(') {
      advance();
      return {Token::LParen, "(", at};
    }
    if (ch == ')') {
      advance();
      return {Token::RParen, ")", at};
    }
    if (ch == '#') {
      advance();
      if (peek() != 'f') throw ParseError("expected #f", at);
      advance();
      if (sym_char(peek())) throw ParseError("bad literal after #f", at);
      return {Token::False, "#f", at};
    }
    // unicode lambda, UTF-8 CE BB
    if ((unsigned char)ch == 0xCE && i + 1 < src.size() &&
        (unsigned char)src[i + 1] == 0xBB) {
      advance();
      advance();
      return {Token::Sym, "lambda", at};
    }
    if (sym_start(ch)) {
      std::string s;
      while (sym_char(peek())) {
        s += peek();
        advance();
      }
      return {Token::Sym, s, at};
    }
    throw ParseError(std::string("unexpected character '") + ch + "'", at);
  }
};

// --- parser ---

struct Parser {
  Lexer lx;
  Token tok;

  explicit Parser(const std::string& s) : lx(s) { tok = lx.next(); }

  void bump() { tok = lx.next(); }

  void expect(Token::Kind k, const char* what) {
    if (tok.kind != k) throw ParseError(std::string("expected ") + what, tok.pos);
    bump();
  }

  bool reserved(const std::string& s) {
    return s == "lambda" || s == "if" || s == "set!";
  }

  ExprPtr expr() {
    switch (tok.kind) {
      case Token::False: {
        bump();
        return mk_false();
      }
      case Token::Sym: {
        std::string s = tok.text;
        SourcePos at = tok.pos;
        bump();
        if (s == "callcc") return mk_callcc();
        if (reserved(s)) throw ParseError("reserved word '" + s + "' used as a variable", at);
        return mk_var(s);
      }
      case Token::LParen: {
        SourcePos open = tok.pos;
        bump();
        return form(open);
      }
      case Token::RParen:
        throw ParseError("unexpected ')'", tok.pos);
      case Token::End:
        throw ParseError("unexpected end of input", tok.pos);
    }
    throw ParseError("unreachable", tok.pos);
  }

  ExprPtr form(SourcePos open) {
    if (tok.kind == Token::Sym && tok.text == "lambda") {
      bump();
      expect(Token::LParen, "'(' before the parameter");
      if (tok.kind != Token::Sym || reserved(tok.text) || tok.text == "callcc")
        throw ParseError("expected a parameter name", tok.pos);
      std::string param = tok.text;
      bump();
      if (tok.kind == Token::Sym)
        throw ParseError("lambda takes exactly one parameter", tok.pos);
      expect(Token::RParen, "')' after the parameter");
      ExprPtr body = expr();
      expect(Token::RParen, "')' closing lambda");
      return mk_lam(param, body);
    }
    if (tok.kind == Token::Sym && tok.text == "if") {
      bump();
      ExprPtr t = expr();
      ExprPtr c = expr();
      if (tok.kind == Token::RParen)
        throw ParseError("if takes exactly three subexpressions", tok.pos);
      ExprPtr a = expr();
      expect(Token::RParen, "')' closing if");
      return mk_if(t, c, a);
    }
    if (tok.kind == Token::Sym && tok.text == "set!") {
      bump();
      if (tok.kind != Token::Sym || reserved(tok.text) || tok.text == "callcc")
        throw ParseError("set! expects a variable name", tok.pos);
      std::string target = tok.text;
      bump();
      if (tok.kind == Token::RParen)
        throw ParseError("set! takes a variable and one expression", tok.pos);
      ExprPtr rhs = expr();
      expect(Token::RParen, "')' closing set!");
      return mk_set(target, rhs);
    }
    // application
    ExprPtr f = expr();
    if (tok.kind == Token::RParen)
      throw ParseError("application takes exactly two expressions", open);
    ExprPtr a = expr();
    if (tok.kind != Token::RParen)
      throw ParseError("application takes exactly two expressions", tok.pos);
    bump();
    return mk_app(f, a);
  }
};

void assign_labels(const ExprPtr& e, Label& next, std::vector<const Expr*>& by_label) {
  const_cast<Expr*>(e.get())->label = next++;
  by_label.push_back(e.get());
  if (e->a) assign_labels(e->a, next, by_label);
  if (e->b) assign_labels(e->b, next, by_label);
  if (e->c) assign_labels(e->c, next, by_label);
}

void fv_rec(const Expr& e, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (e.kind) {
    case ExprKind::Var:
      if (!bound.count(e.name)) out.insert(e.name);
      return;
    case ExprKind::Lam: {
      bool fresh = bound.insert(e.name).second;
      fv_rec(*e.a, bound, out);
      if (fresh) bound.erase(e.name);
      return;
    }
    case ExprKind::App:
      fv_rec(*e.a, bound, out);
      fv_rec(*e.b, bound, out);
      return;
    case ExprKind::If:
      fv_rec(*e.a, bound, out);
      fv_rec(*e.b, bound, out);
      fv_rec(*e.c, bound, out);
      return;
    case ExprKind::Set:
      if (!bound.count(e.name)) out.insert(e.name);
      fv_rec(*e.a, bound, out);
      return;
    case ExprKind::LitFalse:
    case ExprKind::LitCallcc:
      return;
  }
}

void collect_fv_tables(const Expr& e, Program& p) {
  p.fv[e.label] = [&] {
    auto s = free_vars(e);
    return std::vector<std::string>(s.begin(), s.end());
  }();
  if (e.a) collect_fv_tables(*e.a, p);
  if (e.b) collect_fv_tables(*e.b, p);
  if (e.c) collect_fv_tables(*e.c, p);
}

void unbound_rec(const Expr& e, std::set<std::string>& bound,
                 std::vector<std::pair<std::string, Label>>& out) {
  switch (e.kind) {
    case ExprKind::Var:
      if (!bound.count(e.name)) out.emplace_back(e.name, e.label);
      return;
    case ExprKind::Lam: {
      bool fresh = bound.insert(e.name).second;
      unbound_rec(*e.a, bound, out);
      if (fresh) bound.erase(e.name);
      return;
    }
    case ExprKind::App:
      unbound_rec(*e.a, bound, out);
      unbound_rec(*e.b, bound, out);
      return;
    case ExprKind::If:
      unbound_rec(*e.a, bound, out);
      unbound_rec(*e.b, bound, out);
      unbound_rec(*e.c, bound, out);
      return;
    case ExprKind::Set:
      if (!bound.count(e.name)) out.emplace_back(e.name, e.label);
      unbound_rec(*e.a, bound, out);
      return;
    case ExprKind::LitFalse:
    case ExprKind::LitCallcc:
      return;
  }
}

}  // namespace

Program parse(const std::string& text) {
  Parser p(text);
  ExprPtr root = p.expr();
  if (p.tok.kind != Token::End)
    throw ParseError("trailing input after the program", p.tok.pos);
  Program prog;
  prog.root = root;
  prog.by_label.push_back(nullptr);
  Label next = 1;
  assign_labels(root, next, prog.by_label);
  collect_fv_tables(*root, prog);
  return prog;
}

const std::vector<std::string>& Program::free_of(Label l) const {
  static const std::vector<std::string> empty;
  auto it = fv.find(l);
  return it == fv.end() ? empty : it->second;
}

std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> bound, out;
  fv_rec(e, bound, out);
  return out;
}

void check_closed(const Expr& e) {
  std::set<std::string> bound;
  std::vector<std::pair<std::string, Label>> out;
  unbound_rec(e, bound, out);
  if (!out.empty()) throw FreeVarError(std::move(out));
}

std::string unparse(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Var:
      return e.name;
    case ExprKind::Lam:
      return "(\xce\xbb (" + e.name + ") " + unparse(*e.a) + ")";
    case ExprKind::App:
      return "(" + unparse(*e.a) + " " + unparse(*e.b) + ")";
    case ExprKind::If:
      return "(if " + unparse(*e.a) + " " + unparse(*e.b) + " " + unparse(*e.c) + ")";
    case ExprKind::Set:
      return "(set! " + e.name + " " + unparse(*e.a) + ")";
    case ExprKind::LitFalse:
      return "#f";
    case ExprKind::LitCallcc:
      return "callcc";
  }
  return "";
}

namespace {

bool alpha_rec(const Expr& x, const Expr& y, std::map<std::string, int>& bx,
               std::map<std::string, int>& by, int depth) {
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case ExprKind::Var: {
      auto ix = bx.find(x.name);
      auto iy = by.find(y.name);
      if (ix == bx.end() && iy == by.end()) return x.name == y.name;
      if (ix == bx.end() || iy == by.end()) return false;
      return ix->second == iy->second;
    }
    case ExprKind::Lam: {
      auto ox = bx.find(x.name);
      auto oy = by.find(y.name);
      int px = ox == bx.end() ? -1 : ox->second;
      int py = oy == by.end() ? -1 : oy->second;
      bx[x.name] = depth;
      by[y.name] = depth;
      bool r = alpha_rec(*x.a, *y.a, bx, by, depth + 1);
      if (px < 0) bx.erase(x.name); else bx[x.name] = px;
      if (py < 0) by.erase(y.name); else by[y.name] = py;
      return r;
    }
    case ExprKind::App:
      return alpha_rec(*x.a, *y.a, bx, by, depth) && alpha_rec(*x.b, *y.b, bx, by, depth);
    case ExprKind::If:
      return alpha_rec(*x.a, *y.a, bx, by, depth) && alpha_rec(*x.b, *y.b, bx, by, depth) &&
             alpha_rec(*x.c, *y.c, bx, by, depth);
    case ExprKind::Set: {
      auto ix = bx.find(x.name);
      auto iy = by.find(y.name);
      bool same;
      if (ix == bx.end() && iy == by.end()) same = x.name == y.name;
      else if (ix == bx.end() || iy == by.end()) same = false;
      else same = ix->second == iy->second;
      return same && alpha_rec(*x.a, *y.a, bx, by, depth);
    }
    case ExprKind::LitFalse:
    case ExprKind::LitCallcc:
      return true;
  }
  return false;
}

}  // namespace

bool alpha_equal(const Expr& x, const Expr& y) {
  std::map<std::string, int> bx, by;
  return alpha_rec(x, y, bx, by, 0);
}

ExprPtr mk_var(const std::string& n) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Var;
  e->name = n;
  return e;
}
ExprPtr mk_lam(const std::string& p, ExprPtr body) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Lam;
  e->name = p;
  e->a = std::move(body);
  return e;
}
ExprPtr mk_app(ExprPtr f, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::App;
  e->a = std::move(f);
  e->b = std::move(a);
  return e;
}
ExprPtr mk_if(ExprPtr t, ExprPtr c, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::If;
  e->a = std::move(t);
  e->b = std::move(c);
  e->c = std::move(a);
  return e;
}
ExprPtr mk_set(const std::string& t, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Set;
  e->name = t;
  e->a = std::move(rhs);
  return e;
}
ExprPtr mk_false() {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::LitFalse;
  return e;
}
ExprPtr mk_callcc() {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::LitCallcc;
  return e;
}

}  // namespace aam
