#include "somd/parser.hpp"

#include <utility>

#include "somd/diagnostics.hpp"
#include "somd/lexer.hpp"

namespace somd {

namespace {

bool is_type_keyword(const Token& t) {
  return t.kind == Tok::Keyword &&
         (t.text == "int" || t.text == "long" || t.text == "double" ||
          t.text == "boolean" || t.text == "void");
}

BaseType base_of(const std::string& kw) {
  if (kw == "int") return BaseType::Int;
  if (kw == "long") return BaseType::Long;
  if (kw == "double") return BaseType::Double;
  if (kw == "boolean") return BaseType::Bool;
  return BaseType::Void;
}

Op assign_op(const std::string& p) {
  if (p == "+=") return Op::Add;
  if (p == "-=") return Op::Sub;
  if (p == "*=") return Op::Mul;
  if (p == "/=") return Op::Div;
  if (p == "%=") return Op::Mod;
  if (p == "&=") return Op::BitAnd;
  if (p == "|=") return Op::BitOr;
  if (p == "^=") return Op::BitXor;
  if (p == "<<=") return Op::Shl;
  if (p == ">>=") return Op::Shr;
  if (p == ">>>=") return Op::Ushr;
  return Op::None;
}

bool is_assign_punct(const Token& t) {
  return t.kind == Tok::Punct && (t.text == "=" || assign_op(t.text) != Op::None);
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program prog;
    while (!at_end()) {
      if (peek().keyword("final")) {
        prog.globals.push_back(global_const());
        continue;
      }
      prog.methods.push_back(method());
    }
    return prog;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at_end() const { return peek().kind == Tok::End; }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token& at, const std::string& msg) {
    throw CompileError({Diagnostic{DiagCode::SyntaxError, Severity::Error, at.loc, msg}});
  }
  [[noreturn]] void fail_qualifier(const Token& at, const std::string& msg) {
    throw CompileError({Diagnostic{DiagCode::UnknownQualifier, Severity::Error, at.loc, msg}});
  }

  std::string describe(const Token& t) const {
    if (t.kind == Tok::End) return "end of input";
    return "'" + t.text + "'";
  }

  const Token& expect_punct(const char* p) {
    if (!peek().punct(p)) fail(peek(), std::string("expected '") + p + "' but found " + describe(peek()));
    return next();
  }
  bool accept_punct(const char* p) {
    if (peek().punct(p)) {
      next();
      return true;
    }
    return false;
  }
  std::string expect_ident() {
    if (peek().kind != Tok::Ident) fail(peek(), "expected identifier but found " + describe(peek()));
    return next().text;
  }
  int expect_int() {
    if (peek().kind != Tok::IntLit) fail(peek(), "expected integer literal but found " + describe(peek()));
    return static_cast<int>(next().ival);
  }

  // An identifier directly followed by a type keyword sits in qualifier position.
  void reject_unknown_qualifier() {
    if (peek().kind == Tok::Ident && is_type_keyword(peek(1)))
      fail_qualifier(peek(), "unknown qualifier '" + peek().text + "'");
  }

  Type type() {
    if (!is_type_keyword(peek())) fail(peek(), "expected type but found " + describe(peek()));
    Type t{base_of(next().text), 0};
    while (peek().punct("[") && peek(1).punct("]")) {
      next();
      next();
      ++t.rank;
    }
    if (t.rank > 2) fail(peek(), "arrays of more than two dimensions are not supported");
    return t;
  }

  GlobalConst global_const() {
    SourceLoc loc = next().loc;  // final
    GlobalConst g;
    g.loc = loc;
    g.type = type();
    g.name = expect_ident();
    expect_punct("=");
    g.init = expression();
    expect_punct(";");
    return g;
  }

  std::vector<ViewPair> view_pairs() {
    std::vector<ViewPair> pairs;
    do {
      expect_punct("<");
      ViewPair p;
      p.before = expect_int();
      expect_punct(",");
      p.after = expect_int();
      expect_punct(">");
      pairs.push_back(p);
    } while (peek().punct(",") && peek(1).punct("<") && (next(), true));
    return pairs;
  }

  std::vector<ExprPtr> call_args() {
    std::vector<ExprPtr> args;
    expect_punct("(");
    if (!peek().punct(")")) {
      do {
        args.push_back(expression());
      } while (accept_punct(","));
    }
    expect_punct(")");
    return args;
  }

  DistSpec dist_spec() {
    DistSpec d;
    d.loc = next().loc;  // dist
    if (!accept_punct("(")) return d;
    do {
      const Token& key = peek();
      if (key.kind != Tok::Ident) fail(key, "expected distribution argument but found " + describe(key));
      if (peek(1).punct("=")) {
        next();
        next();
        if (key.text == "view") {
          d.view = view_pairs();
        } else if (key.text == "polyview") {
          d.polyview = view_pairs();
        } else if (key.text == "dim") {
          if (accept_punct("{")) {
            do {
              d.dims.push_back(expect_int());
            } while (accept_punct(","));
            expect_punct("}");
          } else {
            d.dims.push_back(expect_int());
          }
        } else {
          fail_qualifier(key, "unknown dist parameter '" + key.text + "'");
        }
      } else {
        if (d.strategy == DistStrategy::User) fail(key, "more than one partitioning strategy");
        d.strategy = DistStrategy::User;
        d.user_name = next().text;
        if (peek().punct("(")) d.user_args = call_args();
      }
    } while (accept_punct(","));
    expect_punct(")");
    return d;
  }

  ReduceSpec reduce_spec_body() {
    ReduceSpec r;
    r.loc = peek().loc;
    const Token& t = peek();
    if (t.punct("+") || t.punct("-") || t.punct("*")) {
      r.kind = ReduceKind::PrimOp;
      r.op = t.text == "+" ? Op::Add : t.text == "-" ? Op::Sub : Op::Mul;
      next();
    } else if (t.kind == Tok::Ident && t.text == "self") {
      r.kind = ReduceKind::Self;
      next();
    } else if (t.kind == Tok::Ident) {
      r.kind = ReduceKind::User;
      r.user_name = next().text;
      if (peek().punct("(")) r.user_args = call_args();
    } else {
      fail_qualifier(t, "unknown reduction '" + t.text + "'");
    }
    return r;
  }

  ReduceSpec reduce_qualifier() {
    next();  // reduce
    expect_punct("(");
    ReduceSpec r = reduce_spec_body();
    expect_punct(")");
    return r;
  }

  MethodDecl method() {
    MethodDecl m;
    m.loc = peek().loc;
    if (peek().keyword("reduce")) m.reduce = reduce_qualifier();
    if (peek().kind == Tok::Ident && (is_type_keyword(peek(1)) || peek(1).punct("(")))
      fail_qualifier(peek(), "unknown qualifier '" + peek().text + "'");
    m.return_type = type();
    m.name = expect_ident();
    expect_punct("(");
    if (!peek().punct(")")) {
      do {
        m.params.push_back(param());
      } while (accept_punct(","));
    }
    expect_punct(")");
    m.body = block();
    return m;
  }

  Param param() {
    Param p;
    p.loc = peek().loc;
    reject_unknown_qualifier();
    if (peek().keyword("final")) next();
    if (peek().keyword("dist")) p.dist = dist_spec();
    p.type = type();
    p.name = expect_ident();
    while (peek().punct("[") && peek(1).punct("]")) {
      next();
      next();
      ++p.type.rank;
    }
    return p;
  }

  StmtPtr block() {
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Block;
    s->loc = expect_punct("{").loc;
    while (!peek().punct("}")) {
      if (at_end()) fail(peek(), "unterminated block");
      s->stmts.push_back(statement());
    }
    next();
    return s;
  }

  bool starts_decl() const {
    const Token& t = peek();
    return is_type_keyword(t) || t.keyword("shared") || t.keyword("dist") || t.keyword("final");
  }

  StmtPtr var_decl() {
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::VarDecl;
    s->loc = peek().loc;
    for (;;) {
      if (peek().keyword("final")) {
        next();
      } else if (peek().keyword("shared")) {
        next();
        s->shared = true;
      } else if (peek().keyword("dist")) {
        s->dist = dist_spec();
      } else {
        break;
      }
    }
    s->type = type();
    s->name = expect_ident();
    while (peek().punct("[") && peek(1).punct("]")) {
      next();
      next();
      ++s->type.rank;
    }
    if (accept_punct("=")) s->expr = expression();
    return s;
  }

  StmtPtr statement() {
    const Token& t = peek();
    if (t.punct("{")) return block();
    if (t.punct(";")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::Empty;
      s->loc = next().loc;
      return s;
    }
    if (t.keyword("if")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::If;
      s->loc = next().loc;
      expect_punct("(");
      s->expr = expression();
      expect_punct(")");
      s->body = statement();
      if (peek().keyword("else")) {
        next();
        s->else_body = statement();
      }
      return s;
    }
    if (t.keyword("for")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::For;
      s->loc = next().loc;
      expect_punct("(");
      if (!peek().punct(";")) {
        if (starts_decl()) {
          s->init = var_decl();
        } else {
          auto e = std::make_unique<Stmt>();
          e->kind = StmtKind::ExprStmt;
          e->loc = peek().loc;
          e->expr = expression();
          s->init = std::move(e);
        }
      }
      expect_punct(";");
      if (!peek().punct(";")) s->expr = expression();
      expect_punct(";");
      if (!peek().punct(")")) s->step = expression();
      expect_punct(")");
      s->body = statement();
      return s;
    }
    if (t.keyword("while")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::While;
      s->loc = next().loc;
      expect_punct("(");
      s->expr = expression();
      expect_punct(")");
      s->body = statement();
      return s;
    }
    if (t.keyword("return")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::Return;
      s->loc = next().loc;
      if (!peek().punct(";")) s->expr = expression();
      expect_punct(";");
      return s;
    }
    if (t.keyword("sync")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::Sync;
      s->loc = next().loc;
      if (peek().keyword("reduce")) s->reduce = reduce_qualifier();
      if (accept_punct("(")) {
        s->target = expect_ident();
        expect_punct(")");
      }
      s->body = block();
      return s;
    }
    if (t.keyword("reduce"))
      fail_qualifier(t, "reduce qualifier is only allowed on methods and sync blocks");
    reject_unknown_qualifier();
    if (starts_decl()) {
      auto s = var_decl();
      expect_punct(";");
      return s;
    }
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::ExprStmt;
    s->loc = t.loc;
    s->expr = expression();
    expect_punct(";");
    return s;
  }

  // ---- expressions ---------------------------------------------------------

  ExprPtr expression() { return assignment(); }

  ExprPtr assignment() {
    ExprPtr lhs = conditional();
    if (is_assign_punct(peek())) {
      const Token& op = next();
      if (lhs->kind != ExprKind::Var && lhs->kind != ExprKind::Index)
        fail(op, "left-hand side of assignment is not assignable");
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Assign;
      e->loc = op.loc;
      e->op = op.text == "=" ? Op::None : assign_op(op.text);
      e->kids.push_back(std::move(lhs));
      e->kids.push_back(assignment());
      return e;
    }
    return lhs;
  }

  ExprPtr conditional() {
    ExprPtr c = binary(0);
    if (peek().punct("?")) {
      SourceLoc loc = next().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Cond;
      e->loc = loc;
      e->kids.push_back(std::move(c));
      e->kids.push_back(expression());
      expect_punct(":");
      e->kids.push_back(conditional());
      return e;
    }
    return c;
  }

  static const std::vector<std::vector<std::pair<const char*, Op>>>& levels() {
    static const std::vector<std::vector<std::pair<const char*, Op>>> kLevels = {
        {{"||", Op::Or}},
        {{"&&", Op::And}},
        {{"|", Op::BitOr}},
        {{"^", Op::BitXor}},
        {{"&", Op::BitAnd}},
        {{"==", Op::Eq}, {"!=", Op::Ne}},
        {{"<", Op::Lt}, {"<=", Op::Le}, {">", Op::Gt}, {">=", Op::Ge}},
        {{"<<", Op::Shl}, {">>", Op::Shr}, {">>>", Op::Ushr}},
        {{"+", Op::Add}, {"-", Op::Sub}},
        {{"*", Op::Mul}, {"/", Op::Div}, {"%", Op::Mod}},
    };
    return kLevels;
  }

  ExprPtr binary(std::size_t level) {
    if (level == levels().size()) return unary();
    ExprPtr lhs = binary(level + 1);
    for (;;) {
      const Token& t = peek();
      Op found = Op::None;
      if (t.kind == Tok::Punct)
        for (const auto& [sym, op] : levels()[level])
          if (t.text == sym) found = op;
      if (found == Op::None) return lhs;
      SourceLoc loc = next().loc;
      lhs = make_binary(found, std::move(lhs), binary(level + 1), loc);
    }
  }

  ExprPtr unary() {
    const Token& t = peek();
    if (t.punct("-") || t.punct("+") || t.punct("!") || t.punct("~")) {
      SourceLoc loc = next().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Unary;
      e->loc = loc;
      e->op = t.text == "-" ? Op::Neg : t.text == "+" ? Op::Plus : t.text == "!" ? Op::Not : Op::BitNot;
      e->kids.push_back(unary());
      return e;
    }
    if (t.punct("++") || t.punct("--")) {
      bool inc = t.text == "++";
      SourceLoc loc = next().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::IncDec;
      e->loc = loc;
      e->prefix = true;
      e->increment = inc;
      ExprPtr target = unary();
      if (target->kind != ExprKind::Var && target->kind != ExprKind::Index)
        fail(t, "operand of ++/-- is not assignable");
      e->kids.push_back(std::move(target));
      return e;
    }
    if (t.punct("(") && is_type_keyword(peek(1))) {
      SourceLoc loc = next().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Cast;
      e->loc = loc;
      e->type = type();
      expect_punct(")");
      e->kids.push_back(unary());
      return e;
    }
    return postfix(primary());
  }

  ExprPtr postfix(ExprPtr e) {
    for (;;) {
      if (peek().punct("[")) {
        SourceLoc loc = next().loc;
        auto ix = std::make_unique<Expr>();
        ix->kind = ExprKind::Index;
        ix->loc = loc;
        ix->kids.push_back(std::move(e));
        ix->kids.push_back(expression());
        expect_punct("]");
        e = std::move(ix);
      } else if (peek().punct(".")) {
        SourceLoc loc = next().loc;
        if (!(peek().kind == Tok::Ident && peek().text == "length"))
          fail(peek(), "expected 'length' after '.'");
        next();
        auto len = std::make_unique<Expr>();
        len->kind = ExprKind::Length;
        len->loc = loc;
        len->kids.push_back(std::move(e));
        e = std::move(len);
      } else if (peek().punct("++") || peek().punct("--")) {
        if (e->kind != ExprKind::Var && e->kind != ExprKind::Index)
          fail(peek(), "operand of ++/-- is not assignable");
        const Token& t = next();
        auto inc = std::make_unique<Expr>();
        inc->kind = ExprKind::IncDec;
        inc->loc = t.loc;
        inc->prefix = false;
        inc->increment = t.text == "++";
        inc->kids.push_back(std::move(e));
        e = std::move(inc);
      } else {
        return e;
      }
    }
  }

  ExprPtr primary() {
    const Token& t = peek();
    auto e = std::make_unique<Expr>();
    e->loc = t.loc;
    switch (t.kind) {
      case Tok::IntLit:
        e->kind = ExprKind::IntLit;
        e->ival = static_cast<std::int32_t>(static_cast<std::uint32_t>(t.ival));
        next();
        return e;
      case Tok::LongLit:
        e->kind = ExprKind::LongLit;
        e->ival = t.ival;
        next();
        return e;
      case Tok::DoubleLit:
        e->kind = ExprKind::DoubleLit;
        e->dval = t.dval;
        next();
        return e;
      case Tok::Keyword:
        if (t.text == "true" || t.text == "false") {
          e->kind = ExprKind::BoolLit;
          e->bval = t.text == "true";
          next();
          return e;
        }
        if (t.text == "new") {
          next();
          e->kind = ExprKind::NewArray;
          if (!is_type_keyword(peek())) fail(peek(), "expected element type after 'new'");
          e->type = Type{base_of(next().text), 0};
          while (peek().punct("[")) {
            next();
            if (peek().punct("]")) {
              next();
              ++e->type.rank;
              continue;
            }
            if (static_cast<int>(e->kids.size()) != e->type.rank)
              fail(peek(), "array dimension expression after an empty dimension");
            e->kids.push_back(expression());
            expect_punct("]");
            ++e->type.rank;
          }
          if (e->type.rank == 0 || e->kids.empty()) fail(peek(), "array creation requires a dimension");
          if (e->type.rank > 2) fail(peek(), "arrays of more than two dimensions are not supported");
          return e;
        }
        fail(t, "unexpected keyword '" + t.text + "'");
      case Tok::Ident: {
        std::string name = next().text;
        if (name == "Math" && peek().punct(".")) {
          next();
          e->name = expect_ident();
          if (!peek().punct("(") && (e->name == "PI" || e->name == "E")) {
            e->kind = ExprKind::DoubleLit;
            e->dval = e->name == "PI" ? 3.141592653589793 : 2.718281828459045;
            e->name.clear();
            return e;
          }
          e->kind = ExprKind::Math;
          e->kids = call_args();
          return e;
        }
        if (peek().punct("(")) {
          e->kind = ExprKind::Call;
          e->name = name;
          e->kids = call_args();
          return e;
        }
        e->kind = ExprKind::Var;
        e->name = name;
        return e;
      }
      case Tok::Punct:
        if (t.punct("(")) {
          next();
          ExprPtr inner = expression();
          expect_punct(")");
          return inner;
        }
        break;
      default:
        break;
    }
    fail(t, "unexpected " + describe(t));
  }
};

}  // namespace

Program parse(std::string_view source) {
  Parser p(tokenize(source));
  return p.program();
}

}  // namespace somd
