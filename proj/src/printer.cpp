#include "somd/printer.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

namespace somd {

namespace {

constexpr int kAssignPrec = 1;
constexpr int kCondPrec = 2;
constexpr int kUnaryPrec = 13;
constexpr int kPostfixPrec = 14;
constexpr int kPrimaryPrec = 15;

int binary_prec(Op op) {
  switch (op) {
    case Op::Or: return 3;
    case Op::And: return 4;
    case Op::BitOr: return 5;
    case Op::BitXor: return 6;
    case Op::BitAnd: return 7;
    case Op::Eq: case Op::Ne: return 8;
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: return 9;
    case Op::Shl: case Op::Shr: case Op::Ushr: return 10;
    case Op::Add: case Op::Sub: return 11;
    case Op::Mul: case Op::Div: case Op::Mod: return 12;
    default: return kPrimaryPrec;
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

class ExprPrinter {
 public:
  explicit ExprPrinter(const PrintNames& names) : names_(names) {}

  std::string print(const Expr& e, int required = 0) {
    int prec = 0;
    std::string s = render(e, prec);
    if (prec < required) return "(" + s + ")";
    return s;
  }

 private:
  const PrintNames& names_;

  std::string args(const std::vector<ExprPtr>& kids, std::size_t from = 0) {
    std::string s;
    for (std::size_t i = from; i < kids.size(); ++i) {
      if (i > from) s += ", ";
      s += print(*kids[i], kAssignPrec);
    }
    return s;
  }

  std::string render(const Expr& e, int& prec) {
    prec = kPrimaryPrec;
    switch (e.kind) {
      case ExprKind::IntLit:
        if (e.ival < 0) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "0x%" PRIX32,
                        static_cast<std::uint32_t>(static_cast<std::int32_t>(e.ival)));
          return buf;
        }
        return std::to_string(e.ival);
      case ExprKind::LongLit:
        if (e.ival < 0) {
          char buf[40];
          std::snprintf(buf, sizeof buf, "0x%" PRIX64 "L", static_cast<std::uint64_t>(e.ival));
          return buf;
        }
        return std::to_string(e.ival) + "L";
      case ExprKind::DoubleLit:
        return format_double(e.dval);
      case ExprKind::BoolLit:
        return e.bval ? "true" : "false";
      case ExprKind::Var:
        return e.name;
      case ExprKind::Index:
        prec = kPostfixPrec;
        return print(*e.kids[0], kPostfixPrec) + "[" + print(*e.kids[1]) + "]";
      case ExprKind::Length:
        prec = kPostfixPrec;
        return print(*e.kids[0], kPostfixPrec) + ".length";
      case ExprKind::Unary: {
        prec = kUnaryPrec;
        std::string operand = print(*e.kids[0], kUnaryPrec);
        std::string sym = op_symbol(e.op);
        if (!operand.empty() && (operand[0] == sym[0])) sym += ' ';
        return sym + operand;
      }
      case ExprKind::Binary: {
        int p = binary_prec(e.op);
        prec = p;
        return print(*e.kids[0], p) + " " + op_symbol(e.op) + " " + print(*e.kids[1], p + 1);
      }
      case ExprKind::Assign:
        prec = kAssignPrec;
        return print(*e.kids[0], kPostfixPrec) + " " + op_symbol(e.op) + "= " +
               print(*e.kids[1], kAssignPrec);
      case ExprKind::IncDec: {
        const char* sym = e.increment ? "++" : "--";
        if (e.prefix) {
          prec = kUnaryPrec;
          return sym + print(*e.kids[0], kPostfixPrec);
        }
        prec = kPostfixPrec;
        return print(*e.kids[0], kPostfixPrec) + sym;
      }
      case ExprKind::Call:
        return e.name + "(" + args(e.kids) + ")";
      case ExprKind::Math:
        return "Math." + e.name + "(" + args(e.kids) + ")";
      case ExprKind::NewArray: {
        std::string s = "new " + to_string(Type{e.type.base, 0});
        for (const auto& k : e.kids) s += "[" + print(*k) + "]";
        for (int i = static_cast<int>(e.kids.size()); i < e.type.rank; ++i) s += "[]";
        return s;
      }
      case ExprKind::Cast:
        prec = kUnaryPrec;
        return "(" + to_string(e.type) + ") " + print(*e.kids[0], kUnaryPrec);
      case ExprKind::Cond:
        prec = kCondPrec;
        return print(*e.kids[0], kCondPrec + 1) + " ? " + print(*e.kids[1], kAssignPrec) +
               " : " + print(*e.kids[2], kCondPrec);
      case ExprKind::RangeBound: {
        std::string base = names_.range ? names_.range(e.dist_id, e.dim)
                                         : "range" + std::to_string(e.dist_id) + "_" + std::to_string(e.dim);
        return base + (e.upper ? "[1]" : "[0]");
      }
      case ExprKind::AuxCall: {
        std::string n = names_.aux ? names_.aux(e.aux_id) : "aux" + std::to_string(e.aux_id);
        return n + "(" + args(e.kids) + ")";
      }
    }
    return "?";
  }
};

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 2, ' '); }

std::string decl_head(const Stmt& s) {
  std::string out;
  if (s.shared) out += "shared ";
  if (s.dist) out += print_dist(*s.dist) + " ";
  out += to_string(s.type) + " " + s.name;
  return out;
}

class StmtPrinter {
 public:
  explicit StmtPrinter(const PrintNames& names) : names_(names), exprs_(names) {}

  void stmt(std::ostringstream& os, const Stmt& s, int indent) {
    switch (s.kind) {
      case StmtKind::VarDecl:
        os << pad(indent) << decl(s) << ";\n";
        return;
      case StmtKind::ExprStmt:
        os << pad(indent) << exprs_.print(*s.expr) << ";\n";
        return;
      case StmtKind::Empty:
        os << pad(indent) << ";\n";
        return;
      case StmtKind::Block:
        os << pad(indent) << "{\n";
        for (const auto& c : s.stmts) stmt(os, *c, indent + 1);
        os << pad(indent) << "}\n";
        return;
      case StmtKind::If:
        os << pad(indent) << "if (" << exprs_.print(*s.expr) << ")";
        nested(os, *s.body, indent);
        if (s.else_body) {
          os << pad(indent) << "else";
          nested(os, *s.else_body, indent);
        }
        return;
      case StmtKind::For: {
        os << pad(indent) << "for (";
        if (s.init) {
          if (s.init->kind == StmtKind::VarDecl)
            os << decl(*s.init);
          else
            os << exprs_.print(*s.init->expr);
        }
        os << ";";
        if (s.expr) os << " " << exprs_.print(*s.expr);
        os << ";";
        if (s.step) os << " " << exprs_.print(*s.step);
        os << ")";
        nested(os, *s.body, indent);
        return;
      }
      case StmtKind::While:
        os << pad(indent) << "while (" << exprs_.print(*s.expr) << ")";
        nested(os, *s.body, indent);
        return;
      case StmtKind::Return:
        os << pad(indent) << "return";
        if (s.expr) os << " " << exprs_.print(*s.expr);
        os << ";\n";
        return;
      case StmtKind::Sync:
        os << pad(indent) << "sync";
        if (s.reduce) os << " reduce(" << reduce_text(*s.reduce) << ")";
        if (!s.target.empty()) os << " (" << s.target << ")";
        nested(os, *s.body, indent);
        return;
      case StmtKind::ResultWrite:
        os << pad(indent) << "results[rank] = " << exprs_.print(*s.expr) << ";\n";
        os << pad(indent) << "completed.advance();\n";
        return;
      case StmtKind::FenceWait:
        os << pad(indent) << "fence.advanceAndWait();\n";
        return;
      case StmtKind::SyncCombine:
        os << pad(indent) << s.target << " = reduceAll(" << reduce_text(*s.reduce) << ", " << s.target
           << ");  // stage, fence, rank 0 combines, fence, broadcast\n";
        return;
      case StmtKind::Launch: {
        std::string n = names_.kernel ? names_.kernel(s.kernel_id) : "K" + std::to_string(s.kernel_id);
        os << pad(indent) << "launch " << n << ";\n";
        return;
      }
    }
  }

  std::string reduce_text(const ReduceSpec& r) {
    std::string s = r.kind == ReduceKind::User ? r.user_name : to_string(r);
    if (r.kind == ReduceKind::User && !r.user_args.empty()) {
      s += "(";
      for (std::size_t i = 0; i < r.user_args.size(); ++i) {
        if (i) s += ", ";
        s += exprs_.print(*r.user_args[i]);
      }
      s += ")";
    }
    return s;
  }

 private:
  const PrintNames& names_;
  ExprPrinter exprs_;

  std::string decl(const Stmt& s) {
    std::string out = decl_head(s);
    if (s.expr) out += " = " + exprs_.print(*s.expr, kAssignPrec);
    return out;
  }

  void nested(std::ostringstream& os, const Stmt& body, int indent) {
    if (body.kind == StmtKind::Block) {
      os << " {\n";
      for (const auto& c : body.stmts) stmt(os, *c, indent + 1);
      os << pad(indent) << "}\n";
    } else {
      os << "\n";
      stmt(os, body, indent + 1);
    }
  }
};

}  // namespace

std::string print_expr(const Expr& e, const PrintNames& names) {
  ExprPrinter p(names);
  return p.print(e);
}

std::string print_stmt(const Stmt& s, int indent, const PrintNames& names) {
  std::ostringstream os;
  StmtPrinter p(names);
  p.stmt(os, s, indent);
  return os.str();
}

std::string print_dist(const DistSpec& d) {
  std::vector<std::string> parts;
  if (d.strategy == DistStrategy::User) {
    std::string s = d.user_name;
    if (!d.user_args.empty()) {
      s += "(";
      for (std::size_t i = 0; i < d.user_args.size(); ++i) {
        if (i) s += ", ";
        s += print_expr(*d.user_args[i]);
      }
      s += ")";
    }
    parts.push_back(s);
  }
  auto pairs = [](const std::vector<ViewPair>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += "<" + std::to_string(v[i].before) + "," + std::to_string(v[i].after) + ">";
    }
    return s;
  };
  if (!d.view.empty()) parts.push_back("view = " + pairs(d.view));
  if (!d.polyview.empty()) parts.push_back("polyview = " + pairs(d.polyview));
  if (d.dims.size() == 1) {
    parts.push_back("dim = " + std::to_string(d.dims[0]));
  } else if (!d.dims.empty()) {
    std::string s = "dim = {";
    for (std::size_t i = 0; i < d.dims.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(d.dims[i]);
    }
    parts.push_back(s + "}");
  }
  if (parts.empty()) return "dist";
  std::string out = "dist(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out + ")";
}

std::string print_method(const MethodDecl& m, const PrintNames& names) {
  std::ostringstream os;
  StmtPrinter p(names);
  if (m.reduce) os << "reduce(" << p.reduce_text(*m.reduce) << ")\n";
  os << to_string(m.return_type) << " " << m.name << "(";
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (i) os << ", ";
    const auto& prm = m.params[i];
    if (prm.dist) os << print_dist(*prm.dist) << " ";
    os << to_string(prm.type) << " " << prm.name;
  }
  os << ")";
  os << " {\n";
  for (const auto& c : m.body->stmts) p.stmt(os, *c, 1);
  os << "}\n";
  return os.str();
}

std::string print_program(const Program& prog) {
  std::ostringstream os;
  for (const auto& g : prog.globals)
    os << "final " << to_string(g.type) << " " << g.name << " = " << print_expr(*g.init) << ";\n";
  if (!prog.globals.empty()) os << "\n";
  for (std::size_t i = 0; i < prog.methods.size(); ++i) {
    if (i) os << "\n";
    os << print_method(prog.methods[i]);
  }
  return os.str();
}

namespace {

void dump(std::ostringstream& os, const Expr& e);

void dump_list(std::ostringstream& os, const std::vector<ExprPtr>& v) {
  for (const auto& k : v) {
    os << ' ';
    dump(os, *k);
  }
}

void dump(std::ostringstream& os, const Expr& e) {
  os << '(' << static_cast<int>(e.kind) << ' ' << static_cast<int>(e.op) << ' ';
  switch (e.kind) {
    case ExprKind::IntLit:
    case ExprKind::LongLit: os << e.ival; break;
    case ExprKind::DoubleLit: os << format_double(e.dval); break;
    case ExprKind::BoolLit: os << e.bval; break;
    case ExprKind::Var:
    case ExprKind::Call:
    case ExprKind::Math: os << e.name; break;
    case ExprKind::NewArray:
    case ExprKind::Cast: os << to_string(e.type); break;
    case ExprKind::IncDec: os << e.prefix << e.increment; break;
    default: break;
  }
  dump_list(os, e.kids);
  os << ')';
}

void dump_dist(std::ostringstream& os, const DistSpec& d) {
  os << "(dist " << static_cast<int>(d.strategy) << ' ' << d.user_name;
  dump_list(os, d.user_args);
  for (const auto& v : d.view) os << " v" << v.before << ',' << v.after;
  for (const auto& v : d.polyview) os << " p" << v.before << ',' << v.after;
  for (int x : d.dims) os << " d" << x;
  os << ')';
}

void dump_reduce(std::ostringstream& os, const ReduceSpec& r) {
  os << "(reduce " << static_cast<int>(r.kind) << ' ' << static_cast<int>(r.op) << ' ' << r.user_name;
  dump_list(os, r.user_args);
  os << ')';
}

void dump(std::ostringstream& os, const Stmt& s) {
  os << "[" << static_cast<int>(s.kind);
  switch (s.kind) {
    case StmtKind::VarDecl:
      os << ' ' << to_string(s.type) << ' ' << s.name << " shared=" << s.shared;
      if (s.dist) dump_dist(os, *s.dist);
      break;
    case StmtKind::Sync:
      os << " target=" << s.target;
      if (s.reduce) dump_reduce(os, *s.reduce);
      break;
    default:
      break;
  }
  if (s.expr) {
    os << " e=";
    dump(os, *s.expr);
  }
  if (s.init) {
    os << " init=";
    dump(os, *s.init);
  }
  if (s.step) {
    os << " step=";
    dump(os, *s.step);
  }
  if (s.body) {
    os << " body=";
    dump(os, *s.body);
  }
  if (s.else_body) {
    os << " else=";
    dump(os, *s.else_body);
  }
  for (const auto& c : s.stmts) {
    os << ' ';
    dump(os, *c);
  }
  os << ']';
}

}  // namespace

std::string dump_structure(const Program& p) {
  std::ostringstream os;
  for (const auto& g : p.globals) {
    os << "global " << to_string(g.type) << ' ' << g.name << ' ';
    dump(os, *g.init);
    os << '\n';
  }
  for (const auto& m : p.methods) {
    os << "method " << m.name << ' ' << to_string(m.return_type);
    if (m.reduce) dump_reduce(os, *m.reduce);
    for (const auto& prm : m.params) {
      os << " param " << to_string(prm.type) << ' ' << prm.name;
      if (prm.dist) dump_dist(os, *prm.dist);
    }
    os << ' ';
    dump(os, *m.body);
    os << '\n';
  }
  return os.str();
}

}  // namespace somd
