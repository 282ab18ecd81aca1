#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace somd {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

enum class BaseType : std::uint8_t { Void, Int, Long, Double, Bool };

/// A scalar or array type. `rank` is the number of array dimensions (0..2).
struct Type {
  BaseType base = BaseType::Void;
  int rank = 0;

  bool is_array() const { return rank > 0; }
  bool is_scalar() const { return rank == 0 && base != BaseType::Void; }
  bool is_numeric() const {
    return rank == 0 && (base == BaseType::Int || base == BaseType::Long ||
                         base == BaseType::Double);
  }
  Type element() const { return Type{base, rank > 0 ? rank - 1 : 0}; }
  friend bool operator==(const Type&, const Type&) = default;
};

std::string to_string(const Type& t);

enum class Op : std::uint8_t {
  None,
  Add, Sub, Mul, Div, Mod,
  Shl, Shr, Ushr,
  BitAnd, BitOr, BitXor,
  And, Or,
  Eq, Ne, Lt, Le, Gt, Ge,
  Neg, Plus, Not, BitNot,
};

const char* op_symbol(Op op);

enum class ExprKind : std::uint8_t {
  IntLit, LongLit, DoubleLit, BoolLit,
  Var,       // name, slot (or global index)
  Index,     // kids[0][kids[1]]
  Length,    // kids[0].length
  Unary,     // op kids[0]
  Binary,    // kids[0] op kids[1]
  Assign,    // kids[0] (op)= kids[1]; op == None for plain assignment
  IncDec,    // ++/-- kids[0], prefix or postfix
  Call,      // user method call; name, method_index, kids = args
  Math,      // Math.<name>(kids)
  NewArray,  // new <type.base>[kids...] with `type` the full array type
  Cast,      // (type) kids[0]
  Cond,      // kids[0] ? kids[1] : kids[2]
  // Forms introduced by lowering.
  RangeBound,  // owned-range bound of distributed value `dist_id`, dimension `dim`; upper selects hi
  AuxCall,     // intermediate-reduction call to auxiliary method `aux_id`; kids = args
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  SourceLoc loc;
  Op op = Op::None;
  std::int64_t ival = 0;
  double dval = 0.0;
  bool bval = false;
  std::string name;
  int slot = -1;          // frame slot of a local/param; -1 when global
  int global_index = -1;  // index into Program::globals
  int method_index = -1;  // resolved callee for Call
  Type type;              // static type (annotated), or target type for Cast/NewArray
  int dim = 0;            // RangeBound: 1-based dimension
  int dist_id = -1;       // RangeBound
  int aux_id = -1;        // AuxCall
  bool upper = false;     // RangeBound
  bool prefix = false;    // IncDec
  bool increment = false; // IncDec
  std::vector<ExprPtr> kids;

  ExprPtr clone() const;
};

ExprPtr make_int(std::int64_t v, SourceLoc loc = {});
ExprPtr make_var(const std::string& name, int slot, SourceLoc loc = {});
ExprPtr make_binary(Op op, ExprPtr l, ExprPtr r, SourceLoc loc = {});
ExprPtr make_math(const std::string& fn, ExprPtr a, ExprPtr b, SourceLoc loc = {});

struct ViewPair {
  int before = 0;
  int after = 0;
  friend bool operator==(const ViewPair&, const ViewPair&) = default;
};

enum class DistStrategy : std::uint8_t { Block, User };

/// Partitioning qualifier attached to a parameter or local (`dist(...)`).
struct DistSpec {
  DistStrategy strategy = DistStrategy::Block;
  std::string user_name;
  std::vector<ExprPtr> user_args;
  std::vector<ViewPair> view;      // per dimension, dimension 1 first
  std::vector<ViewPair> polyview;  // mutually exclusive with view
  std::vector<int> dims;           // 1-based dimensions to partition; empty = all
  SourceLoc loc;

  DistSpec clone() const;
  /// Halo extent for 1-based dimension `d` (zero when unspecified).
  ViewPair halo(int d) const;
  bool partitions(int d, int rank) const;
};

enum class ReduceKind : std::uint8_t { PrimOp, ArrayAssembly, Self, User };

/// Reduction qualifier (`reduce(+)`, `reduce(self)`, `reduce(Name(args))`).
struct ReduceSpec {
  ReduceKind kind = ReduceKind::ArrayAssembly;
  Op op = Op::None;  // Add, Sub or Mul for PrimOp
  std::string user_name;
  std::vector<ExprPtr> user_args;
  SourceLoc loc;

  ReduceSpec clone() const;
  static ReduceSpec prim(Op op) {
    ReduceSpec r;
    r.kind = ReduceKind::PrimOp;
    r.op = op;
    return r;
  }
};

std::string to_string(const ReduceSpec& r);

enum class StmtKind : std::uint8_t {
  VarDecl, ExprStmt, Block, If, For, While, Return, Sync, Empty,
  // Forms introduced by lowering.
  ResultWrite,  // results[rank] := expr; completed.advance(); MI ends
  FenceWait,    // fence.advanceAndWait()
  SyncCombine,  // target := reduceAll(reduce, target)
  Launch,       // device kernel launch `kernel_id`
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
  StmtKind kind = StmtKind::Empty;
  SourceLoc loc;

  // VarDecl
  Type type;
  std::string name;
  int slot = -1;
  bool shared = false;
  std::optional<DistSpec> dist;

  // VarDecl init, ExprStmt, Return, If/For/While condition
  ExprPtr expr;

  // For
  StmtPtr init;
  ExprPtr step;

  // If: body = then, else_body = else. For/While/Sync: body.
  StmtPtr body;
  StmtPtr else_body;

  // Block
  std::vector<StmtPtr> stmts;

  // Sync / SyncCombine
  std::string target;
  int target_slot = -1;
  std::optional<ReduceSpec> reduce;

  // For annotations (filled by validation)
  int loop_rank = -1;
  std::string induction;
  int induction_slot = -1;

  // Launch
  int kernel_id = -1;

  StmtPtr clone() const;
};

StmtPtr make_block(std::vector<StmtPtr> stmts, SourceLoc loc = {});

struct Param {
  std::string name;
  Type type;
  std::optional<DistSpec> dist;
  SourceLoc loc;
  int slot = -1;
  bool written = false;  // set by validation for dist params whose elements are assigned
};

struct MethodDecl {
  std::string name;
  Type return_type;
  std::vector<Param> params;
  std::optional<ReduceSpec> reduce;  // explicit qualifier, if any
  StmtPtr body;
  SourceLoc loc;

  // Filled by validation.
  int num_slots = 0;
  std::vector<Type> slot_types;
  std::vector<std::string> slot_names;
  bool is_somd = false;

  /// Effective reduction: explicit qualifier, or ArrayAssembly for array returns.
  std::optional<ReduceSpec> effective_reduce() const;
  MethodDecl clone() const;
};

/// Program-level `final` constant.
struct GlobalConst {
  std::string name;
  Type type;
  ExprPtr init;
  SourceLoc loc;
};

struct Program {
  std::vector<MethodDecl> methods;
  std::vector<GlobalConst> globals;
  std::vector<std::string> user_strategies;  // names referenced by dist/reduce qualifiers

  const MethodDecl* find(const std::string& name) const;
  int index_of(const std::string& name) const;
  Program clone() const;
};

}  // namespace somd
