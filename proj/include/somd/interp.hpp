#pragma once

#include <cstdint>
#include <vector>

#include "somd/ast.hpp"
#include "somd/value.hpp"

namespace somd {

struct Frame {
  std::vector<Value> slots;
};

/// Callbacks through which lowered code talks to a backend. Every default throws, so the
/// sequential interpreter (no hooks) rejects lowered forms.
class ExecHooks {
 public:
  virtual ~ExecHooks() = default;

  virtual std::int64_t range_bound(int dist_id, int dim, bool upper);
  virtual void result_write(const Value& v);
  virtual void fence_wait();
  virtual Value sync_combine(const ReduceSpec& r, const Value& local);
  virtual Value aux_call(int aux_id, std::vector<Value>& args, SourceLoc loc);
  virtual void launch(int kernel_id, Frame& frame, SourceLoc loc);

  /// Lets a backend take over a call to a user method. Returns true when `out` was produced.
  virtual bool intercept_call(int method_index, std::vector<Value>& args, Value& out);

  /// Element access notification, only delivered when `watch_access` is set.
  /// `j` is -1 for one-dimensional accesses.
  virtual void on_access(const Array* root, std::int64_t i, std::int64_t j, bool write,
                         SourceLoc loc);
  /// Fresh `new` array, only delivered when `watch_access` is set.
  virtual void on_alloc(const ArrayPtr& a);

  bool watch_access = false;
};

/// Evaluates a binary operator with Java promotion and wraparound rules.
Value apply_binary(Op op, const Value& a, const Value& b, SourceLoc loc = {});
Value apply_unary(Op op, const Value& a, SourceLoc loc = {});
Value apply_math(const std::string& fn, const std::vector<Value>& args, SourceLoc loc = {});

/// Tree-walking evaluator over validated (slot-resolved) ASTs and their lowered forms.
class Evaluator {
 public:
  enum class Flow { Normal, Return, Halt };

  explicit Evaluator(const Program& program, ExecHooks* hooks = nullptr);

  /// Calls method `index` with `args`; hooks may intercept it.
  Value call(int index, std::vector<Value> args);
  /// Runs `m`'s body in a fresh frame without interception.
  Value invoke(const MethodDecl& m, std::vector<Value> args);

  Flow exec(const Stmt& s, Frame& f);
  Value eval(const Expr& e, Frame& f);

  /// Value of the last executed `return`.
  Value& returned() { return ret_; }

  const Program& program() const { return prog_; }
  const std::vector<Value>& globals() const { return globals_; }
  ExecHooks* hooks() const { return hooks_; }
  void set_hooks(ExecHooks* h) { hooks_ = h; }

 private:
  struct Place {
    Value* var = nullptr;
    Array* arr = nullptr;
    std::int64_t idx = 0;
    const Array* root = nullptr;
    std::int64_t i = 0;
    std::int64_t j = -1;
  };

  ExecHooks& lowered() const;
  Place locate(const Expr& e, Frame& f);
  Value load(const Place& p) const;
  void store(const Place& p, const Value& v, const Expr& target);
  Array* array_of(const Value& v, SourceLoc loc) const;
  std::int64_t checked_index(const Array* a, const Value& idx, SourceLoc loc) const;
  Value eval_index(const Expr& e, Frame& f);

  const Program& prog_;
  ExecHooks* hooks_;
  std::vector<Value> globals_;
  Value ret_;
  int depth_ = 0;
};

/// Sequential reference run: every qualifier is ignored and calls execute inline.
Value interpret(const Program& p, const std::string& method, std::vector<Value> args);

}  // namespace somd
