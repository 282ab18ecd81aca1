#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "somd/ast.hpp"

namespace somd {

struct Array;
using ArrayPtr = std::shared_ptr<Array>;

/// Runtime value. Int and Bool live in `i` (Int is kept in int32 range), Long in `i`,
/// Double in `d`.
struct Value {
  enum class Kind : std::uint8_t { Void, Int, Long, Double, Bool, Array };

  Kind kind = Kind::Void;
  std::int64_t i = 0;
  double d = 0.0;
  ArrayPtr arr;

  static Value of_int(std::int32_t v) { return {Kind::Int, v, 0.0, nullptr}; }
  static Value of_long(std::int64_t v) { return {Kind::Long, v, 0.0, nullptr}; }
  static Value of_double(double v) { return {Kind::Double, 0, v, nullptr}; }
  static Value of_bool(bool v) { return {Kind::Bool, v ? 1 : 0, 0.0, nullptr}; }
  static Value of_array(ArrayPtr a) { return {Kind::Array, 0, 0.0, std::move(a)}; }

  bool is_array() const { return kind == Kind::Array; }
  bool is_void() const { return kind == Kind::Void; }
  /// Numeric value widened to double.
  double as_double() const { return kind == Kind::Double ? d : static_cast<double>(i); }
  /// Integral value; doubles are converted with Java semantics.
  std::int64_t as_long() const;
  bool as_bool() const { return i != 0; }
};

/// One- or two-dimensional array. Rank-2 arrays hold their rows as rank-1 arrays, as in Java.
struct Array {
  BaseType elem = BaseType::Int;
  int rank = 1;
  std::vector<std::int64_t> ints;  // Int, Long and Bool elements
  std::vector<double> dbls;        // Double elements
  std::vector<ArrayPtr> rows;      // rank 2

  static ArrayPtr make(BaseType elem, std::int64_t len);
  static ArrayPtr make2(BaseType elem, std::int64_t rows, std::int64_t cols);
  static ArrayPtr from_ints(BaseType elem, std::vector<std::int64_t> v);
  static ArrayPtr from_doubles(std::vector<double> v);

  std::int64_t length() const;
  bool is_double() const { return elem == BaseType::Double; }
  Type type() const { return Type{elem, rank}; }

  /// Element read/write for rank-1 arrays, unchecked.
  Value get(std::int64_t idx) const;
  void set(std::int64_t idx, const Value& v);

  ArrayPtr deep_copy() const;
};

/// Converts `v` to `target` with Java conversion rules (narrowing included).
Value convert(const Value& v, BaseType target);

Value default_value(const Type& t);
Value::Kind kind_of(BaseType b);
BaseType base_of(const Value& v);

/// Exact structural equality. Doubles compare bitwise (NaN equals itself).
bool values_equal(const Value& a, const Value& b);

/// Structural equality with a relative tolerance on doubles.
bool values_close(const Value& a, const Value& b, double rel_tol);

/// Largest relative difference over all double cells (0 when structurally equal otherwise).
double max_rel_diff(const Value& a, const Value& b);

/// Order-sensitive 64-bit FNV-style checksum over the bit patterns of all cells.
std::uint64_t checksum(const Value& v);

std::string format_value(const Value& v, std::size_t max_elems = 64);

}  // namespace somd
