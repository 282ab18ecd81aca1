#include "somd/value.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace somd {

namespace {

std::int64_t java_d2l(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 9223372036854775807.0) return std::numeric_limits<std::int64_t>::max();
  if (d <= -9223372036854775808.0) return std::numeric_limits<std::int64_t>::min();
  return static_cast<std::int64_t>(d);
}

std::int32_t java_d2i(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 2147483647.0) return std::numeric_limits<std::int32_t>::max();
  if (d <= -2147483648.0) return std::numeric_limits<std::int32_t>::min();
  return static_cast<std::int32_t>(d);
}

}  // namespace

std::int64_t Value::as_long() const {
  if (kind == Kind::Double) return java_d2l(d);
  return i;
}

ArrayPtr Array::make(BaseType elem, std::int64_t len) {
  if (len < 0) throw std::invalid_argument("negative array size");
  auto a = std::make_shared<Array>();
  a->elem = elem;
  a->rank = 1;
  if (elem == BaseType::Double)
    a->dbls.assign(static_cast<std::size_t>(len), 0.0);
  else
    a->ints.assign(static_cast<std::size_t>(len), 0);
  return a;
}

ArrayPtr Array::make2(BaseType elem, std::int64_t rows, std::int64_t cols) {
  if (rows < 0) throw std::invalid_argument("negative array size");
  auto a = std::make_shared<Array>();
  a->elem = elem;
  a->rank = 2;
  a->rows.resize(static_cast<std::size_t>(rows));
  if (cols >= 0)
    for (auto& r : a->rows) r = make(elem, cols);
  return a;
}

ArrayPtr Array::from_ints(BaseType elem, std::vector<std::int64_t> v) {
  auto a = std::make_shared<Array>();
  a->elem = elem;
  a->ints = std::move(v);
  return a;
}

ArrayPtr Array::from_doubles(std::vector<double> v) {
  auto a = std::make_shared<Array>();
  a->elem = BaseType::Double;
  a->dbls = std::move(v);
  return a;
}

std::int64_t Array::length() const {
  if (rank == 2) return static_cast<std::int64_t>(rows.size());
  return static_cast<std::int64_t>(elem == BaseType::Double ? dbls.size() : ints.size());
}

Value Array::get(std::int64_t idx) const {
  auto k = static_cast<std::size_t>(idx);
  switch (elem) {
    case BaseType::Double: return Value::of_double(dbls[k]);
    case BaseType::Long: return Value::of_long(ints[k]);
    case BaseType::Bool: return Value::of_bool(ints[k] != 0);
    default: return Value::of_int(static_cast<std::int32_t>(ints[k]));
  }
}

void Array::set(std::int64_t idx, const Value& v) {
  auto k = static_cast<std::size_t>(idx);
  if (elem == BaseType::Double)
    dbls[k] = v.as_double();
  else
    ints[k] = convert(v, elem).i;
}

ArrayPtr Array::deep_copy() const {
  auto a = std::make_shared<Array>(*this);
  for (auto& r : a->rows)
    if (r) r = r->deep_copy();
  return a;
}

Value::Kind kind_of(BaseType b) {
  switch (b) {
    case BaseType::Int: return Value::Kind::Int;
    case BaseType::Long: return Value::Kind::Long;
    case BaseType::Double: return Value::Kind::Double;
    case BaseType::Bool: return Value::Kind::Bool;
    default: return Value::Kind::Void;
  }
}

BaseType base_of(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Int: return BaseType::Int;
    case Value::Kind::Long: return BaseType::Long;
    case Value::Kind::Double: return BaseType::Double;
    case Value::Kind::Bool: return BaseType::Bool;
    default: return BaseType::Void;
  }
}

Value convert(const Value& v, BaseType target) {
  if (v.kind == Value::Kind::Array) return v;
  switch (target) {
    case BaseType::Int:
      if (v.kind == Value::Kind::Int) return v;
      if (v.kind == Value::Kind::Double) return Value::of_int(java_d2i(v.d));
      return Value::of_int(static_cast<std::int32_t>(static_cast<std::uint32_t>(v.i)));
    case BaseType::Long:
      if (v.kind == Value::Kind::Double) return Value::of_long(java_d2l(v.d));
      return Value::of_long(v.i);
    case BaseType::Double:
      return Value::of_double(v.as_double());
    case BaseType::Bool:
      return Value::of_bool(v.i != 0);
    default:
      return v;
  }
}

Value default_value(const Type& t) {
  if (t.rank > 0) return Value::of_array(nullptr);
  switch (t.base) {
    case BaseType::Int: return Value::of_int(0);
    case BaseType::Long: return Value::of_long(0);
    case BaseType::Double: return Value::of_double(0.0);
    case BaseType::Bool: return Value::of_bool(false);
    default: return Value{};
  }
}

namespace {

bool arrays_compare(const Array* a, const Array* b, double tol, double* worst) {
  if (!a || !b) return a == b;
  if (a->rank != b->rank || a->elem != b->elem || a->length() != b->length()) return false;
  if (a->rank == 2) {
    for (std::size_t r = 0; r < a->rows.size(); ++r)
      if (!arrays_compare(a->rows[r].get(), b->rows[r].get(), tol, worst)) return false;
    return true;
  }
  if (a->elem != BaseType::Double) return a->ints == b->ints;
  for (std::size_t k = 0; k < a->dbls.size(); ++k) {
    double x = a->dbls[k];
    double y = b->dbls[k];
    if (std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y)) continue;
    double scale = std::max({std::fabs(x), std::fabs(y), 1e-300});
    double rel = std::fabs(x - y) / scale;
    if (std::isnan(rel)) return false;
    if (worst) *worst = std::max(*worst, rel);
    if (rel > tol) return false;
  }
  return true;
}

bool scalar_compare(const Value& a, const Value& b, double tol, double* worst) {
  if (a.kind != b.kind) return false;
  if (a.kind == Value::Kind::Array) return arrays_compare(a.arr.get(), b.arr.get(), tol, worst);
  if (a.kind != Value::Kind::Double) return a.i == b.i;
  if (std::bit_cast<std::uint64_t>(a.d) == std::bit_cast<std::uint64_t>(b.d)) return true;
  double scale = std::max({std::fabs(a.d), std::fabs(b.d), 1e-300});
  double rel = std::fabs(a.d - b.d) / scale;
  if (std::isnan(rel)) return false;
  if (worst) *worst = std::max(*worst, rel);
  return rel <= tol;
}

}  // namespace

bool values_equal(const Value& a, const Value& b) { return scalar_compare(a, b, 0.0, nullptr); }

bool values_close(const Value& a, const Value& b, double rel_tol) {
  return scalar_compare(a, b, rel_tol, nullptr);
}

double max_rel_diff(const Value& a, const Value& b) {
  double worst = 0.0;
  if (!scalar_compare(a, b, std::numeric_limits<double>::infinity(), &worst))
    return std::numeric_limits<double>::infinity();
  return worst;
}

namespace {

void mix(std::uint64_t& h, std::uint64_t x) {
  h ^= x;
  h *= 0x100000001b3ULL;
  h ^= h >> 29;
}

void checksum_array(std::uint64_t& h, const Array* a) {
  if (!a) {
    mix(h, 0xdeadULL);
    return;
  }
  mix(h, static_cast<std::uint64_t>(a->length()));
  if (a->rank == 2) {
    for (const auto& r : a->rows) checksum_array(h, r.get());
    return;
  }
  if (a->elem == BaseType::Double)
    for (double d : a->dbls) mix(h, std::bit_cast<std::uint64_t>(d));
  else
    for (auto x : a->ints) mix(h, static_cast<std::uint64_t>(x));
}

}  // namespace

std::uint64_t checksum(const Value& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  mix(h, static_cast<std::uint64_t>(v.kind));
  if (v.kind == Value::Kind::Array)
    checksum_array(h, v.arr.get());
  else if (v.kind == Value::Kind::Double)
    mix(h, std::bit_cast<std::uint64_t>(v.d));
  else
    mix(h, static_cast<std::uint64_t>(v.i));
  return h;
}

namespace {

void format_scalar(std::ostringstream& os, const Value& v) {
  switch (v.kind) {
    case Value::Kind::Void: os << "void"; break;
    case Value::Kind::Bool: os << (v.i ? "true" : "false"); break;
    case Value::Kind::Double: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v.d);
      os << buf;
      break;
    }
    case Value::Kind::Long: os << v.i << 'L'; break;
    default: os << v.i; break;
  }
}

void format_array(std::ostringstream& os, const Array* a, std::size_t max_elems) {
  if (!a) {
    os << "null";
    return;
  }
  os << '[';
  auto n = static_cast<std::size_t>(a->length());
  for (std::size_t k = 0; k < n && k < max_elems; ++k) {
    if (k) os << ", ";
    if (a->rank == 2)
      format_array(os, a->rows[k].get(), max_elems);
    else
      format_scalar(os, a->get(static_cast<std::int64_t>(k)));
  }
  if (n > max_elems) os << ", ... (" << n << " total)";
  os << ']';
}

}  // namespace

std::string format_value(const Value& v, std::size_t max_elems) {
  std::ostringstream os;
  if (v.kind == Value::Kind::Array)
    format_array(os, v.arr.get(), max_elems);
  else
    format_scalar(os, v);
  return os.str();
}

}  // namespace somd
