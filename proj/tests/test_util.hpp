#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "somd/validate.hpp"
#include "somd/value.hpp"

namespace somd::test {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string listing_path(const std::string& name) {
  return std::string(SOMD_TEST_DIR) + "/listings/" + name + ".somd";
}

inline std::string listing(const std::string& name) { return read_file(listing_path(name)); }

inline Value ints(std::vector<std::int64_t> v) { return Value::of_array(Array::from_ints(BaseType::Int, std::move(v))); }
inline Value dbls(std::vector<double> v) { return Value::of_array(Array::from_doubles(std::move(v))); }

inline Value matrix(const std::vector<std::vector<double>>& rows) {
  auto a = Array::make2(BaseType::Double, static_cast<std::int64_t>(rows.size()),
                        rows.empty() ? 0 : static_cast<std::int64_t>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) a->rows[i]->dbls = rows[i];
  return Value::of_array(a);
}

inline std::vector<std::int64_t> int_cells(const Value& v) { return v.arr->ints; }
inline std::vector<double> dbl_cells(const Value& v) { return v.arr->dbls; }

inline Value deep(const Value& v) { return v.is_array() ? Value::of_array(v.arr->deep_copy()) : v; }

inline std::vector<Value> deep(const std::vector<Value>& args) {
  std::vector<Value> out;
  for (const auto& a : args) out.push_back(deep(a));
  return out;
}

}  // namespace somd::test
