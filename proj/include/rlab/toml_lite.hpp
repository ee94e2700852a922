#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rlab::toml {

/// Minimal TOML reader covering the subset used by the config files:
/// bare/dotted keys, [table] headers, strings, integers, floats, booleans,
/// and (possibly multiline) arrays. Dates, inline tables, and arrays of
/// tables are intentionally out of scope.
class Value;
using Table = std::map<std::string, Value>;
using Array = std::vector<Value>;

class Value {
  public:
    using Storage = std::variant<bool, std::int64_t, double, std::string, Array, Table>;

    Value() : v_(false) {}
    explicit Value(Storage v) : v_(std::move(v)) {}

    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
    bool is_float() const { return std::holds_alternative<double>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }
    bool is_array() const { return std::holds_alternative<Array>(v_); }
    bool is_table() const { return std::holds_alternative<Table>(v_); }

    bool as_bool() const;
    std::int64_t as_int() const;
    /// Accepts both integer and float storage.
    double as_double() const;
    const std::string& as_string() const;
    const Array& as_array() const;
    const Table& as_table() const;
    Table& as_table_mut();

  private:
    Storage v_;
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Parse a full document; throws ParseError with a line number on bad input.
Table parse(const std::string& text);
Table parse_file(const std::string& path);

/// Lookup helpers: dotted path into nested tables. The require_* forms throw
/// ParseError when missing or mistyped; find returns nullptr when absent.
const Value* find(const Table& t, const std::string& dotted_key);
bool require_bool(const Table& t, const std::string& key);
std::int64_t require_int(const Table& t, const std::string& key);
double require_double(const Table& t, const std::string& key);
std::string require_string(const Table& t, const std::string& key);
const Array& require_array(const Table& t, const std::string& key);
const Table& require_table(const Table& t, const std::string& key);

bool get_bool(const Table& t, const std::string& key, bool fallback);
std::int64_t get_int(const Table& t, const std::string& key, std::int64_t fallback);
double get_double(const Table& t, const std::string& key, double fallback);
std::string get_string(const Table& t, const std::string& key, const std::string& fallback);

std::vector<double> as_double_array(const Array& a, const std::string& what);
std::vector<std::int64_t> as_int_array(const Array& a, const std::string& what);

} // namespace rlab::toml
