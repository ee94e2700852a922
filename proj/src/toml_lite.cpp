#include "rlab/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rlab::toml {

bool Value::as_bool() const {
    if (!is_bool()) throw ParseError("value is not a boolean");
    return std::get<bool>(v_);
}

std::int64_t Value::as_int() const {
    if (!is_int()) throw ParseError("value is not an integer");
    return std::get<std::int64_t>(v_);
}

double Value::as_double() const {
    if (is_int()) return static_cast<double>(std::get<std::int64_t>(v_));
    if (!is_float()) throw ParseError("value is not a number");
    return std::get<double>(v_);
}

const std::string& Value::as_string() const {
    if (!is_string()) throw ParseError("value is not a string");
    return std::get<std::string>(v_);
}

const Array& Value::as_array() const {
    if (!is_array()) throw ParseError("value is not an array");
    return std::get<Array>(v_);
}

const Table& Value::as_table() const {
    if (!is_table()) throw ParseError("value is not a table");
    return std::get<Table>(v_);
}

Table& Value::as_table_mut() {
    if (!is_table()) throw ParseError("value is not a table");
    return std::get<Table>(v_);
}

namespace {

struct Cursor {
    const std::string& s;
    std::size_t i = 0;
    int line = 1;

    bool done() const { return i >= s.size(); }
    char peek() const { return s[i]; }
    char take() {
        char c = s[i++];
        if (c == '\n') ++line;
        return c;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("toml parse error at line " + std::to_string(line) + ": " + msg);
    }
};

void skip_ws_inline(Cursor& c) {
    while (!c.done() && (c.peek() == ' ' || c.peek() == '\t')) c.take();
}

void skip_comment(Cursor& c) {
    if (!c.done() && c.peek() == '#') {
        while (!c.done() && c.peek() != '\n') c.take();
    }
}

// Skips spaces, tabs, comments, and newlines (used inside arrays and between
// statements).
void skip_ws_any(Cursor& c) {
    for (;;) {
        skip_ws_inline(c);
        if (!c.done() && c.peek() == '#') {
            skip_comment(c);
            continue;
        }
        if (!c.done() && (c.peek() == '\n' || c.peek() == '\r')) {
            c.take();
            continue;
        }
        return;
    }
}

bool is_bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_bare_key(Cursor& c) {
    std::string k;
    while (!c.done() && is_bare_char(c.peek())) k.push_back(c.take());
    if (k.empty()) c.fail("expected key");
    return k;
}

std::string parse_basic_string(Cursor& c) {
    if (c.take() != '"') c.fail("expected '\"'");
    std::string out;
    for (;;) {
        if (c.done()) c.fail("unterminated string");
        char ch = c.take();
        if (ch == '"') break;
        if (ch == '\n') c.fail("newline in basic string");
        if (ch == '\\') {
            if (c.done()) c.fail("dangling escape");
            char e = c.take();
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                default: c.fail(std::string("unsupported escape \\") + e);
            }
        } else {
            out.push_back(ch);
        }
    }
    return out;
}

bool looks_numeric(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

Value parse_number_or_symbol(Cursor& c) {
    std::string tok;
    while (!c.done()) {
        char ch = c.peek();
        if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '+' || ch == '-' ||
            ch == '.' || ch == '_') {
            tok.push_back(c.take());
        } else {
            break;
        }
    }
    if (tok.empty()) c.fail("expected value");
    if (tok == "true") return Value{Value::Storage{true}};
    if (tok == "false") return Value{Value::Storage{false}};

    std::string digits;
    digits.reserve(tok.size());
    for (char ch : tok) {
        if (ch == '_') continue; // TOML digit separators
        digits.push_back(ch);
    }
    const bool floaty = digits.find('.') != std::string::npos ||
                        digits.find('e') != std::string::npos ||
                        digits.find('E') != std::string::npos ||
                        digits.find("inf") != std::string::npos ||
                        digits.find("nan") != std::string::npos;
    if (!floaty) {
        std::int64_t iv = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), iv);
        if (ec == std::errc() && p == digits.data() + digits.size()) {
            return Value{Value::Storage{iv}};
        }
    }
    try {
        std::size_t used = 0;
        double dv = std::stod(digits, &used);
        if (used != digits.size()) c.fail("malformed number '" + tok + "'");
        return Value{Value::Storage{dv}};
    } catch (const std::exception&) {
        c.fail("malformed number '" + tok + "'");
    }
}

Value parse_value(Cursor& c);

Value parse_array(Cursor& c) {
    if (c.take() != '[') c.fail("expected '['");
    Array arr;
    for (;;) {
        skip_ws_any(c);
        if (c.done()) c.fail("unterminated array");
        if (c.peek() == ']') {
            c.take();
            break;
        }
        arr.push_back(parse_value(c));
        skip_ws_any(c);
        if (c.done()) c.fail("unterminated array");
        if (c.peek() == ',') {
            c.take();
            continue;
        }
        if (c.peek() == ']') {
            c.take();
            break;
        }
        c.fail("expected ',' or ']' in array");
    }
    return Value{Value::Storage{std::move(arr)}};
}

Value parse_value(Cursor& c) {
    skip_ws_inline(c);
    if (c.done()) c.fail("expected value");
    char ch = c.peek();
    if (ch == '"') return Value{Value::Storage{parse_basic_string(c)}};
    if (ch == '[') return parse_array(c);
    if (looks_numeric(ch) || std::isalpha(static_cast<unsigned char>(ch))) {
        return parse_number_or_symbol(c);
    }
    c.fail(std::string("unexpected character '") + ch + "'");
}

std::vector<std::string> parse_dotted_key(Cursor& c) {
    std::vector<std::string> parts;
    for (;;) {
        skip_ws_inline(c);
        if (!c.done() && c.peek() == '"') {
            parts.push_back(parse_basic_string(c));
        } else {
            parts.push_back(parse_bare_key(c));
        }
        skip_ws_inline(c);
        if (!c.done() && c.peek() == '.') {
            c.take();
            continue;
        }
        return parts;
    }
}

Table& descend(Table& root, const std::vector<std::string>& path, Cursor& c) {
    Table* t = &root;
    for (const std::string& part : path) {
        auto it = t->find(part);
        if (it == t->end()) {
            it = t->emplace(part, Value{Value::Storage{Table{}}}).first;
        } else if (!it->second.is_table()) {
            c.fail("key '" + part + "' already holds a non-table value");
        }
        t = &it->second.as_table_mut();
    }
    return *t;
}

} // namespace

Table parse(const std::string& text) {
    Cursor c{text};
    Table root;
    Table* current = &root;
    for (;;) {
        skip_ws_any(c);
        if (c.done()) break;
        if (c.peek() == '[') {
            c.take();
            skip_ws_inline(c);
            std::vector<std::string> path = parse_dotted_key(c);
            skip_ws_inline(c);
            if (c.done() || c.take() != ']') c.fail("expected ']' after table header");
            current = &descend(root, path, c);
            skip_ws_inline(c);
            skip_comment(c);
            continue;
        }
        std::vector<std::string> path = parse_dotted_key(c);
        skip_ws_inline(c);
        if (c.done() || c.take() != '=') c.fail("expected '=' after key");
        Value v = parse_value(c);
        skip_ws_inline(c);
        skip_comment(c);
        Table* target = current;
        if (path.size() > 1) {
            std::vector<std::string> prefix(path.begin(), path.end() - 1);
            target = &descend(*current, prefix, c);
        }
        const std::string& leaf = path.back();
        if (target->count(leaf)) c.fail("duplicate key '" + leaf + "'");
        target->emplace(leaf, std::move(v));
    }
    return root;
}

Table parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const Value* find(const Table& t, const std::string& dotted_key) {
    const Table* cur = &t;
    std::size_t start = 0;
    for (;;) {
        std::size_t dot = dotted_key.find('.', start);
        std::string part = dotted_key.substr(start, dot == std::string::npos
                                                        ? std::string::npos
                                                        : dot - start);
        auto it = cur->find(part);
        if (it == cur->end()) return nullptr;
        if (dot == std::string::npos) return &it->second;
        if (!it->second.is_table()) return nullptr;
        cur = &it->second.as_table();
        start = dot + 1;
    }
}

namespace {
const Value& require(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) throw ParseError("missing required key '" + key + "'");
    return *v;
}
} // namespace

bool require_bool(const Table& t, const std::string& key) { return require(t, key).as_bool(); }
std::int64_t require_int(const Table& t, const std::string& key) { return require(t, key).as_int(); }
double require_double(const Table& t, const std::string& key) { return require(t, key).as_double(); }
std::string require_string(const Table& t, const std::string& key) { return require(t, key).as_string(); }
const Array& require_array(const Table& t, const std::string& key) { return require(t, key).as_array(); }
const Table& require_table(const Table& t, const std::string& key) { return require(t, key).as_table(); }

bool get_bool(const Table& t, const std::string& key, bool fallback) {
    const Value* v = find(t, key);
    return v ? v->as_bool() : fallback;
}
std::int64_t get_int(const Table& t, const std::string& key, std::int64_t fallback) {
    const Value* v = find(t, key);
    return v ? v->as_int() : fallback;
}
double get_double(const Table& t, const std::string& key, double fallback) {
    const Value* v = find(t, key);
    return v ? v->as_double() : fallback;
}
std::string get_string(const Table& t, const std::string& key, const std::string& fallback) {
    const Value* v = find(t, key);
    return v ? v->as_string() : fallback;
}

std::vector<double> as_double_array(const Array& a, const std::string& what) {
    std::vector<double> out;
    out.reserve(a.size());
    for (const Value& v : a) {
        if (!v.is_int() && !v.is_float()) throw ParseError(what + ": expected numeric array");
        out.push_back(v.as_double());
    }
    return out;
}

std::vector<std::int64_t> as_int_array(const Array& a, const std::string& what) {
    std::vector<std::int64_t> out;
    out.reserve(a.size());
    for (const Value& v : a) {
        if (!v.is_int()) throw ParseError(what + ": expected integer array");
        out.push_back(v.as_int());
    }
    return out;
}

} // namespace rlab::toml
