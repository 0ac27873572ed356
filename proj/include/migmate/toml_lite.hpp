#pragma once

// A small TOML reader that keeps source positions of string values so that
// callers can rewrite a single string in place without re-emitting the file.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace migmate::toml {

enum class Kind { String, Integer, Float, Boolean, Datetime, Array, Table };

enum class QuoteStyle { Basic, Literal, MultiBasic, MultiLiteral };

struct Value {
    Kind kind = Kind::Table;
    /// Decoded text for strings, raw token text for other scalars.
    std::string text;
    /// Byte offsets of the raw string body (between the quotes) in the source.
    std::size_t raw_begin = 0;
    std::size_t raw_end = 0;
    /// 1-based line of the value's first byte.
    std::size_t line = 0;
    QuoteStyle quote = QuoteStyle::Basic;

    std::vector<Value> items;
    std::vector<std::pair<std::string, Value>> fields;

    const Value* get(std::string_view key) const;
    Value* get(std::string_view key);
    /// Walks a dotted path of table keys.
    const Value* at_path(const std::vector<std::string>& path) const;

    bool is_table() const { return kind == Kind::Table; }
    bool is_array() const { return kind == Kind::Array; }
    bool is_string() const { return kind == Kind::String; }
};

/// Throws migmate::Error(InvalidToml) with a line number on malformed input.
Value parse(std::string_view source);

} // namespace migmate::toml
