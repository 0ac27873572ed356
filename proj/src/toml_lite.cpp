#include "migmate/toml_lite.hpp"

#include "migmate/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>

namespace migmate::toml {

const Value* Value::get(std::string_view key) const
{
    for (const auto& [k, v] : fields)
        if (k == key)
            return &v;
    return nullptr;
}

Value* Value::get(std::string_view key)
{
    for (auto& [k, v] : fields)
        if (k == key)
            return &v;
    return nullptr;
}

const Value* Value::at_path(const std::vector<std::string>& path) const
{
    const Value* cur = this;
    for (const auto& key : path) {
        if (!cur->is_table())
            return nullptr;
        cur = cur->get(key);
        if (!cur)
            return nullptr;
    }
    return cur;
}

namespace {

bool is_bare_key_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

void append_utf8(std::string& out, std::uint32_t cp)
{
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Value run()
    {
        Value root;
        root.kind = Kind::Table;
        Value* current = &root;
        while (!eof()) {
            skip_ws();
            if (eof())
                break;
            char c = peek();
            if (c == '#') {
                skip_comment();
                continue;
            }
            if (c == '\n' || c == '\r') {
                consume_newline();
                continue;
            }
            if (c == '[') {
                current = parse_header(root);
            } else {
                parse_key_value(*current);
            }
            end_of_line();
        }
        return root;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::set<std::vector<std::string>> headed_;

    bool eof() const { return pos_ >= src_.size(); }
    char peek(std::size_t ahead = 0) const
    {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }
    bool starts_with(std::string_view s) const { return src_.substr(pos_).starts_with(s); }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorCode::InvalidToml, "invalid TOML at line " + std::to_string(line_) + ": " + what);
    }

    void advance(std::size_t n = 1)
    {
        for (std::size_t i = 0; i < n && !eof(); ++i) {
            if (src_[pos_] == '\n')
                ++line_;
            ++pos_;
        }
    }

    void skip_ws()
    {
        while (!eof() && (peek() == ' ' || peek() == '\t'))
            advance();
    }

    void skip_comment()
    {
        while (!eof() && peek() != '\n')
            advance();
    }

    void consume_newline()
    {
        if (peek() == '\r') {
            if (peek(1) != '\n')
                fail("bare carriage return");
            advance();
        }
        if (peek() == '\n')
            advance();
    }

    void skip_ws_comments_newlines()
    {
        for (;;) {
            skip_ws();
            if (peek() == '#')
                skip_comment();
            else if (peek() == '\n' || peek() == '\r')
                consume_newline();
            else
                return;
        }
    }

    void end_of_line()
    {
        skip_ws();
        if (peek() == '#')
            skip_comment();
        if (eof())
            return;
        if (peek() != '\n' && peek() != '\r')
            fail("expected end of line");
        consume_newline();
    }

    std::string parse_simple_key()
    {
        char c = peek();
        if (c == '"') {
            Value v;
            parse_basic_string(v);
            return v.text;
        }
        if (c == '\'') {
            Value v;
            parse_literal_string(v);
            return v.text;
        }
        std::string key;
        while (!eof() && is_bare_key_char(peek())) {
            key += peek();
            advance();
        }
        if (key.empty())
            fail("expected key");
        return key;
    }

    std::vector<std::string> parse_key()
    {
        std::vector<std::string> parts;
        for (;;) {
            skip_ws();
            parts.push_back(parse_simple_key());
            skip_ws();
            if (peek() != '.')
                break;
            advance();
        }
        return parts;
    }

    static Value* descend(Value& table, const std::string& key, bool for_header)
    {
        Value* next = table.get(key);
        if (!next) {
            Value t;
            t.kind = Kind::Table;
            table.fields.emplace_back(key, std::move(t));
            return &table.fields.back().second;
        }
        if (next->is_table())
            return next;
        if (for_header && next->is_array() && !next->items.empty() && next->items.back().is_table())
            return &next->items.back();
        return nullptr;
    }

    Value* parse_header(Value& root)
    {
        advance();
        bool array_of_tables = false;
        if (peek() == '[') {
            array_of_tables = true;
            advance();
        }
        auto path = parse_key();
        skip_ws();
        if (peek() != ']')
            fail("unterminated table header");
        advance();
        if (array_of_tables) {
            if (peek() != ']')
                fail("unterminated array-of-tables header");
            advance();
        }
        Value* cur = &root;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            cur = descend(*cur, path[i], true);
            if (!cur)
                fail("key '" + path[i] + "' is not a table");
        }
        const std::string& last = path.back();
        if (array_of_tables) {
            // A new array element reopens every subtable below it.
            std::erase_if(headed_, [&](const std::vector<std::string>& h) {
                return h.size() > path.size() && std::equal(path.begin(), path.end(), h.begin());
            });
            Value* arr = cur->get(last);
            if (!arr) {
                Value a;
                a.kind = Kind::Array;
                cur->fields.emplace_back(last, std::move(a));
                arr = &cur->fields.back().second;
            } else if (!arr->is_array()) {
                fail("key '" + last + "' is not an array of tables");
            }
            Value t;
            t.kind = Kind::Table;
            arr->items.push_back(std::move(t));
            return &arr->items.back();
        }
        Value* table = descend(*cur, last, true);
        if (!table)
            fail("key '" + last + "' redefined as a table");
        if (!headed_.insert(path).second)
            fail("table '" + last + "' defined twice");
        return table;
    }

    void parse_key_value(Value& table)
    {
        auto path = parse_key();
        skip_ws();
        if (peek() != '=')
            fail("expected '=' after key");
        advance();
        skip_ws();
        Value value = parse_value();
        Value* cur = &table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            cur = descend(*cur, path[i], false);
            if (!cur)
                fail("key '" + path[i] + "' is not a table");
        }
        if (cur->get(path.back()))
            fail("duplicate key '" + path.back() + "'");
        cur->fields.emplace_back(path.back(), std::move(value));
    }

    Value parse_value()
    {
        if (eof())
            fail("expected value");
        char c = peek();
        Value v;
        v.line = line_;
        if (c == '"') {
            parse_basic_string(v);
        } else if (c == '\'') {
            parse_literal_string(v);
        } else if (c == '[') {
            parse_array(v);
        } else if (c == '{') {
            parse_inline_table(v);
        } else {
            parse_scalar(v);
        }
        return v;
    }

    void parse_escape(std::string& out)
    {
        advance(); // backslash
        char e = peek();
        switch (e) {
        case 'b': out += '\b'; advance(); return;
        case 't': out += '\t'; advance(); return;
        case 'n': out += '\n'; advance(); return;
        case 'f': out += '\f'; advance(); return;
        case 'r': out += '\r'; advance(); return;
        case '"': out += '"'; advance(); return;
        case '\\': out += '\\'; advance(); return;
        case 'u':
        case 'U': {
            std::size_t len = e == 'u' ? 4 : 8;
            advance();
            std::uint32_t cp = 0;
            for (std::size_t i = 0; i < len; ++i) {
                char h = peek();
                if (!std::isxdigit(static_cast<unsigned char>(h)))
                    fail("bad unicode escape");
                cp = cp * 16 + static_cast<std::uint32_t>(std::isdigit(static_cast<unsigned char>(h))
                                                               ? h - '0'
                                                               : std::tolower(h) - 'a' + 10);
                advance();
            }
            append_utf8(out, cp);
            return;
        }
        default:
            fail("invalid escape sequence");
        }
    }

    void parse_basic_string(Value& v)
    {
        v.kind = Kind::String;
        if (starts_with("\"\"\"")) {
            v.quote = QuoteStyle::MultiBasic;
            advance(3);
            if (peek() == '\n' || peek() == '\r')
                consume_newline();
            v.raw_begin = pos_;
            for (;;) {
                if (eof())
                    fail("unterminated multi-line string");
                if (starts_with("\"\"\"")) {
                    // Up to two quotes may directly precede the closing delimiter.
                    std::size_t extra = 0;
                    while (peek(3 + extra) == '"' && extra < 2)
                        ++extra;
                    v.text.append(extra, '"');
                    v.raw_end = pos_ + extra;
                    advance(3 + extra);
                    return;
                }
                char c = peek();
                if (c == '\\') {
                    std::size_t look = pos_ + 1;
                    while (look < src_.size() && (src_[look] == ' ' || src_[look] == '\t'))
                        ++look;
                    if (look < src_.size() && (src_[look] == '\n' || src_[look] == '\r')) {
                        advance(look - pos_);
                        skip_ws_comments_free();
                        continue;
                    }
                    parse_escape(v.text);
                    continue;
                }
                v.text += c;
                advance();
            }
        }
        v.quote = QuoteStyle::Basic;
        advance();
        v.raw_begin = pos_;
        for (;;) {
            if (eof() || peek() == '\n')
                fail("unterminated string");
            char c = peek();
            if (c == '"') {
                v.raw_end = pos_;
                advance();
                return;
            }
            if (c == '\\') {
                parse_escape(v.text);
                continue;
            }
            v.text += c;
            advance();
        }
    }

    // Line-ending backslash: trim all whitespace and newlines that follow.
    void skip_ws_comments_free()
    {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\n' || peek() == '\r'))
            advance();
    }

    void parse_literal_string(Value& v)
    {
        v.kind = Kind::String;
        if (starts_with("'''")) {
            v.quote = QuoteStyle::MultiLiteral;
            advance(3);
            if (peek() == '\n' || peek() == '\r')
                consume_newline();
            v.raw_begin = pos_;
            for (;;) {
                if (eof())
                    fail("unterminated multi-line literal string");
                if (starts_with("'''")) {
                    std::size_t extra = 0;
                    while (peek(3 + extra) == '\'' && extra < 2)
                        ++extra;
                    v.text.append(extra, '\'');
                    v.raw_end = pos_ + extra;
                    advance(3 + extra);
                    return;
                }
                v.text += peek();
                advance();
            }
        }
        v.quote = QuoteStyle::Literal;
        advance();
        v.raw_begin = pos_;
        for (;;) {
            if (eof() || peek() == '\n')
                fail("unterminated literal string");
            if (peek() == '\'') {
                v.raw_end = pos_;
                advance();
                return;
            }
            v.text += peek();
            advance();
        }
    }

    void parse_array(Value& v)
    {
        v.kind = Kind::Array;
        advance();
        for (;;) {
            skip_ws_comments_newlines();
            if (eof())
                fail("unterminated array");
            if (peek() == ']') {
                advance();
                return;
            }
            v.items.push_back(parse_value());
            skip_ws_comments_newlines();
            if (peek() == ',') {
                advance();
                continue;
            }
            if (peek() == ']') {
                advance();
                return;
            }
            fail("expected ',' or ']' in array");
        }
    }

    void parse_inline_table(Value& v)
    {
        v.kind = Kind::Table;
        advance();
        skip_ws();
        if (peek() == '}') {
            advance();
            return;
        }
        for (;;) {
            parse_key_value(v);
            skip_ws();
            if (peek() == ',') {
                advance();
                skip_ws();
                continue;
            }
            if (peek() == '}') {
                advance();
                return;
            }
            fail("expected ',' or '}' in inline table");
        }
    }

    void parse_scalar(Value& v)
    {
        std::size_t start = pos_;
        auto token_char = [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
                   c == '_' || c == ':';
        };
        while (!eof() && token_char(peek()))
            advance();
        // Local date-time with a space separator.
        if (pos_ - start == 10 && peek() == ' ' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            advance();
            while (!eof() && token_char(peek()))
                advance();
        }
        std::string tok(src_.substr(start, pos_ - start));
        if (tok.empty())
            fail("expected value");
        v.text = tok;
        if (tok == "true" || tok == "false") {
            v.kind = Kind::Boolean;
            return;
        }
        if (tok == "inf" || tok == "+inf" || tok == "-inf" || tok == "nan" || tok == "+nan" || tok == "-nan") {
            v.kind = Kind::Float;
            return;
        }
        bool has_digit = std::any_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
        if (!has_digit)
            fail("invalid value '" + tok + "'");
        if (tok.size() >= 10 && tok[4] == '-' && std::isdigit(static_cast<unsigned char>(tok[0]))) {
            v.kind = Kind::Datetime;
            return;
        }
        if (tok.find(':') != std::string::npos) {
            v.kind = Kind::Datetime;
            return;
        }
        bool hex_like = tok.starts_with("0x") || tok.starts_with("0o") || tok.starts_with("0b");
        bool is_float = !hex_like && tok.find_first_of(".eE") != std::string::npos;
        for (char c : tok) {
            bool ok = std::isdigit(static_cast<unsigned char>(c)) || c == '_' || c == '+' || c == '-' ||
                      (is_float && (c == '.' || c == 'e' || c == 'E')) ||
                      (hex_like && std::isalnum(static_cast<unsigned char>(c)));
            if (!ok)
                fail("invalid value '" + tok + "'");
        }
        v.kind = is_float ? Kind::Float : Kind::Integer;
    }
};

} // namespace

Value parse(std::string_view source)
{
    return Parser(source).run();
}

} // namespace migmate::toml
