#include "migmate/postprocess.hpp"

#include "migmate/error.hpp"
#include "migmate/llm.hpp"
#include "migmate/util.hpp"

#include <algorithm>
#include <optional>
#include <regex>
#include <set>

namespace migmate::postprocess {

namespace {

// Same-length copy of `code` with string literals and comments blanked out.
std::string mask_code(std::string_view code)
{
    std::string out(code);
    std::size_t i = 0;
    const std::size_t n = code.size();
    auto blank = [&](std::size_t from, std::size_t to) {
        for (std::size_t k = from; k < to && k < n; ++k)
            if (out[k] != '\n')
                out[k] = ' ';
    };
    while (i < n) {
        char c = code[i];
        if (c == '#') {
            std::size_t end = code.find('\n', i);
            if (end == std::string_view::npos)
                end = n;
            blank(i, end);
            i = end;
            continue;
        }
        if (c == '\'' || c == '"') {
            bool triple = i + 2 < n && code[i + 1] == c && code[i + 2] == c;
            std::size_t j = i + (triple ? 3 : 1);
            while (j < n) {
                if (code[j] == '\\') {
                    j += 2;
                    continue;
                }
                if (triple) {
                    if (code[j] == c && j + 2 < n && code[j + 1] == c && code[j + 2] == c) {
                        j += 3;
                        break;
                    }
                } else if (code[j] == c) {
                    ++j;
                    break;
                } else if (code[j] == '\n') {
                    break;
                }
                ++j;
            }
            j = std::min(j, n);
            blank(i, j);
            i = j;
            continue;
        }
        ++i;
    }
    return out;
}

std::vector<std::string> lines_of(std::string_view text)
{
    return util::split_lines_keep(text);
}

std::size_t indent_of(std::string_view line)
{
    std::size_t col = 0;
    for (char c : line) {
        if (c == ' ')
            ++col;
        else if (c == '\t')
            col = (col / 8 + 1) * 8;
        else
            break;
    }
    return col;
}

bool is_blank(std::string_view line)
{
    return util::trim(line).empty();
}

std::string strip_eol(std::string_view line)
{
    std::string s(line);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r'))
        s.pop_back();
    return s;
}

struct Header {
    std::size_t line = 0; // 0-based
    std::size_t indent = 0;
    bool is_class = false;
    std::string name;

    bool same_key(const Header& o) const { return indent == o.indent && is_class == o.is_class && name == o.name; }
};

const std::regex& header_re()
{
    static const std::regex re(R"(^[ \t]*(async[ \t]+def|def|class)[ \t]+([A-Za-z_][A-Za-z0-9_]*))");
    return re;
}

struct Source {
    std::vector<std::string> lines;
    std::vector<std::string> masked;
    std::vector<Header> headers;
    std::vector<std::optional<std::size_t>> header_at; // line -> index into headers

    explicit Source(std::string_view text)
        : lines(lines_of(text)), masked(lines_of(mask_code(text))), header_at(lines.size())
    {
        masked.resize(lines.size());
        for (std::size_t i = 0; i < lines.size(); ++i) {
            std::smatch m;
            const std::string& probe = masked[i];
            if (std::regex_search(probe, m, header_re())) {
                header_at[i] = headers.size();
                headers.push_back(Header{i, indent_of(lines[i]), m[1].str() == "class", m[2].str()});
            }
        }
    }

    std::size_t size() const { return lines.size(); }
    bool blank(std::size_t i) const { return is_blank(masked[i]); }

    // First line after a (possibly multi-line) header.
    std::size_t header_end(std::size_t h) const
    {
        int depth = 0;
        std::size_t i = h;
        do {
            for (char c : masked[i]) {
                if (c == '(' || c == '[' || c == '{')
                    ++depth;
                else if (c == ')' || c == ']' || c == '}')
                    --depth;
            }
            ++i;
        } while (depth > 0 && i < lines.size());
        return i;
    }

    // One past the last non-blank line of the block opened at `h`.
    std::size_t block_end(std::size_t h) const
    {
        std::size_t ind = indent_of(lines[h]);
        std::size_t j = header_end(h);
        std::size_t last = j;
        while (j < lines.size()) {
            if (blank(j)) {
                ++j;
                continue;
            }
            if (indent_of(lines[j]) <= ind)
                break;
            last = ++j;
        }
        return last;
    }

    std::size_t decorator_start(std::size_t h) const
    {
        std::size_t ind = indent_of(lines[h]);
        std::size_t k = h;
        while (k > 0) {
            auto t = util::trim(masked[k - 1]);
            if (t.empty() || t.front() != '@' || indent_of(lines[k - 1]) != ind)
                break;
            --k;
        }
        return k;
    }
};

// Longest common subsequence over two sequences; returns matched index pairs in order.
template <class Eq>
std::vector<std::pair<std::size_t, std::size_t>> lcs_pairs(std::size_t n, std::size_t m, Eq eq)
{
    std::vector<std::vector<std::size_t>> t(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            t[i][j] = eq(i, j) ? t[i + 1][j + 1] + 1 : std::max(t[i + 1][j], t[i][j + 1]);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        if (eq(i, j)) {
            out.emplace_back(i, j);
            ++i;
            ++j;
        } else if (t[i + 1][j] >= t[i][j + 1]) {
            ++i;
        } else {
            ++j;
        }
    }
    return out;
}

// Matched original index for each line of `part` (lines [from, to) of `mig`) within [lo, hi) of `orig`.
std::vector<std::pair<std::size_t, std::size_t>> match_lines(const Source& mig, std::size_t from, std::size_t to,
                                                             const Source& orig, std::size_t lo, std::size_t hi)
{
    if (from >= to || lo >= hi)
        return {};
    auto pairs = lcs_pairs(to - from, hi - lo, [&](std::size_t a, std::size_t b) {
        return !mig.blank(from + a) && util::trim(mig.lines[from + a]) == util::trim(orig.lines[lo + b]);
    });
    for (auto& [a, b] : pairs) {
        a += from;
        b += lo;
    }
    return pairs;
}

std::size_t nonblank_count(const Source& s, std::size_t from, std::size_t to)
{
    std::size_t c = 0;
    for (std::size_t i = from; i < to; ++i)
        if (!s.blank(i))
            ++c;
    return c;
}

struct Anchor {
    std::size_t mig_line;
    std::size_t orig_line;
};

} // namespace

std::string reinclude(std::string_view original_text, std::string_view migrated_text,
                      const std::vector<std::string>& phrases)
{
    const Source orig(original_text);
    const Source mig(migrated_text);

    std::set<std::string> original_lines;
    for (const auto& l : orig.lines)
        original_lines.insert(std::string(util::trim(l)));

    std::vector<std::size_t> markers;
    for (std::size_t i = 0; i < mig.size(); ++i) {
        auto text = strip_eol(mig.lines[i]);
        if (llm::is_elision_marker(text, phrases) && !original_lines.count(std::string(util::trim(text))))
            markers.push_back(i);
    }
    if (markers.empty())
        return std::string(migrated_text);

    auto pairs = lcs_pairs(mig.headers.size(), orig.headers.size(),
                           [&](std::size_t a, std::size_t b) { return mig.headers[a].same_key(orig.headers[b]); });
    std::vector<Anchor> anchors;
    std::vector<std::optional<std::size_t>> orig_of(mig.size());
    for (auto [a, b] : pairs) {
        anchors.push_back(Anchor{mig.headers[a].line, orig.headers[b].line});
        orig_of[mig.headers[a].line] = orig.headers[b].line;
    }

    std::vector<std::vector<std::string>> replacement(markers.size());
    for (std::size_t k = 0; k < markers.size(); ++k) {
        const std::size_t i = markers[k];
        const std::size_t d = indent_of(mig.lines[i]);
        const std::string where = "elision marker at line " + std::to_string(i + 1);

        // Innermost enclosing header of the marker in the migrated file.
        std::optional<std::size_t> enclosing;
        if (d > 0) {
            std::size_t threshold = d;
            for (std::size_t j = i; j-- > 0;) {
                if (mig.blank(j))
                    continue;
                std::size_t ind = indent_of(mig.lines[j]);
                if (ind >= threshold)
                    continue;
                if (mig.header_at[j]) {
                    enclosing = j;
                    break;
                }
                threshold = ind;
                if (ind == 0)
                    break;
            }
        }
        if (enclosing && !orig_of[*enclosing])
            throw Error(ErrorCode::SpliceAmbiguous, where + " sits in a block with no original counterpart");

        std::size_t level_min = enclosing ? indent_of(mig.lines[*enclosing]) + 1 : 0;
        std::size_t mig_lo = enclosing ? mig.header_end(*enclosing) : 0;
        std::size_t mig_hi = enclosing ? std::max(mig.block_end(*enclosing), i + 1) : mig.size();
        std::size_t orig_lo = enclosing ? orig.header_end(*orig_of[*enclosing]) : 0;
        std::size_t orig_hi = enclosing ? orig.block_end(*orig_of[*enclosing]) : orig.size();

        const Anchor* prev = nullptr;
        const Anchor* next = nullptr;
        for (const auto& a : anchors) {
            std::size_t ind = indent_of(mig.lines[a.mig_line]);
            if (a.mig_line < mig_lo || a.mig_line >= mig_hi || ind < level_min || ind > d)
                continue;
            if (a.orig_line < orig_lo || a.orig_line >= orig_hi)
                continue;
            if (a.mig_line < i)
                prev = &a;
            else if (!next)
                next = &a;
        }
        if (!prev && !next && !enclosing)
            throw Error(ErrorCode::SpliceAmbiguous, where + " has no matching def or class anchor");

        std::size_t start = prev ? orig.block_end(prev->orig_line) : orig_lo;
        std::size_t end = next ? orig.decorator_start(next->orig_line) : orig_hi;

        std::size_t prefix_from = prev ? mig.block_end(prev->mig_line) : mig_lo;
        if (k > 0 && markers[k - 1] + 1 > prefix_from)
            prefix_from = markers[k - 1] + 1;
        prefix_from = std::min(prefix_from, i);
        auto before = match_lines(mig, prefix_from, i, orig, start, end);
        if (!before.empty())
            start = before.back().second + 1;
        else if (enclosing && !prev)
            start = std::min(end, start + nonblank_count(mig, prefix_from, i));

        std::size_t suffix_to = next ? mig.decorator_start(next->mig_line) : mig_hi;
        if (k + 1 < markers.size())
            suffix_to = std::min(suffix_to, markers[k + 1]);
        suffix_to = std::max(suffix_to, i + 1);
        auto after = match_lines(mig, i + 1, suffix_to, orig, start, end);
        if (!after.empty())
            end = after.front().second;
        else if (!next)
            end = end - std::min(end - start, nonblank_count(mig, i + 1, suffix_to));

        while (start < end && util::trim(orig.lines[start]).empty())
            ++start;
        while (end > start && util::trim(orig.lines[end - 1]).empty())
            --end;
        if (start >= end)
            throw Error(ErrorCode::SpliceAmbiguous, where + " maps to an empty original span");
        replacement[k].assign(orig.lines.begin() + static_cast<std::ptrdiff_t>(start),
                              orig.lines.begin() + static_cast<std::ptrdiff_t>(end));
    }

    std::string out;
    std::size_t k = 0;
    for (std::size_t i = 0; i < mig.size(); ++i) {
        if (k < markers.size() && markers[k] == i) {
            for (const auto& l : replacement[k])
                out += l;
            bool marker_had_eol = !mig.lines[i].empty() && mig.lines[i].back() == '\n';
            if (marker_had_eol && !out.empty() && out.back() != '\n')
                out += '\n';
            ++k;
            continue;
        }
        out += mig.lines[i];
    }
    return out;
}

std::vector<std::size_t> sync_defs_with_await(std::string_view code)
{
    const Source src(code);
    static const std::regex await_re(R"((^|[^A-Za-z0-9_])await([^A-Za-z0-9_]|$))");
    static const std::regex async_def_re(R"(^[ \t]*async[ \t]+def[ \t])");
    static const std::regex def_re(R"(^[ \t]*def[ \t])");
    std::set<std::size_t> found;
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (!std::regex_search(src.masked[i], await_re))
            continue;
        std::size_t threshold = indent_of(src.lines[i]);
        for (std::size_t j = i; j-- > 0;) {
            if (src.blank(j))
                continue;
            std::size_t ind = indent_of(src.lines[j]);
            if (ind >= threshold)
                continue;
            const std::string& probe = src.masked[j];
            if (std::regex_search(probe, async_def_re))
                break;
            if (std::regex_search(probe, def_re)) {
                found.insert(j + 1);
                break;
            }
            if (src.header_at[j] || ind == 0)
                break;
            threshold = ind;
        }
    }
    return {found.begin(), found.end()};
}

AsyncFix add_async(std::string_view code)
{
    AsyncFix fix;
    fix.rewritten_lines = sync_defs_with_await(code);
    auto lines = lines_of(code);
    for (std::size_t ln : fix.rewritten_lines) {
        std::string& l = lines[ln - 1];
        std::size_t pos = l.find("def");
        l.insert(pos, "async ");
    }
    for (const auto& l : lines)
        fix.code += l;
    return fix;
}

} // namespace migmate::postprocess
