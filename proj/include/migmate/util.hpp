#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace migmate::util {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Appends without truncating; creates the file when missing.
void append_file(const std::filesystem::path& path, std::string_view content);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Splits keeping each line's terminating '\n' (the last line may lack one).
std::vector<std::string> split_lines_keep(std::string_view text);

/// UTC timestamp with millisecond precision, e.g. 2026-10-14T09:30:00.123Z.
std::string now_iso8601();

std::string random_hex(std::size_t bytes);

/// Single-quotes `s` for /bin/sh.
std::string shell_quote(std::string_view s);

/// Replaces every occurrence of `from` by `to`.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

/// Forward-slash relative path of `p` under `base`.
std::string relative_generic(const std::filesystem::path& p, const std::filesystem::path& base);

/// Rejects overlong forms, surrogates and code points above U+10FFFF.
bool is_valid_utf8(std::string_view s);

} // namespace migmate::util
