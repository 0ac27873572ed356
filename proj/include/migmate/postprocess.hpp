#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace migmate::postprocess {

/// Replaces every elision marker in `migrated` with the span of `original` it
/// stands for, aligning the two files on their def/class header lines.
/// Marker lines that also occur verbatim in `original` are treated as real comments.
/// Throws SpliceAmbiguous when a marker has no anchor or maps to nothing.
std::string reinclude(std::string_view original, std::string_view migrated, const std::vector<std::string>& phrases);

/// 1-based lines of `def` headers that contain an `await` in their own body
/// (not a nested def's) and lack the async keyword.
std::vector<std::size_t> sync_defs_with_await(std::string_view code);

struct AsyncFix {
    std::string code;
    std::vector<std::size_t> rewritten_lines;
};

/// Turns each def reported by sync_defs_with_await into `async def`. Idempotent.
AsyncFix add_async(std::string_view code);

} // namespace migmate::postprocess
