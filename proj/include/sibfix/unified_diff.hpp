#pragma once

#include <string>
#include <string_view>

namespace sibfix {

/// Line-based unified diff (Myers) in the format produced by `diff -u`,
/// with `--- old_label` / `+++ new_label` headers and no timestamps.
/// Returns an empty string when the texts are identical.
std::string unified_diff(std::string_view old_text, std::string_view new_text,
                         std::string_view old_label, std::string_view new_label,
                         int context = 3);

}  // namespace sibfix
