#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace steps::io {

std::string read_file(const std::filesystem::path& path);

// Write-temp-then-rename. A failed command never leaves a partial file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

// Calls fn(line_number, line) for every non-blank line. Line numbers are
// 1-based to match error messages.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const std::string&)>& fn);

std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace steps::io
