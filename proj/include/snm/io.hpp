#pragma once

#include <string>
#include <string_view>

namespace snm {

/// Writes `contents` to a sibling temporary file and renames it over `path`, so
/// readers never observe a partial file. Throws Error(IO) on failure.
void write_file_atomic(const std::string& path, std::string_view contents);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace snm
