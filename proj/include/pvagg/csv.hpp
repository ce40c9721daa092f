#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pvagg {

/// Fixed 9-significant-digit decimal used by every CSV this library writes.
std::string fmt9(double v);

std::vector<std::string> split_csv_line(std::string_view line);

double parse_double(const std::string& s);

}  // namespace pvagg
