#pragma once

#include <string>

namespace pid {

// write-temp-then-rename in the target directory
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// %.17g: shortest text that round-trips a double through strtod
std::string format_double(double v);

}  // namespace pid
