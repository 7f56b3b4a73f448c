#pragma once

#include <cstddef>
#include <string>

namespace fullend::util {

/// Writes "warning: <msg>" to stderr unless quiet mode is on; always counted.
void warn(const std::string& msg);
std::size_t warning_count();
void set_quiet(bool quiet);

}  // namespace fullend::util
