#pragma once

#include <cstdio>
#include <string>

namespace sarc {

// warnings are advisory; they go to stderr as a single machine-parseable line
inline void warn(const std::string& msg) { std::fprintf(stderr, "warning: %s\n", msg.c_str()); }

}  // namespace sarc
