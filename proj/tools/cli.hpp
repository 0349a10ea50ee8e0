#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pdmkws::cli {

/// Default dataset root when --data is not given.
inline constexpr const char* kDataRootEnv = "PDMKWS_DATA";

/// Runs one `pdm` command line (program name excluded). Returns 0 on success,
/// 1 on a user error (bad flags, bad input files), 2 on an internal error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdmkws::cli
