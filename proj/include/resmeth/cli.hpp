#pragma once

#include <iosfwd>
#include <map>
#include <string>

namespace resmeth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitFailure = 3;

/// Flat `key = value` lines; '#' starts a comment. Duplicate keys are errors.
std::map<std::string, std::string> parse_config(std::istream& in);

/// Entry point of the resmeth executable. Reports go to files named on the
/// command line or to `out`; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace resmeth::cli
