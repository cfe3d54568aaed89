#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace riskplan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand (plan, simulate, evaluate, risk). `args` excludes the
/// program name. Usage errors return 2, data errors 1.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace riskplan
