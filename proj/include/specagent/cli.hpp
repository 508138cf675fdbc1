// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace specagent {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Command-line entry point. Reports go to `out`, diagnostics to `err`.
/// Never throws; failures map to kExitUsage or kExitRuntime.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace specagent
