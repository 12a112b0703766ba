#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace propbench {

/// Exit codes: 0 success, 1 usage error, 2 data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

int cli_dispatch(int argc, char** argv);
/// In-process entry point; `args` excludes the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count: PROPBENCH_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
unsigned worker_count();

}  // namespace propbench
