#pragma once

#include <iosfwd>

namespace netlwr::cli {

/// Exit codes: 0 success, 1 usage, 2 scenario error, 3 runtime or verification failure.
enum ExitCode { kOk = 0, kUsage = 1, kScenario = 2, kFailure = 3 };

/// Entry point for the `netlwr` binary: run, compare, verify, riemann.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace netlwr::cli
