#pragma once

#include "gaitcont/archive.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace gaitcont {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitEmptyScan = 2, kExitQueryFailed = 3 };

struct ScanOutcome {
    DiagnosticReport report;
    std::vector<SingularEG> singular;
    int exit_code = kExitOk;
};

// Scan of the first equilibrium of model at zero control, printed to out.
ScanOutcome run_scan(const HybridModel& model, double a, double b, int steps, std::ostream& out);
std::string format_singular(const std::vector<SingularEG>& singular);

// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gaitcont
