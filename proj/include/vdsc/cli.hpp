#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vdsc::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kSimulationError = 3,
    kIoError = 4,
};

/// Entry point behind the vpsef_dsc executable. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vdsc::cli
