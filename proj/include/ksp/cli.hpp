#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ksp::cli {

/// Runs one subcommand. Returns 0 on success, 1 on validation errors (bad
/// flags, bad inputs, failed gradcheck) and 2 on runtime errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace ksp::cli
