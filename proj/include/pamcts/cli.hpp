#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pamcts {

// Subcommands: train, plan, run, plot. Returns 0 on success, 1 on usage
// errors and 2 on runtime failures. args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace pamcts
