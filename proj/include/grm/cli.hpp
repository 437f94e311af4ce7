#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace grm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,       // bad command line
  kValidation = 2,  // bad config, bad input file or shape
  kRuntime = 3,     // parse failure, divergence
};

// Runs one subcommand: gen-data, build-graph, train, eval, explain, sweep.
// `args[0]` is the program name. Outputs go to --out, else $GRM_OUTPUT_DIR,
// else the config's output_dir, else the working directory.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grm::cli
