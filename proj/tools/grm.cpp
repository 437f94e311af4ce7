#include <iostream>
#include <string>
#include <vector>

#include "grm/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return grm::cli::dispatch(args, std::cout, std::cerr);
}
