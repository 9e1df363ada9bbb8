#include <iostream>
#include <string>
#include <vector>

#include "mrcs_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mrcs::cli::run_cli(args, std::cout, std::cerr);
}
