#include <iostream>

#include "studentsim/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return studentsim::cli::run_cli(args, std::cout, std::cerr);
}
