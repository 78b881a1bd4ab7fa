#include <iostream>
#include <string>
#include <vector>

#include "spsiv/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return spsiv::cli::run_command(args, std::cout, std::cerr);
}
