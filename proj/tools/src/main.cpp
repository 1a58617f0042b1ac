#include <iostream>
#include <string>
#include <vector>

#include "gomp_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gomp::cli::run(args, std::cout, std::cerr);
}
