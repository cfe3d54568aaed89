#include <iostream>
#include <string>
#include <vector>

#include "riskplan/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return riskplan::cli_main(args, std::cout, std::cerr);
}
