#include <iostream>
#include <string>
#include <vector>

#include "ammi/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ammi::run_cli(args, std::cout, std::cerr);
}
