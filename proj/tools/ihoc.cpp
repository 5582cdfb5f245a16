#include <iostream>
#include <string>
#include <vector>

#include "ihoc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ihoc::run_cli(args, std::cout, std::cerr);
}
