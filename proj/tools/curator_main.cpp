#include <iostream>
#include <string>
#include <vector>

#include "curator/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return curator::cli_main(args, std::cout, std::cerr);
}
