#include <iostream>

#include "fvsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fvsim::run_cli(args, std::cout, std::cerr);
}
