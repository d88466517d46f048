#include <iostream>
#include <string>
#include <vector>

#include "cahar/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cahar::run_cli(args, std::cout, std::cerr);
}
