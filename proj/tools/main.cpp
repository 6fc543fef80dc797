#include <iostream>
#include <string>
#include <vector>

#include "meshrect/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return meshrect::run_cli(args, std::cout, std::cerr);
}
