#include <iostream>
#include <string>
#include <vector>

#include "ddkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ddkit::cli::dispatch(args, std::cout, std::cerr);
}
