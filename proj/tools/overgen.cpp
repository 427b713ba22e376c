#include <string>
#include <vector>

#include "overgen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return overgen::cli::dispatch(args);
}
