#include <string>
#include <vector>

#include "gedanken/manifest.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gedanken::run_cli(args);
}
